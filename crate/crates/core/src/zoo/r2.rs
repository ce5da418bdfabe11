//! R2 = {(w2w, w) : w over {0,1}} machine.
//!
//! Three equal-amplitude branches: copy everything before the separator,
//! copy everything after it, or idle and reject at the end marker. On w2w
//! the two copying branches agree on the output and together accept with
//! probability 2/3; on x2y with x != y each candidate gets 1/3.

use super::{RejPool, SpecBuilder};
use crate::machine::{Alphabet, InputSymbol, Kind, TransducerSpec};
use crate::{C64, Result};

pub fn build_qfst() -> Result<TransducerSpec> {
    let ia = Alphabet::new(["0", "1", "2"])?;
    let oa = Alphabet::new(["0", "1"])?;
    let mut b = SpecBuilder::new_transducer(Kind::Quantum, ia, oa);
    let mut pool = RejPool::new();
    let sep = InputSymbol::Letter(2);

    let q0 = b.state("q0");
    b.set_initial(q0);
    let x_copy = b.state("copy-x");
    let x_done = b.state("copy-x-done");
    let y_wait = b.state("copy-y-wait");
    let y_copy = b.state("copy-y");
    let idle = b.state("idle");

    let amp = C64::new(1.0 / 3.0_f64.sqrt(), 0.0);
    b.row(
        InputSymbol::Init,
        q0,
        vec![(x_copy, amp), (y_wait, amp), (idle, amp)],
    );

    for bit in 0..2u8 {
        let sym = InputSymbol::Letter(bit as usize);
        for q in [q0, x_copy, x_done, y_wait, y_copy, idle] {
            b.edge(sym, q, q);
        }
        b.print(sym, x_copy, vec![bit]);
        b.print(sym, y_copy, vec![bit]);
    }
    b.edge(sep, x_copy, x_done);
    b.edge(sep, y_wait, y_copy);
    pool.sink(&mut b, sep, x_done); // second separator is malformed
    pool.sink(&mut b, sep, y_copy);
    b.edge(sep, idle, idle);
    b.edge(sep, q0, q0);

    let acc_x = b.state("acc-x");
    let acc_y = b.state("acc-y");
    b.accept(acc_x);
    b.accept(acc_y);
    b.edge(InputSymbol::End, x_done, acc_x);
    b.edge(InputSymbol::End, y_copy, acc_y);
    for q in [x_copy, y_wait, idle, q0] {
        pool.sink(&mut b, InputSymbol::End, q);
    }
    b.build()
}
