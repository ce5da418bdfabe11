//! R5 = {(wx, x) : w over {0,1}, x a single symbol} machine: remember the
//! last symbol read, print it at the end marker, accept. Plain determinism;
//! the interesting direction is that no quantum machine can do this.

use super::SpecBuilder;
use crate::machine::{Alphabet, InputSymbol, Kind, TransducerSpec};
use crate::Result;

pub fn build_dfst() -> Result<TransducerSpec> {
    let ia = Alphabet::new(["0", "1"])?;
    let oa = Alphabet::new(["0", "1"])?;
    let mut b = SpecBuilder::new_transducer(Kind::Deterministic, ia, oa);

    let start = b.state("start");
    b.set_initial(start);
    let last: Vec<usize> = (0..2).map(|x| b.state(format!("last[{x}]"))).collect();
    let acc = b.state("acc");
    b.accept(acc);
    let rej = b.state("rej");
    b.reject(rej);

    for bit in 0..2usize {
        let sym = InputSymbol::Letter(bit);
        b.edge(sym, start, last[bit]);
        b.edge(sym, last[0], last[bit]);
        b.edge(sym, last[1], last[bit]);
    }
    b.edge(InputSymbol::End, start, rej); // empty input has no last symbol
    for bit in 0..2usize {
        b.edge(InputSymbol::End, last[bit], acc);
        b.print(InputSymbol::End, last[bit], vec![bit as u8]);
    }
    b.build()
}
