//! Sample automata used as conversion fixtures.
//!
//! `parity` accepts inputs with an even number of 1s, with certainty, via a
//! two-state permutation automaton. `end0` accepts inputs over {0,1} whose
//! final symbol is 0. Last-symbol tracking is irreversible, so no finite
//! permutation automaton computes it for all lengths; the fixture keeps the
//! full input history in a prefix tree of bounded depth (`cap`) and rejects
//! anything longer. Exhaustive conversion tests stay within the bound.

use super::{RejPool, SpecBuilder};
use crate::machine::{Alphabet, InputSymbol};
use crate::qfa::QfaSpec;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleQfa {
    Parity,
    End0,
}

impl SampleQfa {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "parity" => Ok(SampleQfa::Parity),
            "end0" => Ok(SampleQfa::End0),
            other => Err(Error::BadParams(format!("unknown sample automaton {other:?}"))),
        }
    }
}

pub fn build_sample_qfa(which: SampleQfa) -> Result<QfaSpec> {
    match which {
        SampleQfa::Parity => build_parity(),
        SampleQfa::End0 => build_end0(8),
    }
}

fn build_parity() -> Result<QfaSpec> {
    let ia = Alphabet::new(["0", "1"])?;
    let mut b = SpecBuilder::new_qfa(ia);
    let even = b.state("even");
    b.set_initial(even);
    let odd = b.state("odd");
    let acc = b.state("acc");
    b.accept(acc);
    let rej = b.state("rej");
    b.reject(rej);

    b.edge(InputSymbol::Letter(0), even, even);
    b.edge(InputSymbol::Letter(0), odd, odd);
    b.edge(InputSymbol::Letter(1), even, odd);
    b.edge(InputSymbol::Letter(1), odd, even);
    b.edge(InputSymbol::End, even, acc);
    b.edge(InputSymbol::End, odd, rej);
    b.build_qfa()
}

pub fn build_end0(cap: usize) -> Result<QfaSpec> {
    let ia = Alphabet::new(["0", "1"])?;
    let mut b = SpecBuilder::new_qfa(ia);
    let mut pool = RejPool::new();

    // One state per input history up to length cap.
    let mut histories: Vec<Vec<String>> = vec![vec![String::new()]];
    for len in 1..=cap {
        let mut level = Vec::new();
        for h in &histories[len - 1] {
            for bit in ["0", "1"] {
                level.push(format!("{h}{bit}"));
            }
        }
        histories.push(level);
    }
    let root = b.state("h[]");
    b.set_initial(root);
    for level in &histories {
        for h in level {
            let q = b.state(format!("h[{h}]"));
            for (bit, sym) in [("0", InputSymbol::Letter(0)), ("1", InputSymbol::Letter(1))] {
                if h.len() < cap {
                    let next = b.state(format!("h[{h}{bit}]"));
                    b.edge(sym, q, next);
                } else {
                    pool.sink(&mut b, sym, q);
                }
            }
            if h.ends_with('0') {
                let acc = b.state(format!("acc[{h}]"));
                b.accept(acc);
                b.edge(InputSymbol::End, q, acc);
            } else {
                pool.sink(&mut b, InputSymbol::End, q);
            }
        }
    }
    b.build_qfa()
}
