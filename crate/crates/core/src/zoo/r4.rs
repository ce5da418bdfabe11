//! R4 = {(0^m 1^n a, 4^l) : (a=2 -> l=m) and (a=3 -> l=n)} machine.
//!
//! Two equal-amplitude branches: c0 prints one 4 per 0, c1 one 4 per 1.
//! The trailing symbol resolves them: a=2 accepts c0 and rejects c1, a=3
//! the other way around, both only at the end marker so trailing garbage
//! still rejects. Well-formed members are accepted with probability
//! exactly 1/2, everything else gets 0.

use super::{RejPool, SpecBuilder};
use crate::machine::{Alphabet, InputSymbol, Kind, TransducerSpec};
use crate::{C64, Error, Result};

const FOUR: u8 = 0; // index of "4" in the output alphabet

pub fn build_qfst(cap: usize) -> Result<TransducerSpec> {
    if cap < 1 {
        return Err(Error::BadParams("R4 chain capacity must be positive".into()));
    }
    let ia = Alphabet::new(["0", "1", "2", "3"])?;
    let oa = Alphabet::new(["4"])?;
    let mut b = SpecBuilder::new_transducer(Kind::Quantum, ia, oa);
    let mut pool = RejPool::new();
    let (s0, s1, s2, s3, send) = (
        InputSymbol::Letter(0),
        InputSymbol::Letter(1),
        InputSymbol::Letter(2),
        InputSymbol::Letter(3),
        InputSymbol::End,
    );

    let q0 = b.state("q0");
    b.set_initial(q0);
    // tracker position: index 0 = still in zeros, i >= 1 = i ones read
    let z: Vec<usize> = (0..2).map(|c| b.state(format!("z[c{c}]"))).collect();
    let ones: Vec<Vec<usize>> = (1..=cap)
        .map(|i| (0..2).map(|c| b.state(format!("o[{i},c{c}]"))).collect())
        .collect();

    let h = C64::new(1.0 / 2.0_f64.sqrt(), 0.0);
    b.row(InputSymbol::Init, q0, vec![(z[0], h), (z[1], h)]);
    for sym in [s0, s1, s2, s3] {
        b.edge(sym, q0, q0);
    }
    pool.sink(&mut b, send, q0);

    // After the branch-resolving symbol: accept or reject at END; any
    // further symbol is malformed.
    let mut pending = Vec::new();
    let resolve = |b: &mut SpecBuilder,
                       pending: &mut Vec<(usize, bool)>,
                       sym: InputSymbol,
                       tracker: usize,
                       branch: usize,
                       from: usize,
                       accepts: bool| {
        let tag = if accepts { "acc" } else { "rej" };
        let sname = if sym == s2 { "2" } else { "3" };
        let q = b.state(format!("after{sname}-{tag}[{tracker},c{branch}]"));
        b.edge(sym, from, q);
        pending.push((q, accepts));
    };

    for (t, pair) in std::iter::once(&z).chain(ones.iter()).enumerate() {
        for c in 0..2 {
            let from = pair[c];
            // zeros: fine while still in the zeros phase, malformed later
            if t == 0 {
                b.edge(s0, from, from);
                if c == 0 {
                    b.print(s0, from, vec![FOUR]);
                }
            } else {
                pool.sink(&mut b, s0, from);
            }
            // ones advance the tracker chain
            if t < cap {
                let to = if t == 0 { ones[0][c] } else { ones[t][c] };
                b.edge(s1, from, to);
                if c == 1 {
                    b.print(s1, from, vec![FOUR]);
                }
            } else {
                pool.sink(&mut b, s1, from);
            }
            resolve(&mut b, &mut pending, s2, t, c, from, c == 0);
            resolve(&mut b, &mut pending, s3, t, c, from, c == 1);
            pool.sink(&mut b, send, from);
        }
    }
    for (q, accepts) in pending {
        for sym in [s0, s1, s2, s3] {
            pool.sink(&mut b, sym, q);
        }
        if accepts {
            let acc = b.state(format!("halt-acc[{q}]"));
            b.accept(acc);
            b.edge(send, q, acc);
        } else {
            pool.sink(&mut b, send, q);
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::output_distribution;
    use crate::transforms::squared_moduli_pfst;

    fn fours(n: usize) -> Vec<u8> {
        vec![FOUR; n]
    }

    #[test]
    fn member_pairs_get_exactly_half() {
        let q = build_qfst(8).unwrap();
        let p = squared_moduli_pfst(&q).unwrap();
        for spec in [q, p] {
            // 0^2 1^3 2 -> "44" with probability 1/2 (copy the zeros)
            let v = spec.input_alphabet().tokenize("001112").unwrap();
            let d = output_distribution(&spec, &v).unwrap();
            assert!((d.accept_prob(&fours(2)) - 0.5).abs() < 1e-12, "{d:?}");
            assert!((d.reject - 0.5).abs() < 1e-12);
            // 0^3 1^2 3 -> "44" with probability 1/2 (copy the ones)
            let v = spec.input_alphabet().tokenize("000113").unwrap();
            let d = output_distribution(&spec, &v).unwrap();
            assert!((d.accept_prob(&fours(2)) - 0.5).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn malformed_rejected_entirely() {
        let spec = build_qfst(6).unwrap();
        for bad in ["", "0011", "230", "0120", "001122", "0011230"] {
            let v = spec.input_alphabet().tokenize(bad).unwrap();
            let d = output_distribution(&spec, &v).unwrap();
            assert!((d.reject - 1.0).abs() < 1e-12, "{bad:?}: {d:?}");
        }
    }

    #[test]
    fn lone_resolver_accepts_empty_output() {
        let spec = build_qfst(4).unwrap();
        let v = spec.input_alphabet().tokenize("2").unwrap();
        let d = output_distribution(&spec, &v).unwrap();
        assert!((d.accept_prob(&[]) - 0.5).abs() < 1e-12);
    }
}
