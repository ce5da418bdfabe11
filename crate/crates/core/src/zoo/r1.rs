//! R1 = {(0^m 1^m, 2^m)} machines.
//!
//! A branch j in {0..k-1} is chosen uniformly at the begin marker. The
//! branch emits j twos per completed block of k zeros and k-j twos per
//! completed block of k ones, remembers the zeros remainder, and at the end
//! marker accepts iff the ones remainder matches, emitting the remainder in
//! twos. On 0^m 1^m every branch accepts with output 2^m; on 0^m 1^n with
//! m != n (mod-k mismatch rejects, otherwise block counts differ) each
//! output ends up in at most one branch, so no word exceeds probability 1/k.
//!
//! State encoding, quantum kind: `cnt0[j,r]` = reading zeros, remainder r;
//! `cnt1[j,r0,i]` = reading ones, i ones so far (bounded chain, see module
//! docs on `cap`), remembered zeros remainder r0. Zeros arriving after a
//! one, or ones beyond the chain capacity, fall into rejecting sinks. The
//! probabilistic kind replaces the bounded chain with a mod-k counter
//! (stochastic rows need not be injective) and is exact for all lengths.

use super::{RejPool, SpecBuilder};
use crate::machine::{Alphabet, InputSymbol, Kind, TransducerSpec};
use crate::{C64, Error, Result};

const TWO: u8 = 0; // index of "2" in the output alphabet

fn alphabets() -> Result<(Alphabet, Alphabet)> {
    Ok((Alphabet::new(["0", "1"])?, Alphabet::new(["2"])?))
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::BadParams(format!("R1 needs k >= 2, got {k}")));
    }
    Ok(())
}

pub fn build_qfst(k: usize, cap: usize) -> Result<TransducerSpec> {
    check_k(k)?;
    if cap < k {
        return Err(Error::BadParams(format!("R1 chain capacity {cap} below k={k}")));
    }
    let (ia, oa) = alphabets()?;
    let mut b = SpecBuilder::new_transducer(Kind::Quantum, ia, oa);
    let mut pool = RejPool::new();
    let (sym0, sym1) = (InputSymbol::Letter(0), InputSymbol::Letter(1));

    let q0 = b.state("q0");
    b.set_initial(q0);
    let zeros: Vec<Vec<usize>> = (0..k)
        .map(|j| (0..k).map(|r| b.state(format!("cnt0[{j},{r}]"))).collect())
        .collect();
    let ones: Vec<Vec<Vec<usize>>> = (0..k)
        .map(|j| {
            (0..k)
                .map(|r0| {
                    (1..=cap)
                        .map(|i| b.state(format!("cnt1[{j},{r0},{i}]")))
                        .collect()
                })
                .collect()
        })
        .collect();

    let amp = C64::new(1.0 / (k as f64).sqrt(), 0.0);
    b.row(
        InputSymbol::Init,
        q0,
        (0..k).map(|j| (zeros[j][0], amp)).collect(),
    );

    b.edge(sym0, q0, q0);
    b.edge(sym1, q0, q0);
    for j in 0..k {
        for r in 0..k {
            // zeros: cycle the remainder, emitting j twos on each wrap
            b.edge(sym0, zeros[j][r], zeros[j][(r + 1) % k]);
            if r == k - 1 {
                b.print(sym0, zeros[j][r], b.word_of(TWO, j));
            }
            // first one: enter the ones chain
            b.edge(sym1, zeros[j][r], ones[j][r][0]);
            for i in 1..=cap {
                let state = ones[j][r][i - 1];
                // a zero after a one is malformed
                pool.sink(&mut b, sym0, state);
                if i < cap {
                    b.edge(sym1, state, ones[j][r][i]);
                } else {
                    pool.sink(&mut b, sym1, state);
                }
                if i % k == k - 1 {
                    b.print(sym1, state, b.word_of(TWO, k - j));
                }
            }
        }
    }

    // End marker: zeros phase accepts iff the remainder is 0 (covers the
    // empty input); ones phase accepts iff both remainders agree, emitting
    // the remainder.
    for j in 0..k {
        for r in 0..k {
            if r == 0 {
                let acc = b.state(format!("acc0[{j}]"));
                b.accept(acc);
                b.edge(InputSymbol::End, zeros[j][r], acc);
            } else {
                pool.sink(&mut b, InputSymbol::End, zeros[j][r]);
            }
            for i in 1..=cap {
                let state = ones[j][r][i - 1];
                if i % k == r {
                    let acc = b.state(format!("acc1[{j},{r},{i}]"));
                    b.accept(acc);
                    b.edge(InputSymbol::End, state, acc);
                    b.print(InputSymbol::End, state, b.word_of(TWO, r));
                } else {
                    pool.sink(&mut b, InputSymbol::End, state);
                }
            }
        }
    }
    pool.sink(&mut b, InputSymbol::End, q0);
    b.build()
}

pub fn build_pfst(k: usize) -> Result<TransducerSpec> {
    check_k(k)?;
    let (ia, oa) = alphabets()?;
    let mut b = SpecBuilder::new_transducer(Kind::Probabilistic, ia, oa);
    let (sym0, sym1) = (InputSymbol::Letter(0), InputSymbol::Letter(1));

    let q0 = b.state("q0");
    b.set_initial(q0);
    let zeros: Vec<Vec<usize>> = (0..k)
        .map(|j| (0..k).map(|r| b.state(format!("cnt0[{j},{r}]"))).collect())
        .collect();
    let ones: Vec<Vec<Vec<usize>>> = (0..k)
        .map(|j| {
            (0..k)
                .map(|r0| (0..k).map(|r1| b.state(format!("cnt1[{j},{r0},{r1}]"))).collect())
                .collect()
        })
        .collect();
    let acc = b.state("acc");
    b.accept(acc);
    let rej = b.state("rej");
    b.reject(rej);

    let p = C64::new(1.0 / k as f64, 0.0);
    b.row(InputSymbol::Init, q0, (0..k).map(|j| (zeros[j][0], p)).collect());

    for j in 0..k {
        for r0 in 0..k {
            b.edge(sym0, zeros[j][r0], zeros[j][(r0 + 1) % k]);
            if r0 == k - 1 {
                b.print(sym0, zeros[j][r0], b.word_of(TWO, j));
            }
            b.edge(sym1, zeros[j][r0], ones[j][r0][1 % k]);
            for r1 in 0..k {
                let state = ones[j][r0][r1];
                b.edge(sym0, state, rej);
                b.edge(sym1, state, ones[j][r0][(r1 + 1) % k]);
                if r1 == k - 1 {
                    b.print(sym1, state, b.word_of(TWO, k - j));
                }
                if r1 == r0 {
                    b.edge(InputSymbol::End, state, acc);
                    b.print(InputSymbol::End, state, b.word_of(TWO, r0));
                } else {
                    b.edge(InputSymbol::End, state, rej);
                }
            }
            b.edge(
                InputSymbol::End,
                zeros[j][r0],
                if r0 == 0 { acc } else { rej },
            );
        }
    }
    b.edge(InputSymbol::End, q0, rej);
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::output_distribution;

    fn word(m: usize, n: usize) -> Vec<usize> {
        let mut v = vec![0; m];
        v.extend(std::iter::repeat_n(1, n));
        v
    }

    fn twos(n: usize) -> Vec<u8> {
        vec![TWO; n]
    }

    #[test]
    fn equal_blocks_accept_with_certainty() {
        for spec in [build_qfst(4, 8).unwrap(), build_pfst(4).unwrap()] {
            // 0^5 1^5 -> "22222" with probability 1
            let d = output_distribution(&spec, &word(5, 5)).unwrap();
            assert!((d.accept_prob(&twos(5)) - 1.0).abs() < 1e-9, "{d:?}");
            // empty input is in the relation with empty output
            let d = output_distribution(&spec, &[]).unwrap();
            assert!((d.accept_prob(&[]) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unequal_blocks_bounded_by_one_over_k() {
        for spec in [build_qfst(4, 10).unwrap(), build_pfst(4).unwrap()] {
            let d = output_distribution(&spec, &word(4, 8)).unwrap();
            for (w, p) in &d.accept {
                assert!(*p <= 0.25 + 1e-9, "output {w:?} got {p}");
            }
            assert!(d.total_accept() > 0.0);
        }
    }

    #[test]
    fn malformed_inputs_rejected() {
        for spec in [build_qfst(3, 6).unwrap(), build_pfst(3).unwrap()] {
            let d = output_distribution(&spec, &[0, 1, 0, 1]).unwrap();
            assert!((d.reject - 1.0).abs() < 1e-9);
            assert!(d.residual_nonhalting < 1e-12);
        }
    }

    #[test]
    fn bad_params_rejected() {
        assert!(build_qfst(1, 8).is_err());
        assert!(build_qfst(4, 2).is_err());
        assert!(build_pfst(0).is_err());
    }
}
