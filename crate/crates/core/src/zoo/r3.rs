//! R3 = {(0^m 1^n 2^k, 3^m) : n != k and (m = k or m = n)} machine.
//!
//! Branch structure: with amplitude sqrt(3/7) a branch that prints one 3
//! per 0 and accepts at the end marker; with amplitude sqrt(2/(7l)) each,
//! branches (j, b) for j in {0..l-1}, b in {1, 2} that emit j threes per
//! block of l zeros, remember the zeros remainder, emit l-j threes per
//! block of l b-symbols (ignoring the other symbol), and at the end marker
//! compare remainders. Surviving (j,*) pairs pass through a Hadamard whose
//! accepting component receives +1 from the b=1 side and -1 from the b=2
//! side, so equal-amplitude equal-output arrivals (exactly the m = n = k
//! case) cancel out of acceptance.
//!
//! Input form 0^m 1^n 2^k is policed by a shared deterministic phase
//! tracker factored into every state name: `z:` while reading zeros,
//! `o[n]:` after n ones, `t[n,c]:` after c twos. Out-of-order symbols fall
//! into rejecting sinks at the violating step. The one- and two-counting
//! tracker dimensions are bounded chains of length `cap` (see the module
//! docs in [`super`]); zeros are counted modulo l and are unbounded.

use super::{RejPool, SpecBuilder};
use crate::machine::{Alphabet, InputSymbol, Kind, TransducerSpec};
use crate::{C64, Error, Result};

const THREE: u8 = 0; // index of "3" in the output alphabet

/// Tracker cell: zeros phase, ones phase after n ones, twos phase after
/// (n, c) ones and twos.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Cell {
    Z,
    O(usize),
    T(usize, usize),
}

impl Cell {
    fn tag(self) -> String {
        match self {
            Cell::Z => "z".into(),
            Cell::O(n) => format!("o[{n}]"),
            Cell::T(n, c) => format!("t[{n},{c}]"),
        }
    }
}

pub fn build_qfst(l: usize, cap: usize) -> Result<TransducerSpec> {
    if l < 2 {
        return Err(Error::BadParams(format!("R3 needs l >= 2, got {l}")));
    }
    if cap < l {
        return Err(Error::BadParams(format!("R3 chain capacity {cap} below l={l}")));
    }
    let ia = Alphabet::new(["0", "1", "2"])?;
    let oa = Alphabet::new(["3"])?;
    let mut b = SpecBuilder::new_transducer(Kind::Quantum, ia, oa);
    let mut pool = RejPool::new();
    let (s0, s1, s2, send) = (
        InputSymbol::Letter(0),
        InputSymbol::Letter(1),
        InputSymbol::Letter(2),
        InputSymbol::End,
    );

    let q0 = b.state("q0");
    b.set_initial(q0);
    for sym in [s0, s1, s2] {
        b.edge(sym, q0, q0);
    }
    pool.sink(&mut b, send, q0);

    // State constructors. Content in the zeros phase: the print branch and
    // (j, b, current zeros remainder). Ones phase: b=1 counts (remainder
    // rho), b=2 is frozen. Twos phase: b=1 frozen, b=2 counts.
    let p1 = |b: &mut SpecBuilder, cell: Cell| b.state(format!("{}:p1", cell.tag()));
    let zb = |b: &mut SpecBuilder, j: usize, bb: usize, r: usize| {
        b.state(format!("z:b[{j},{bb},{r}]"))
    };
    let ob1 = |b: &mut SpecBuilder, n: usize, j: usize, r0: usize, rho: usize| {
        b.state(format!("o[{n}]:b1[{j},{r0},{rho}]"))
    };
    let ob2 = |b: &mut SpecBuilder, n: usize, j: usize, r0: usize| {
        b.state(format!("o[{n}]:b2[{j},{r0}]"))
    };
    let tc1 = |b: &mut SpecBuilder, n: usize, c: usize, j: usize, r0: usize, rho: usize| {
        b.state(format!("t[{n},{c}]:c1[{j},{r0},{rho}]"))
    };
    let tc2 = |b: &mut SpecBuilder, n: usize, c: usize, j: usize, r0: usize, rho2: usize| {
        b.state(format!("t[{n},{c}]:c2[{j},{r0},{rho2}]"))
    };

    // Begin marker.
    let amp_p1 = C64::new((3.0 / 7.0_f64).sqrt(), 0.0);
    let amp_b = C64::new((2.0 / (7.0 * l as f64)).sqrt(), 0.0);
    let mut init_row = vec![(p1(&mut b, Cell::Z), amp_p1)];
    for j in 0..l {
        for bb in [1, 2] {
            init_row.push((zb(&mut b, j, bb, 0), amp_b));
        }
    }
    b.row(InputSymbol::Init, q0, init_row);

    // Zeros phase: remainder cycles; the print branch emits one 3 per 0.
    let zp1 = p1(&mut b, Cell::Z);
    b.edge(s0, zp1, zp1);
    b.print(s0, zp1, vec![THREE]);
    let zp1_on_one = p1(&mut b, Cell::O(1));
    b.edge(s1, zp1, zp1_on_one);
    let zp1_on_two = p1(&mut b, Cell::T(0, 1));
    b.edge(s2, zp1, zp1_on_two);
    for j in 0..l {
        for bb in [1, 2] {
            for r in 0..l {
                let from = zb(&mut b, j, bb, r);
                let to = zb(&mut b, j, bb, (r + 1) % l);
                b.edge(s0, from, to);
                if r == l - 1 {
                    b.print(s0, from, b.word_of(THREE, j));
                }
                let (on_one, on_two) = match bb {
                    1 => (ob1(&mut b, 1, j, r, 1 % l), tc1(&mut b, 0, 1, j, r, 0)),
                    _ => (ob2(&mut b, 1, j, r), tc2(&mut b, 0, 1, j, r, 1 % l)),
                };
                b.edge(s1, from, on_one);
                b.edge(s2, from, on_two);
            }
        }
    }

    // Ones phase.
    for n in 1..=cap {
        let from_p = p1(&mut b, Cell::O(n));
        pool.sink(&mut b, s0, from_p);
        if n < cap {
            let to = p1(&mut b, Cell::O(n + 1));
            b.edge(s1, from_p, to);
        } else {
            pool.sink(&mut b, s1, from_p);
        }
        let on_two = p1(&mut b, Cell::T(n, 1));
        b.edge(s2, from_p, on_two);
        for j in 0..l {
            for r0 in 0..l {
                for rho in 0..l {
                    let from = ob1(&mut b, n, j, r0, rho);
                    pool.sink(&mut b, s0, from);
                    if n < cap {
                        let to = ob1(&mut b, n + 1, j, r0, (rho + 1) % l);
                        b.edge(s1, from, to);
                        if rho == l - 1 {
                            b.print(s1, from, b.word_of(THREE, l - j));
                        }
                    } else {
                        pool.sink(&mut b, s1, from);
                    }
                    let on_two = tc1(&mut b, n, 1, j, r0, rho);
                    b.edge(s2, from, on_two);
                }
                let from = ob2(&mut b, n, j, r0);
                pool.sink(&mut b, s0, from);
                if n < cap {
                    let to = ob2(&mut b, n + 1, j, r0);
                    b.edge(s1, from, to);
                } else {
                    pool.sink(&mut b, s1, from);
                }
                let on_two = tc2(&mut b, n, 1, j, r0, 1 % l);
                b.edge(s2, from, on_two);
            }
        }
    }

    // Twos phase.
    for n in 0..=cap {
        for c in 1..=cap {
            let from_p = p1(&mut b, Cell::T(n, c));
            pool.sink(&mut b, s0, from_p);
            pool.sink(&mut b, s1, from_p);
            if c < cap {
                let to = p1(&mut b, Cell::T(n, c + 1));
                b.edge(s2, from_p, to);
            } else {
                pool.sink(&mut b, s2, from_p);
            }
            for j in 0..l {
                for r0 in 0..l {
                    for rho in 0..l {
                        for (is_b1, from) in [
                            (true, tc1(&mut b, n, c, j, r0, rho)),
                            (false, tc2(&mut b, n, c, j, r0, rho)),
                        ] {
                            pool.sink(&mut b, s0, from);
                            pool.sink(&mut b, s1, from);
                            if c < cap {
                                let to = if is_b1 {
                                    tc1(&mut b, n, c + 1, j, r0, rho)
                                } else {
                                    tc2(&mut b, n, c + 1, j, r0, (rho + 1) % l)
                                };
                                b.edge(s2, from, to);
                                if !is_b1 && rho == l - 1 {
                                    b.print(s2, from, b.word_of(THREE, l - j));
                                }
                            } else {
                                pool.sink(&mut b, s2, from);
                            }
                        }
                    }
                }
            }
        }
    }

    // End marker. The print branch always accepts. A (j,b) branch survives
    // iff its counted remainder equals the remembered one, prints the
    // remainder, and enters the per-(cell, j, remainder) Hadamard pair.
    let h = C64::new(1.0 / 2.0_f64.sqrt(), 0.0);
    let mut cells = vec![Cell::Z];
    cells.extend((1..=cap).map(Cell::O));
    for n in 0..=cap {
        for c in 1..=cap {
            cells.push(Cell::T(n, c));
        }
    }
    let pair_row = |b: &mut SpecBuilder, cell: Cell, j: usize, r0: usize, from: usize, is_b1: bool| {
        let rej = b.state(format!("hrej[{},{j},{r0}]", cell.tag()));
        let acc = b.state(format!("hacc[{},{j},{r0}]", cell.tag()));
        b.reject(rej);
        b.accept(acc);
        let sign = if is_b1 { h } else { -h };
        b.row(send, from, vec![(rej, h), (acc, sign)]);
        b.print(send, from, b.word_of(THREE, r0));
    };
    for cell in cells {
        let from_p = p1(&mut b, cell);
        let acc = b.state(format!("accp[{}]", cell.tag()));
        b.accept(acc);
        b.edge(send, from_p, acc);
        for j in 0..l {
            match cell {
                Cell::Z => {
                    for bb in [1, 2] {
                        for r in 0..l {
                            let from = zb(&mut b, j, bb, r);
                            if r == 0 {
                                pair_row(&mut b, cell, j, 0, from, bb == 1);
                            } else {
                                pool.sink(&mut b, send, from);
                            }
                        }
                    }
                }
                Cell::O(n) => {
                    for r0 in 0..l {
                        for rho in 0..l {
                            let from = ob1(&mut b, n, j, r0, rho);
                            if rho == r0 {
                                pair_row(&mut b, cell, j, r0, from, true);
                            } else {
                                pool.sink(&mut b, send, from);
                            }
                        }
                        let from = ob2(&mut b, n, j, r0);
                        if r0 == 0 {
                            pair_row(&mut b, cell, j, 0, from, false);
                        } else {
                            pool.sink(&mut b, send, from);
                        }
                    }
                }
                Cell::T(n, c) => {
                    for r0 in 0..l {
                        for rho in 0..l {
                            for (is_b1, from) in [
                                (true, tc1(&mut b, n, c, j, r0, rho)),
                                (false, tc2(&mut b, n, c, j, r0, rho)),
                            ] {
                                if rho == r0 {
                                    pair_row(&mut b, cell, j, r0, from, is_b1);
                                } else {
                                    pool.sink(&mut b, send, from);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    b.build()
}
