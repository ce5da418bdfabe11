//! Measure-many quantum finite automata: a transducer without the output
//! tape. After every symbol the non-halting/accepting/rejecting projective
//! measurement is applied; halting mass leaves the coherent part.

use crate::linalg::{self, SparseMat};
use crate::machine::{Alphabet, InputSymbol, ValidationReport, Violation};
use crate::{C64, Error, Result};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug)]
pub struct QfaSpec {
    pub states: Vec<String>,
    pub input_alphabet: Alphabet,
    pub initial: usize,
    pub accepting: BTreeSet<usize>,
    pub rejecting: BTreeSet<usize>,
    pub transitions: BTreeMap<InputSymbol, SparseMat>,
}

impl QfaSpec {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn is_halting(&self, q: usize) -> bool {
        self.accepting.contains(&q) || self.rejecting.contains(&q)
    }

    pub fn matrix(&self, sym: InputSymbol) -> &SparseMat {
        &self.transitions[&sym]
    }

    pub fn check_shape(&self) -> Result<()> {
        let n = self.states.len();
        if self.initial >= n {
            return Err(Error::Machine("initial state out of range".into()));
        }
        let mut expected: Vec<InputSymbol> = vec![InputSymbol::Init, InputSymbol::End];
        expected.extend((0..self.input_alphabet.len()).map(InputSymbol::Letter));
        for sym in &expected {
            match self.transitions.get(sym) {
                Some(m) if m.size() == n => {}
                Some(_) => return Err(Error::Machine(format!("matrix {sym:?} has wrong size"))),
                None => return Err(Error::Machine(format!("missing matrix for {sym:?}"))),
            }
        }
        if self.transitions.len() != expected.len() {
            return Err(Error::Machine("transition matrix for unknown symbol".into()));
        }
        Ok(())
    }
}

/// Unitarity, disjoint halting sets, and the end-marker drain rule.
pub fn validate_qfa(qfa: &QfaSpec, tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    if qfa.accepting.intersection(&qfa.rejecting).next().is_some() {
        violations.push(Violation {
            rule: "halting-disjoint",
            location: "accepting/rejecting overlap".into(),
            deviation: f64::NAN,
        });
    }
    for (sym, m) in &qfa.transitions {
        let dev = linalg::unitary_deviation(m);
        if dev > tol {
            violations.push(Violation {
                rule: "unitary",
                location: format!("matrix {sym:?}"),
                deviation: dev,
            });
        }
    }
    let end = qfa.matrix(InputSymbol::End);
    for q in 0..qfa.n_states() {
        if qfa.is_halting(q) {
            continue;
        }
        let leak: f64 = end
            .row(q)
            .iter()
            .filter(|&&(p, _)| !qfa.is_halting(p))
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if leak > tol {
            violations.push(Violation {
                rule: "endmarker-drain",
                location: format!("matrix END, row {}", qfa.states[q]),
                deviation: leak,
            });
        }
    }
    ValidationReport { violations }
}

/// Outcome probabilities of a framed run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QfaOutcome {
    pub accept: f64,
    pub reject: f64,
    /// Coherent mass left on non-halting states after the end marker
    /// (zero for machines satisfying the drain rule).
    pub residual: f64,
}

/// Exact measure-many evolution of the automaton over the framed input.
pub fn qfa_run(qfa: &QfaSpec, input: &[usize]) -> Result<QfaOutcome> {
    let mut seq = Vec::with_capacity(input.len() + 2);
    seq.push(InputSymbol::Init);
    for &s in input {
        if s >= qfa.input_alphabet.len() {
            return Err(Error::UnknownSymbol { symbol: format!("#{s}") });
        }
        seq.push(InputSymbol::Letter(s));
    }
    seq.push(InputSymbol::End);

    let mut amp: BTreeMap<usize, C64> = BTreeMap::new();
    amp.insert(qfa.initial, C64::new(1.0, 0.0));
    let mut accept = 0.0;
    let mut reject = 0.0;
    for sym in seq {
        let m = qfa.matrix(sym);
        let mut next: BTreeMap<usize, C64> = BTreeMap::new();
        for (&q, &a) in &amp {
            for &(p, v) in m.row(q) {
                *next.entry(p).or_insert(C64::new(0.0, 0.0)) += a * v;
            }
        }
        amp.clear();
        for (p, a) in next {
            let mass = a.norm_sqr();
            if mass == 0.0 {
                continue;
            }
            if qfa.accepting.contains(&p) {
                accept += mass;
            } else if qfa.rejecting.contains(&p) {
                reject += mass;
            } else if a.norm() > crate::PRUNE_EPS {
                amp.insert(p, a);
            }
        }
    }
    let residual: f64 = amp.values().map(|a| a.norm_sqr()).sum();
    Ok(QfaOutcome { accept, reject, residual })
}
