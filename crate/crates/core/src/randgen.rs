//! Seeded random machine generation for cross-validation runs.

use crate::linalg::{self, MatrixBuilder, SparseMat};
use crate::machine::{Alphabet, InputSymbol, Kind, TransducerSpec};
use crate::{C64, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// A random valid transducer: dense random unitaries (or stochastic
/// matrices) on the input symbols, short random prints, and an end marker
/// that drains every non-halting state into halting ones.
///
/// `n_states` of at least 2 are split evenly-ish into non-halting,
/// accepting, and rejecting, with at least as many halting as non-halting
/// states so a draining permutation exists.
pub fn random_transducer(kind: Kind, n_states: usize, seed: u64) -> Result<TransducerSpec> {
    assert!(n_states >= 2, "need room for at least one halting state");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_non = (n_states / 2).max(1);
    let n_acc = ((n_states - n_non) / 2).max(1);
    let accepting: BTreeSet<usize> = (n_non..n_non + n_acc).collect();
    let rejecting: BTreeSet<usize> = (n_non + n_acc..n_states).collect();

    let input_alphabet = Alphabet::new(["a", "b"])?;
    let output_alphabet = Alphabet::new(["x", "y"])?;
    let mut transitions = BTreeMap::new();
    let mut outputs = BTreeMap::new();
    for sym in [InputSymbol::Init, InputSymbol::Letter(0), InputSymbol::Letter(1)] {
        let m = match kind {
            Kind::Quantum => linalg::random_unitary(n_states, &mut rng),
            _ => linalg::random_stochastic(n_states, n_states.min(3), &mut rng),
        };
        transitions.insert(sym, m);
        let words = (0..n_states)
            .map(|_| {
                let len = rng.random_range(0..=2);
                (0..len).map(|_| rng.random_range(0..2u8)).collect()
            })
            .collect();
        outputs.insert(sym, words);
    }
    // End marker: permutation sending non-halting states into halting ones.
    let mut b = MatrixBuilder::new(n_states);
    let halting: Vec<usize> = (n_non..n_states).collect();
    for q in 0..n_non {
        b.edge(q, halting[q % halting.len()]);
    }
    let end = if kind == Kind::Quantum {
        b.finish_unitary()?
    } else {
        b.finish_stochastic()?
    };
    transitions.insert(InputSymbol::End, end);
    outputs.insert(InputSymbol::End, vec![Vec::new(); n_states]);

    TransducerSpec::new(
        kind,
        (0..n_states).map(|q| format!("s{q}")).collect(),
        input_alphabet,
        output_alphabet,
        0,
        accepting,
        rejecting,
        transitions,
        outputs,
    )
}

/// Random row-stochastic matrix, re-exported for chain tests.
pub fn random_chain(n: usize, support: usize, seed: u64) -> SparseMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    linalg::random_stochastic(n, support, &mut rng)
}

/// Random chain biased toward interesting structure: a fraction of the
/// rows are deterministic 0/1 rows, occasionally creating absorbing sets
/// and periodic cycles.
pub fn random_structured_chain(n: usize, seed: u64) -> SparseMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        if rng.random_bool(0.5) {
            let target = rng.random_range(0..n);
            rows.push(vec![(target, C64::new(1.0, 0.0))]);
        } else {
            let k = rng.random_range(1..=3usize);
            let mut cols = BTreeSet::new();
            while cols.len() < k {
                cols.insert(rng.random_range(0..n));
            }
            let mut weights: Vec<f64> = (0..cols.len()).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = weights.iter().sum();
            for w in weights.iter_mut() {
                *w /= total;
            }
            rows.push(
                cols.into_iter()
                    .zip(weights)
                    .map(|(c, w)| (c, C64::new(w, 0.0)))
                    .collect(),
            );
        }
    }
    SparseMat::from_rows(n, rows).expect("stochastic by construction")
}
