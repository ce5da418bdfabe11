//! Brute-force path-sum simulator used as a correctness oracle against the
//! total-state evolution in [`crate::semantics`].
//!
//! Every state sequence through the framed input is enumerated explicitly.
//! Contributions are grouped by (halting step, halting state, output word);
//! amplitudes are summed within a group and squared afterwards, so mass
//! halting at different steps or with different tape contents never
//! interferes, mirroring the per-step measurement of the step semantics.
//! Exponential in the input length; exists only for cross-validation.

use crate::machine::{InputSymbol, Kind, TransducerSpec};
use crate::semantics::OutputDistribution;
use crate::{C64, Error, OutputWord, Result};
use std::collections::BTreeMap;

/// Default cap on the raw input length (the framed run adds two markers).
pub const DEFAULT_PATH_CAP: usize = 8;

/// One halting path bundle: where and when the path halted, what it wrote,
/// and the summed weight of all paths in the bundle.
#[derive(Clone, Debug)]
pub struct PathContribution {
    pub halt_step: usize,
    pub halt_state: usize,
    pub output: OutputWord,
    pub amplitude: C64,
}

fn enumerate_paths(spec: &TransducerSpec, seq: &[InputSymbol]) -> (Vec<PathContribution>, f64) {
    // Group key: (halt step, halt state, output word).
    let mut groups: BTreeMap<(usize, usize, OutputWord), C64> = BTreeMap::new();
    // Paths still coherent after the end marker, grouped by (state, word).
    let mut leftovers: BTreeMap<(usize, OutputWord), C64> = BTreeMap::new();

    struct Frame {
        state: usize,
        step: usize,
        weight: C64,
        output: OutputWord,
    }
    let mut stack = vec![Frame {
        state: spec.initial(),
        step: 0,
        weight: C64::new(1.0, 0.0),
        output: OutputWord::new(),
    }];
    while let Some(f) = stack.pop() {
        if f.step == seq.len() {
            *leftovers.entry((f.state, f.output)).or_insert(C64::new(0.0, 0.0)) += f.weight;
            continue;
        }
        let sym = seq[f.step];
        let mut out = f.output.clone();
        out.extend_from_slice(spec.output(sym, f.state));
        for &(p, v) in spec.matrix(sym).row(f.state) {
            let w = f.weight * v;
            if w.norm_sqr() == 0.0 {
                continue;
            }
            if spec.is_halting(p) {
                *groups
                    .entry((f.step, p, out.clone()))
                    .or_insert(C64::new(0.0, 0.0)) += w;
            } else {
                stack.push(Frame { state: p, step: f.step + 1, weight: w, output: out.clone() });
            }
        }
    }
    let quantum = spec.kind() == Kind::Quantum;
    let contributions = groups
        .into_iter()
        .map(|((halt_step, halt_state, output), amplitude)| PathContribution {
            halt_step,
            halt_state,
            output,
            amplitude,
        })
        .collect();
    let residual = leftovers
        .values()
        .map(|a| if quantum { a.norm_sqr() } else { a.re })
        .sum();
    (contributions, residual)
}

/// `T(.|v)` computed by explicit path enumeration.
pub fn path_sum_distribution(spec: &TransducerSpec, input: &[usize]) -> Result<OutputDistribution> {
    path_sum_distribution_capped(spec, input, DEFAULT_PATH_CAP)
}

pub fn path_sum_distribution_capped(
    spec: &TransducerSpec,
    input: &[usize],
    cap: usize,
) -> Result<OutputDistribution> {
    if input.len() > cap {
        return Err(Error::CapExceeded { len: input.len(), cap });
    }
    let seq = spec.framed(input)?;
    let (contributions, residual) = enumerate_paths(spec, &seq);
    let quantum = spec.kind() == Kind::Quantum;
    let mut dist = OutputDistribution {
        accept: BTreeMap::new(),
        reject: residual,
        residual_nonhalting: residual,
    };
    for c in contributions {
        let mass = if quantum { c.amplitude.norm_sqr() } else { c.amplitude.re };
        if spec.is_accepting(c.halt_state) {
            *dist.accept.entry(c.output).or_insert(0.0) += mass;
        } else {
            dist.reject += mass;
        }
    }
    dist.accept.retain(|_, v| *v != 0.0);
    Ok(dist)
}

/// Where two distributions disagree beyond `tol`.
#[derive(Clone, Debug, Default)]
pub struct DistributionDiff {
    pub max_deviation: f64,
    /// `(key, left, right)` for every differing entry; the reject outcome
    /// is reported under the key `"REJ"`.
    pub mismatches: Vec<(String, f64, f64)>,
}

impl DistributionDiff {
    pub fn is_empty(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub fn compare_distributions(
    spec: &TransducerSpec,
    left: &OutputDistribution,
    right: &OutputDistribution,
    tol: f64,
) -> DistributionDiff {
    let mut keys: Vec<&OutputWord> = left.accept.keys().collect();
    for k in right.accept.keys() {
        if !left.accept.contains_key(k) {
            keys.push(k);
        }
    }
    let mut diff = DistributionDiff::default();
    for k in keys {
        let a = left.accept_prob(k);
        let b = right.accept_prob(k);
        let d = (a - b).abs();
        diff.max_deviation = diff.max_deviation.max(d);
        if d > tol {
            diff.mismatches
                .push((spec.output_alphabet().render_output(k), a, b));
        }
    }
    let d = (left.reject - right.reject).abs();
    diff.max_deviation = diff.max_deviation.max(d);
    if d > tol {
        diff.mismatches.push(("REJ".into(), left.reject, right.reject));
    }
    diff
}
