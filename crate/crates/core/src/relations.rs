//! Relations R over (input, output) pairs and the two computation-mode
//! checks over bounded input sets: computing with probability alpha, and
//! computing with isolated cutpoint alpha.
//!
//! The universal quantifier over output words is made finite by checking
//! the relation's declared candidate outputs plus the observed support of
//! the machine's distribution; any word outside both has probability zero
//! and passes the out-of-relation bound trivially.

use crate::machine::{Alphabet, TransducerSpec};
use crate::semantics::output_distribution;
use crate::{Error, OutputWord, Result};
use std::fmt;

type MembershipFn = dyn Fn(&[usize], &[u8]) -> bool + Send + Sync;
type CandidatesFn = dyn Fn(&[usize]) -> Vec<OutputWord> + Send + Sync;

/// A decidable relation between input words and output words, with bounded
/// enumerators making the computation checks finite.
pub struct RelationSpec {
    pub name: String,
    pub input_alphabet: Alphabet,
    pub output_alphabet: Alphabet,
    membership: Box<MembershipFn>,
    candidates: Box<CandidatesFn>,
}

impl RelationSpec {
    pub fn new(
        name: impl Into<String>,
        input_alphabet: Alphabet,
        output_alphabet: Alphabet,
        membership: Box<MembershipFn>,
        candidates: Box<CandidatesFn>,
    ) -> Self {
        RelationSpec {
            name: name.into(),
            input_alphabet,
            output_alphabet,
            membership,
            candidates,
        }
    }

    pub fn member(&self, input: &[usize], output: &[u8]) -> bool {
        (self.membership)(input, output)
    }

    /// Output words worth checking at `input`; the checkers add the
    /// observed support on top.
    pub fn candidate_outputs(&self, input: &[usize]) -> Vec<OutputWord> {
        (self.candidates)(input)
    }

    /// Every input word over the relation's alphabet up to `max_len`,
    /// shortest first, lexicographic within a length.
    pub fn enumerate_inputs(&self, max_len: usize) -> Vec<Vec<usize>> {
        let k = self.input_alphabet.len();
        let mut out = vec![Vec::new()];
        let mut level: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(level.len() * k);
            for w in &level {
                for s in 0..k {
                    let mut v = w.clone();
                    v.push(s);
                    next.push(v);
                }
            }
            out.extend(next.iter().cloned());
            level = next;
        }
        out
    }
}

impl fmt::Debug for RelationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelationSpec").field("name", &self.name).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CheckMode {
    /// In-relation pairs need T(w|v) >= alpha, out-of-relation pairs
    /// T(w|v) <= 1 - alpha; requires alpha > 1/2.
    WithProbability { alpha: f64 },
    /// In-relation pairs need T(w|v) >= alpha + epsilon, out-of-relation
    /// pairs T(w|v) <= alpha - epsilon.
    IsolatedCutpoint { alpha: f64, epsilon: f64 },
}

/// One checked pair.
#[derive(Clone, Debug)]
pub struct PairVerdict {
    pub input: String,
    pub output: String,
    pub in_relation: bool,
    pub measured: f64,
    /// Signed slack against the mode's inequality; negative beyond
    /// tolerance means failure.
    pub margin: f64,
    pub ok: bool,
}

/// Result of a bounded computation check. `verdicts` records every failing
/// pair and every pair with positive measured probability or positive
/// membership; out-of-relation pairs at probability zero are only counted.
#[derive(Debug)]
pub struct CheckReport {
    pub mode: CheckMode,
    pub max_len: usize,
    pub tol: f64,
    pub pass: bool,
    pub worst_margin: f64,
    pub checked_pairs: usize,
    pub verdicts: Vec<PairVerdict>,
}

impl CheckReport {
    pub fn failures(&self) -> impl Iterator<Item = &PairVerdict> {
        self.verdicts.iter().filter(|v| !v.ok)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} over {} pairs (inputs up to length {}): worst margin {:.6e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.checked_pairs,
            self.max_len,
            self.worst_margin
        )?;
        for v in self.failures() {
            writeln!(
                f,
                "  ({:?}, {:?}) {}: T = {:.12} violates by {:.3e}",
                v.input,
                v.output,
                if v.in_relation { "in relation" } else { "not in relation" },
                v.measured,
                -v.margin
            )?;
        }
        Ok(())
    }
}

fn check(
    spec: &TransducerSpec,
    rel: &RelationSpec,
    mode: CheckMode,
    max_len: usize,
    tol: f64,
) -> Result<CheckReport> {
    if spec.input_alphabet() != &rel.input_alphabet {
        return Err(Error::Precondition(format!(
            "machine and relation {:?} use different input alphabets",
            rel.name
        )));
    }
    let (lo_in, hi_out) = match mode {
        CheckMode::WithProbability { alpha } => {
            if !(alpha > 0.5 && alpha <= 1.0) {
                return Err(Error::Precondition(format!(
                    "probability mode needs alpha in (1/2, 1], got {alpha}"
                )));
            }
            (alpha, 1.0 - alpha)
        }
        CheckMode::IsolatedCutpoint { alpha, epsilon } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::Precondition(format!(
                    "cutpoint must lie in (0, 1), got {alpha}"
                )));
            }
            if epsilon <= 0.0 {
                return Err(Error::Precondition(format!(
                    "isolation radius must be positive, got {epsilon}"
                )));
            }
            (alpha + epsilon, alpha - epsilon)
        }
    };
    let mut report = CheckReport {
        mode,
        max_len,
        tol,
        pass: true,
        worst_margin: f64::INFINITY,
        checked_pairs: 0,
        verdicts: Vec::new(),
    };
    for input in rel.enumerate_inputs(max_len) {
        let dist = output_distribution(spec, &input)?;
        let mut outputs = rel.candidate_outputs(&input);
        for w in dist.accept.keys() {
            if !outputs.contains(w) {
                outputs.push(w.clone());
            }
        }
        outputs.sort();
        outputs.dedup();
        for w in outputs {
            let measured = dist.accept_prob(&w);
            let in_relation = rel.member(&input, &w);
            let margin = if in_relation {
                measured - lo_in
            } else {
                hi_out - measured
            };
            let ok = margin >= -tol;
            report.checked_pairs += 1;
            report.worst_margin = report.worst_margin.min(margin);
            if !ok {
                report.pass = false;
            }
            if !ok || in_relation || measured > 0.0 {
                report.verdicts.push(PairVerdict {
                    input: rel.input_alphabet.render(&input),
                    output: rel.output_alphabet.render_output(&w),
                    in_relation,
                    measured,
                    margin,
                    ok,
                });
            }
        }
    }
    Ok(report)
}

/// Does the machine compute the relation with probability `alpha` on all
/// inputs up to `max_len`?
pub fn check_with_probability(
    spec: &TransducerSpec,
    rel: &RelationSpec,
    alpha: f64,
    max_len: usize,
    tol: f64,
) -> Result<CheckReport> {
    check(spec, rel, CheckMode::WithProbability { alpha }, max_len, tol)
}

/// Does the machine compute the relation with isolated cutpoint `alpha`,
/// isolation `epsilon`, on all inputs up to `max_len`?
pub fn check_isolated_cutpoint(
    spec: &TransducerSpec,
    rel: &RelationSpec,
    alpha: f64,
    epsilon: f64,
    max_len: usize,
    tol: f64,
) -> Result<CheckReport> {
    check(
        spec,
        rel,
        CheckMode::IsolatedCutpoint { alpha, epsilon },
        max_len,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::Kind;
    use crate::zoo::{build_machine, build_relation, Family, Params};

    #[test]
    fn r1_passes_probability_mode() {
        let p = Params { k: 8, l: 2, cap: Some(10) };
        let spec = build_machine(Family::R1, Kind::Quantum, &p).unwrap();
        let rel = build_relation(Family::R1).unwrap();
        let report = check_with_probability(&spec, &rel, 7.0 / 8.0, 8, 1e-9).unwrap();
        assert!(report.pass, "{report}");
    }

    #[test]
    fn r2_passes_two_thirds() {
        let spec = build_machine(Family::R2, Kind::Quantum, &Params::default()).unwrap();
        let rel = build_relation(Family::R2).unwrap();
        let report = check_with_probability(&spec, &rel, 2.0 / 3.0, 6, 1e-9).unwrap();
        assert!(report.pass, "{report}");
    }

    #[test]
    fn r4_cutpoint_passes_but_probability_fails() {
        let spec = build_machine(Family::R4, Kind::Quantum, &Params { cap: Some(8), ..Params::default() }).unwrap();
        let rel = build_relation(Family::R4).unwrap();
        let cut = check_isolated_cutpoint(&spec, &rel, 0.25, 0.2, 7, 1e-9).unwrap();
        assert!(cut.pass, "{cut}");
        let prob = check_with_probability(&spec, &rel, 0.6, 7, 1e-9).unwrap();
        assert!(!prob.pass);
        assert!(prob.failures().all(|v| v.in_relation));
    }

    #[test]
    fn pcp_machine_passes_cutpoint_check_on_solvable_instance() {
        use crate::zoo::{build_pcp_machine, build_pcp_relation, PcpInstance};
        let inst = PcpInstance::new(vec!["a", "ba"], vec!["ab", "a"]).unwrap();
        // The probabilistic kind rejects the empty word, so even the
        // (empty, empty) pair satisfies the out-of-relation bound.
        let spec = build_pcp_machine(&inst, Kind::Probabilistic).unwrap();
        let rel = build_pcp_relation(&inst).unwrap();
        let report = check_isolated_cutpoint(&spec, &rel, 0.5, 0.1, 4, 1e-9).unwrap();
        assert!(report.pass, "{report}");
        // Matching membership and 2/3-computation go together (inputs <= 5).
        let prob = check_with_probability(&spec, &rel, 2.0 / 3.0, 5, 1e-9).unwrap();
        assert!(prob.pass, "{prob}");
    }

    #[test]
    fn r1_meets_its_error_bound_up_to_length_12() {
        let k = 4;
        let p = Params { k, l: 2, cap: Some(14) };
        let spec = build_machine(Family::R1, Kind::Quantum, &p).unwrap();
        let rel = build_relation(Family::R1).unwrap();
        let alpha = 1.0 - 1.0 / k as f64;
        let report = check_with_probability(&spec, &rel, alpha, 12, 1e-9).unwrap();
        assert!(report.pass, "{report}");
    }

    #[test]
    fn zero_isolation_is_a_precondition_error() {
        let spec = build_machine(Family::R4, Kind::Quantum, &Params::default()).unwrap();
        let rel = build_relation(Family::R4).unwrap();
        assert!(check_isolated_cutpoint(&spec, &rel, 0.25, 0.0, 4, 1e-9).is_err());
    }

    #[test]
    fn probability_pass_implies_shifted_cutpoint_pass() {
        let p = Params { k: 4, l: 2, cap: Some(8) };
        let spec = build_machine(Family::R1, Kind::Quantum, &p).unwrap();
        let rel = build_relation(Family::R1).unwrap();
        let alpha = 0.75;
        let prob = check_with_probability(&spec, &rel, alpha, 6, 1e-9).unwrap();
        assert!(prob.pass);
        let cut = check_isolated_cutpoint(&spec, &rel, 0.5, alpha - 0.5, 6, 1e-9).unwrap();
        assert!(cut.pass);
    }

    #[test]
    fn loosening_tol_never_flips_pass_to_fail() {
        let spec = build_machine(Family::R2, Kind::Quantum, &Params::default()).unwrap();
        let rel = build_relation(Family::R2).unwrap();
        for tol in [1e-12, 1e-9, 1e-6, 1e-3] {
            let report = check_with_probability(&spec, &rel, 2.0 / 3.0, 4, tol).unwrap();
            assert!(report.pass, "tol {tol}");
        }
    }
}
