//! Exact evolution of total states and output distributions.
//!
//! A total state tracks the still-running component (per state and
//! output-tape content), the probability already accepted per output word,
//! and the rejected probability. Reading symbol `a` in state `q` prints
//! `f_a(q)`, then moves by the transition matrix; target components on
//! accepting or rejecting states are measured out. In the quantum case
//! amplitudes interfere only when both the target state and the entire
//! output-tape content coincide; this grouping is where the output tape
//! blocks interference that a plain automaton would exhibit.

use crate::machine::{InputSymbol, Kind, TransducerSpec};
use crate::{C64, Error, OutputWord, Result, PRUNE_EPS};
use std::collections::BTreeMap;

/// Probabilistic total state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbTotalState {
    pub p_non: BTreeMap<(usize, OutputWord), f64>,
    pub p_acc: BTreeMap<OutputWord, f64>,
    pub p_rej: f64,
}

/// Quantum total state; `amp` is supported on non-halting states only.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuantumTotalState {
    pub amp: BTreeMap<(usize, OutputWord), C64>,
    pub p_acc: BTreeMap<OutputWord, f64>,
    pub p_rej: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TotalState {
    Prob(ProbTotalState),
    Quantum(QuantumTotalState),
}

impl TotalState {
    pub fn p_rej(&self) -> f64 {
        match self {
            TotalState::Prob(s) => s.p_rej,
            TotalState::Quantum(s) => s.p_rej,
        }
    }

    pub fn p_acc(&self) -> &BTreeMap<OutputWord, f64> {
        match self {
            TotalState::Prob(s) => &s.p_acc,
            TotalState::Quantum(s) => &s.p_acc,
        }
    }

    /// Probability mass still on non-halting states.
    pub fn non_halting_mass(&self) -> f64 {
        match self {
            TotalState::Prob(s) => s.p_non.values().sum(),
            TotalState::Quantum(s) => s.amp.values().map(|a| a.norm_sqr()).sum(),
        }
    }
}

/// Unit mass (or amplitude) on `(q0, empty word)`.
pub fn initial_total_state(spec: &TransducerSpec) -> TotalState {
    let key = (spec.initial(), OutputWord::new());
    match spec.kind() {
        Kind::Quantum => {
            let mut amp = BTreeMap::new();
            amp.insert(key, C64::new(1.0, 0.0));
            TotalState::Quantum(QuantumTotalState { amp, p_acc: BTreeMap::new(), p_rej: 0.0 })
        }
        _ => {
            let mut p_non = BTreeMap::new();
            p_non.insert(key, 1.0);
            TotalState::Prob(ProbTotalState { p_non, p_acc: BTreeMap::new(), p_rej: 0.0 })
        }
    }
}

/// One total-state transformation `T_a`.
pub fn step(spec: &TransducerSpec, state: &TotalState, sym: InputSymbol) -> Result<TotalState> {
    if let InputSymbol::Letter(i) = sym {
        if i >= spec.input_alphabet().len() {
            return Err(Error::UnknownSymbol { symbol: format!("#{i}") });
        }
    }
    let m = spec.matrix(sym);
    match state {
        TotalState::Prob(s) => {
            let mut next = ProbTotalState {
                p_non: BTreeMap::new(),
                p_acc: s.p_acc.clone(),
                p_rej: s.p_rej,
            };
            for ((q, w), &mass) in &s.p_non {
                let mut out = w.clone();
                out.extend_from_slice(spec.output(sym, *q));
                for &(p, v) in m.row(*q) {
                    let flow = mass * v.re;
                    if flow == 0.0 {
                        continue;
                    }
                    if spec.is_accepting(p) {
                        *next.p_acc.entry(out.clone()).or_insert(0.0) += flow;
                    } else if spec.is_halting(p) {
                        next.p_rej += flow;
                    } else {
                        *next.p_non.entry((p, out.clone())).or_insert(0.0) += flow;
                    }
                }
            }
            next.p_non.retain(|_, v| *v > 0.0);
            Ok(TotalState::Prob(next))
        }
        TotalState::Quantum(s) => {
            let mut next_amp: BTreeMap<(usize, OutputWord), C64> = BTreeMap::new();
            // Halting contributions grouped by (target state, entire output
            // word): amplitudes are summed inside a group before squaring.
            let mut acc_groups: BTreeMap<(usize, OutputWord), C64> = BTreeMap::new();
            let mut rej_groups: BTreeMap<(usize, OutputWord), C64> = BTreeMap::new();
            for ((q, w), &a) in &s.amp {
                let mut out = w.clone();
                out.extend_from_slice(spec.output(sym, *q));
                for &(p, v) in m.row(*q) {
                    let flow = a * v;
                    if flow.norm_sqr() == 0.0 {
                        continue;
                    }
                    let bucket = if spec.is_accepting(p) {
                        &mut acc_groups
                    } else if spec.is_halting(p) {
                        &mut rej_groups
                    } else {
                        &mut next_amp
                    };
                    *bucket.entry((p, out.clone())).or_insert(C64::new(0.0, 0.0)) += flow;
                }
            }
            let mut next = QuantumTotalState {
                amp: BTreeMap::new(),
                p_acc: s.p_acc.clone(),
                p_rej: s.p_rej,
            };
            for ((_, out), a) in acc_groups {
                *next.p_acc.entry(out).or_insert(0.0) += a.norm_sqr();
            }
            for (_, a) in rej_groups {
                next.p_rej += a.norm_sqr();
            }
            next_amp.retain(|_, a| a.norm() > PRUNE_EPS);
            next.amp = next_amp;
            Ok(TotalState::Quantum(next))
        }
    }
}

/// Full framed run: begin marker, the input word, end marker.
pub fn run(spec: &TransducerSpec, input: &[usize]) -> Result<TotalState> {
    let mut state = initial_total_state(spec);
    for sym in spec.framed(input)? {
        state = step(spec, &state, sym)?;
    }
    Ok(state)
}

/// Mixed total-state norm: 2-norm of the coherent part (1-norm of the
/// running part for probabilistic machines) plus the 1-norms of the halted
/// parts. Not conserved by quantum steps; see [`conserved_mass`].
pub fn total_state_norm(state: &TotalState) -> f64 {
    match state {
        TotalState::Prob(s) => {
            s.p_non.values().map(|v| v.abs()).sum::<f64>()
                + s.p_acc.values().map(|v| v.abs()).sum::<f64>()
                + s.p_rej.abs()
        }
        TotalState::Quantum(s) => {
            s.amp.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
                + s.p_acc.values().map(|v| v.abs()).sum::<f64>()
                + s.p_rej.abs()
        }
    }
}

/// The physically conserved quantity: squared amplitude mass plus halted
/// probability mass (plain total probability for probabilistic machines).
pub fn conserved_mass(state: &TotalState) -> f64 {
    match state {
        TotalState::Prob(s) => {
            s.p_non.values().sum::<f64>() + s.p_acc.values().sum::<f64>() + s.p_rej
        }
        TotalState::Quantum(s) => {
            s.amp.values().map(|a| a.norm_sqr()).sum::<f64>()
                + s.p_acc.values().sum::<f64>()
                + s.p_rej
        }
    }
}

/// The distribution `T(.|v)` over output words plus the reject outcome.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputDistribution {
    pub accept: BTreeMap<OutputWord, f64>,
    pub reject: f64,
    /// Mass that was still coherent/running after the end marker and was
    /// folded into `reject`. Nonzero only for machines violating the
    /// end-marker rule; kept as a diagnostic.
    pub residual_nonhalting: f64,
}

impl OutputDistribution {
    pub fn accept_prob(&self, w: &[u8]) -> f64 {
        self.accept.get(w).copied().unwrap_or(0.0)
    }

    pub fn total_accept(&self) -> f64 {
        self.accept.values().sum()
    }

    pub fn from_final_state(state: &TotalState) -> Self {
        let residual = state.non_halting_mass();
        OutputDistribution {
            accept: state.p_acc().clone(),
            reject: state.p_rej() + residual,
            residual_nonhalting: residual,
        }
    }
}

pub fn output_distribution(spec: &TransducerSpec, input: &[usize]) -> Result<OutputDistribution> {
    let state = run(spec, input)?;
    Ok(OutputDistribution::from_final_state(&state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{MatrixBuilder, SparseMat};
    use crate::machine::Alphabet;
    use std::collections::BTreeSet;

    /// One input symbol "a", states q0 (non-halting) and h (accepting);
    /// identity dynamics except END drains q0 -> h; f_a(q0) = "x".
    fn printing_pfst() -> TransducerSpec {
        let mut transitions = BTreeMap::new();
        transitions.insert(InputSymbol::Init, SparseMat::identity(2));
        transitions.insert(InputSymbol::Letter(0), SparseMat::identity(2));
        let mut b = MatrixBuilder::new(2);
        b.edge(0, 1);
        transitions.insert(InputSymbol::End, b.finish_stochastic().unwrap());
        let mut outputs = BTreeMap::new();
        outputs.insert(InputSymbol::Letter(0), vec![vec![0u8], vec![]]);
        TransducerSpec::new(
            Kind::Probabilistic,
            vec!["q0".into(), "h".into()],
            Alphabet::new(["a"]).unwrap(),
            Alphabet::new(["x"]).unwrap(),
            0,
            BTreeSet::from([1]),
            BTreeSet::new(),
            transitions,
            outputs,
        )
        .unwrap()
    }

    /// Two-branch quantum machine whose branches can interfere at the step
    /// after INIT. `same_outputs` controls whether both branches print the
    /// same word on that step.
    fn interference_qfst(same_outputs: bool) -> TransducerSpec {
        // states: q0, b0, b1, t (all non-halting), acc
        let n = 5;
        let h = 1.0 / 2.0_f64.sqrt();
        let mut transitions = BTreeMap::new();
        let mut init = MatrixBuilder::new(n);
        init.set_row(0, vec![(1, C64::new(h, 0.0)), (2, C64::new(-h, 0.0))]);
        transitions.insert(InputSymbol::Init, init.finish_unitary().unwrap());
        let mut va = MatrixBuilder::new(n);
        // Both branches map to t with amplitude 1 each... not unitary as a
        // permutation; use a Hadamard pair so rows stay orthonormal.
        va.set_row(1, vec![(3, C64::new(h, 0.0)), (0, C64::new(h, 0.0))]);
        va.set_row(2, vec![(3, C64::new(h, 0.0)), (0, C64::new(-h, 0.0))]);
        transitions.insert(InputSymbol::Letter(0), va.finish_unitary().unwrap());
        // END is never exercised by these single-step tests.
        let mut endb = MatrixBuilder::new(n);
        endb.edge(0, 4);
        transitions.insert(InputSymbol::End, endb.finish_unitary().unwrap());
        let mut outputs = BTreeMap::new();
        let w0 = vec![0u8];
        let w1 = if same_outputs { vec![0u8] } else { vec![1u8] };
        outputs.insert(InputSymbol::Letter(0), vec![vec![], w0, w1, vec![], vec![]]);
        TransducerSpec::new(
            Kind::Quantum,
            vec!["q0".into(), "b0".into(), "b1".into(), "t".into(), "acc".into()],
            Alphabet::new(["a"]).unwrap(),
            Alphabet::new(["x", "y"]).unwrap(),
            0,
            BTreeSet::from([4]),
            BTreeSet::new(),
            transitions,
            outputs,
        )
        .unwrap()
    }

    #[test]
    fn initial_states() {
        let spec = printing_pfst();
        match initial_total_state(&spec) {
            TotalState::Prob(s) => {
                assert_eq!(s.p_non.len(), 1);
                assert_eq!(s.p_non[&(0, vec![])], 1.0);
            }
            _ => panic!("expected probabilistic state"),
        }
        let q = interference_qfst(true);
        let init = initial_total_state(&q);
        assert!((total_state_norm(&init) - 1.0).abs() < 1e-15);
        match init {
            TotalState::Quantum(s) => assert_eq!(s.amp[&(0, vec![])], C64::new(1.0, 0.0)),
            _ => panic!("expected quantum state"),
        }
    }

    #[test]
    fn pfst_step_appends_output() {
        let spec = printing_pfst();
        let s0 = initial_total_state(&spec);
        let s1 = step(&spec, &s0, InputSymbol::Letter(0)).unwrap();
        match &s1 {
            TotalState::Prob(s) => {
                assert_eq!(s.p_non[&(0, vec![0u8])], 1.0);
                assert_eq!(s.p_non.len(), 1);
            }
            _ => unreachable!(),
        }
        assert!((total_state_norm(&s1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn destructive_interference_requires_equal_outputs() {
        // Branch amplitudes 1/sqrt2 and -1/sqrt2 map into the same state t.
        // With equal printed words the t-components cancel; with different
        // words both survive at magnitude 1/2 (the output tape blocks the
        // interference).
        let cancel = interference_qfst(true);
        let s = step(
            &cancel,
            &initial_total_state(&cancel),
            InputSymbol::Init,
        )
        .unwrap();
        let s = step(&cancel, &s, InputSymbol::Letter(0)).unwrap();
        match &s {
            TotalState::Quantum(q) => {
                let t_mass: f64 = q
                    .amp
                    .iter()
                    .filter(|((p, _), _)| *p == 3)
                    .map(|(_, a)| a.norm_sqr())
                    .sum();
                assert!(t_mass < 1e-20, "expected cancellation, got {t_mass}");
            }
            _ => unreachable!(),
        }

        let keep = interference_qfst(false);
        let s = step(&keep, &initial_total_state(&keep), InputSymbol::Init).unwrap();
        let s = step(&keep, &s, InputSymbol::Letter(0)).unwrap();
        match &s {
            TotalState::Quantum(q) => {
                let masses: Vec<f64> = q
                    .amp
                    .iter()
                    .filter(|((p, _), _)| *p == 3)
                    .map(|(_, a)| a.norm_sqr())
                    .collect();
                assert_eq!(masses.len(), 2);
                for m in masses {
                    assert!((m - 0.25).abs() < 1e-12);
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn empty_input_applies_markers_only() {
        let spec = printing_pfst();
        let final_state = run(&spec, &[]).unwrap();
        let dist = OutputDistribution::from_final_state(&final_state);
        assert_eq!(dist.accept_prob(&[]), 1.0);
        assert_eq!(dist.reject, 0.0);
    }

    #[test]
    fn mixed_norm_formula() {
        let mut amp = BTreeMap::new();
        amp.insert((0usize, vec![]), C64::new(1.0 / 2.0_f64.sqrt(), 0.0));
        let mut p_acc = BTreeMap::new();
        p_acc.insert(vec![0u8], 0.5);
        let s = TotalState::Quantum(QuantumTotalState { amp, p_acc, p_rej: 0.0 });
        let expected = 1.0 / 2.0_f64.sqrt() + 0.5;
        assert!((total_state_norm(&s) - expected).abs() < 1e-15);
        let zero = TotalState::Quantum(QuantumTotalState::default());
        assert_eq!(total_state_norm(&zero), 0.0);
    }
}
