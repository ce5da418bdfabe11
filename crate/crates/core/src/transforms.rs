//! Machine-to-machine constructions: normalizing the end transition of an
//! automaton to a permutation, automaton <-> transducer conversions, the
//! squared-moduli quantum-to-probabilistic collapse, and cutpoint shifting.

use crate::linalg::{MatrixBuilder, SparseMat};
use crate::machine::{Alphabet, InputSymbol, Kind, TransducerSpec};
use crate::qfa::{validate_qfa, QfaSpec};
use crate::zoo::SpecBuilder;
use crate::{C64, Error, OutputWord, Result, DEFAULT_TOL};
use std::collections::{BTreeMap, BTreeSet};

/// Rewrite an automaton so its end-marker transition is a permutation,
/// preserving accept/reject probabilities on every input.
///
/// Each halting state `q` gets a twin `q'`; a unitary `U` plays the old end
/// transition "in advance" (mapping non-halting states onto twins), every
/// mid-run matrix is conjugated by `U`, and the end transition becomes the
/// twin swap. Rows of the new end transition out of the now-unreachable
/// original non-halting states are routed to fresh rejecting sinks so the
/// drain rule holds for every row, not just reachable ones.
pub fn normalize_end_transition(qfa: &QfaSpec) -> Result<QfaSpec> {
    let report = validate_qfa(qfa, DEFAULT_TOL);
    if !report.is_empty() {
        return Err(Error::Precondition(format!(
            "automaton fails validation before normalization:\n{report}"
        )));
    }
    let n = qfa.n_states();
    let mut names = qfa.states.clone();
    let mut twin = vec![usize::MAX; n];
    let mut sink = vec![usize::MAX; n];
    for q in 0..n {
        if qfa.is_halting(q) {
            twin[q] = names.len();
            names.push(format!("twin:{}", qfa.states[q]));
        } else {
            sink[q] = names.len();
            names.push(format!("sink:{}", qfa.states[q]));
        }
    }
    let n2 = names.len();
    // The twin swap, extended with non-halting <-> sink swaps.
    let mut pi = vec![0usize; n2];
    for q in 0..n {
        let partner = if qfa.is_halting(q) { twin[q] } else { sink[q] };
        pi[q] = partner;
        pi[partner] = q;
    }
    let pi_mat = {
        let mut b = MatrixBuilder::new(n2);
        for (q, &p) in pi.iter().enumerate() {
            b.edge(q, p);
        }
        b.finish_unitary()?
    };
    // U: non-halting rows play the old end transition into the twins,
    // halting rows stay put, twin/sink rows are completed.
    let u = {
        let mut b = MatrixBuilder::new(n2);
        let end = qfa.matrix(InputSymbol::End);
        for q in 0..n {
            if qfa.is_halting(q) {
                b.edge(q, q);
            } else {
                let row = end
                    .row(q)
                    .iter()
                    .map(|&(p, v)| (pi[p], v))
                    .collect::<Vec<_>>();
                b.set_row(q, row);
            }
        }
        b.finish_unitary()?
    };
    let u_dag = u.dagger();
    let extend = |m: &SparseMat| -> SparseMat {
        let mut b = MatrixBuilder::new(n2);
        for q in 0..n {
            b.set_row(q, m.row(q).to_vec());
        }
        for q in n..n2 {
            b.edge(q, q);
        }
        b.finish_unitary().expect("identity extension stays unitary")
    };
    let mut transitions = BTreeMap::new();
    for (sym, m) in &qfa.transitions {
        let new = match sym {
            InputSymbol::Init => extend(m).mul(&u),
            InputSymbol::End => pi_mat.clone(),
            InputSymbol::Letter(_) => u_dag.mul(&extend(m)).mul(&u),
        };
        transitions.insert(*sym, new);
    }
    let mut rejecting = qfa.rejecting.clone();
    for q in 0..n {
        if !qfa.is_halting(q) {
            rejecting.insert(sink[q]);
        }
    }
    let out = QfaSpec {
        states: names,
        input_alphabet: qfa.input_alphabet.clone(),
        initial: qfa.initial,
        accepting: qfa.accepting.clone(),
        rejecting,
        transitions,
    };
    out.check_shape()?;
    Ok(out)
}

fn class_word(qfa: &QfaSpec, q: usize) -> OutputWord {
    if qfa.accepting.contains(&q) {
        vec![0]
    } else if qfa.rejecting.contains(&q) {
        vec![1]
    } else {
        Vec::new()
    }
}

/// Turn an automaton with a permutation end transition into a transducer
/// computing `L x {0} union L-complement x {1}`: halting states are delayed
/// by one step into fresh accepting "hat" states, printing 0 or 1 according
/// to the class they came from.
pub fn qfa_to_qfst(qfa: &QfaSpec) -> Result<TransducerSpec> {
    let end_perm = qfa
        .matrix(InputSymbol::End)
        .as_permutation(DEFAULT_TOL)
        .ok_or_else(|| {
            Error::Precondition(
                "end transition is not a permutation; apply normalize_end_transition first".into(),
            )
        })?;
    let n = qfa.n_states();
    let names: Vec<String> = qfa
        .states
        .iter()
        .cloned()
        .chain(qfa.states.iter().map(|s| format!("hat:{s}")))
        .collect();
    let hat = |q: usize| n + q;
    let mut transitions = BTreeMap::new();
    let mut outputs: BTreeMap<InputSymbol, Vec<OutputWord>> = BTreeMap::new();
    for (sym, m) in &qfa.transitions {
        let mut b = MatrixBuilder::new(2 * n);
        let mut words = vec![OutputWord::new(); 2 * n];
        match sym {
            InputSymbol::End => {
                for q in 0..n {
                    // Everything gets hatted: parked halting mass prints its
                    // own class, coherent mass prints the class of its
                    // permutation image.
                    b.edge(q, hat(end_perm[q]));
                    words[q] = if qfa.is_halting(q) {
                        class_word(qfa, q)
                    } else {
                        class_word(qfa, end_perm[q])
                    };
                    b.edge(hat(q), q);
                }
            }
            _ => {
                for q in 0..n {
                    if qfa.is_halting(q) {
                        // Parked mass moves to its hat, printing its class.
                        b.edge(q, hat(q));
                        words[q] = class_word(qfa, q);
                        // The hat row reuses the otherwise-unused automaton
                        // row, keeping the matrix unitary and sparse.
                        b.set_row(hat(q), m.row(q).to_vec());
                    } else {
                        b.set_row(q, m.row(q).to_vec());
                        b.edge(hat(q), hat(q));
                    }
                }
            }
        }
        transitions.insert(*sym, b.finish_unitary()?);
        outputs.insert(*sym, words);
    }
    TransducerSpec::new(
        Kind::Quantum,
        names,
        qfa.input_alphabet.clone(),
        Alphabet::new(["0", "1"])?,
        qfa.initial,
        (n..2 * n).collect(),
        BTreeSet::new(),
        transitions,
        outputs,
    )
}

/// Simulate a transducer over the output alphabet {0, 1} by an automaton
/// whose states carry the tape content up to length `t = 1 + max print`.
/// Contents of length two or more can never shrink back, so those states
/// reject immediately; accepting are exactly the transducer-accepting
/// states with tape "0".
pub fn qfst_to_qfa(spec: &TransducerSpec) -> Result<QfaSpec> {
    if spec.kind() != Kind::Quantum {
        return Err(Error::Precondition("conversion needs a quantum transducer".into()));
    }
    if spec.output_alphabet().tokens() != ["0", "1"] {
        return Err(Error::Precondition(format!(
            "conversion needs output alphabet [\"0\", \"1\"], got {:?}; \
             longer tape alphabets exceed the bounded-tape state space",
            spec.output_alphabet().tokens()
        )));
    }
    let t = 1 + spec.max_output_len();
    // All binary words of length <= t, indexed; word index 0 is epsilon.
    let mut words: Vec<OutputWord> = vec![OutputWord::new()];
    let mut index: BTreeMap<OutputWord, usize> = BTreeMap::new();
    index.insert(OutputWord::new(), 0);
    let mut frontier = vec![OutputWord::new()];
    for _ in 0..t {
        let mut next = Vec::new();
        for w in &frontier {
            for bit in 0..2u8 {
                let mut x = w.clone();
                x.push(bit);
                index.insert(x.clone(), words.len());
                words.push(x.clone());
                next.push(x);
            }
        }
        frontier = next;
    }
    let n = spec.n_states();
    let wn = words.len();
    let state_ix = |q: usize, w: usize| q * wn + w;
    let names: Vec<String> = (0..n * wn)
        .map(|i| {
            let (q, w) = (i / wn, i % wn);
            format!(
                "{}|{}",
                spec.state_name(q),
                spec.output_alphabet().render_output(&words[w])
            )
        })
        .collect();
    let mut accepting = BTreeSet::new();
    let mut rejecting = BTreeSet::new();
    let zero_ix = index[&vec![0u8]];
    for q in 0..n {
        for w in 0..wn {
            let ix = state_ix(q, w);
            if spec.is_accepting(q) && w == zero_ix {
                accepting.insert(ix);
            } else if words[w].len() >= 2 || spec.is_halting(q) {
                rejecting.insert(ix);
            }
        }
    }
    let mut transitions = BTreeMap::new();
    for (sym, m) in spec.transitions() {
        let mut b = MatrixBuilder::new(n * wn);
        for q in spec.non_halting_states() {
            let print = spec.output(*sym, q);
            for w in 0..wn {
                if words[w].len() >= 2 {
                    continue; // already rejecting; completion covers the row
                }
                let mut tape = words[w].clone();
                tape.extend_from_slice(print);
                let tape_ix = index[&tape]; // |tape| <= 1 + max print = t
                let row = m
                    .row(q)
                    .iter()
                    .map(|&(p, v)| (state_ix(p, tape_ix), v))
                    .collect::<Vec<_>>();
                b.set_row(state_ix(q, w), row);
            }
        }
        transitions.insert(*sym, b.finish_unitary()?);
    }
    let qfa = QfaSpec {
        states: names,
        input_alphabet: spec.input_alphabet().clone(),
        initial: state_ix(spec.initial(), 0),
        accepting,
        rejecting,
        transitions,
    };
    qfa.check_shape()?;
    Ok(qfa)
}

/// Replace every amplitude by its squared modulus, turning a quantum
/// machine into a probabilistic one over the same states and outputs.
pub fn squared_moduli_pfst(spec: &TransducerSpec) -> Result<TransducerSpec> {
    if spec.kind() != Kind::Quantum {
        return Err(Error::Precondition("squared-moduli conversion needs a quantum machine".into()));
    }
    let transitions = spec
        .transitions()
        .iter()
        .map(|(sym, m)| (*sym, m.map_entries(|v| C64::new(v.norm_sqr(), 0.0))))
        .collect();
    TransducerSpec::new(
        Kind::Probabilistic,
        spec.state_names().to_vec(),
        spec.input_alphabet().clone(),
        spec.output_alphabet().clone(),
        spec.initial(),
        spec.accepting().clone(),
        spec.rejecting().clone(),
        transitions,
        spec.outputs().clone(),
    )
}

/// A probabilistic machine that ignores its input and rejects at the end
/// marker; the mixing partner for shifting a cutpoint above 1/2.
fn always_reject(input: &Alphabet, output: &Alphabet) -> Result<TransducerSpec> {
    let mut b = SpecBuilder::new_transducer(Kind::Probabilistic, input.clone(), output.clone());
    let idle = b.state("idle");
    b.set_initial(idle);
    let rej = b.state("rej");
    b.reject(rej);
    for sym in b.input_symbols() {
        if sym == InputSymbol::End {
            b.edge(sym, idle, rej);
        } else {
            b.edge(sym, idle, idle);
        }
    }
    b.build()
}

/// Probability weight of the deterministic branch when shifting cutpoint
/// `alpha` to 1/2.
pub fn shift_probability(alpha: f64) -> f64 {
    if alpha <= 0.5 {
        (0.5 - alpha) / (1.0 - alpha)
    } else {
        1.0 - 1.0 / (2.0 * alpha)
    }
}

/// Mix a probabilistic machine with a caller-supplied deterministic
/// subprogram at the begin marker so that an isolated cutpoint `alpha`
/// becomes one around 1/2. For `alpha <= 1/2` the subprogram (required)
/// runs with probability `p = (1/2 - alpha)/(1 - alpha)`; for
/// `alpha > 1/2` an internal always-reject branch runs with probability
/// `1 - 1/(2 alpha)`. `epsilon` is the claimed isolation radius of the
/// input machine and is only sanity-checked.
pub fn shift_cutpoint(
    spec: &TransducerSpec,
    alpha: f64,
    epsilon: f64,
    subprogram: Option<&TransducerSpec>,
) -> Result<TransducerSpec> {
    if spec.kind() == Kind::Quantum {
        return Err(Error::Precondition("cutpoint shifting operates on probabilistic machines".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!("cutpoint must lie in (0, 1), got {alpha}")));
    }
    if epsilon <= 0.0 {
        return Err(Error::Precondition("isolation radius must be positive".into()));
    }
    let fallback;
    let branch = if alpha <= 0.5 {
        subprogram.ok_or_else(|| {
            Error::Precondition("shifting a cutpoint below 1/2 needs a deterministic subprogram".into())
        })?
    } else {
        fallback = always_reject(spec.input_alphabet(), spec.output_alphabet())?;
        &fallback
    };
    if branch.kind() == Kind::Quantum {
        return Err(Error::Precondition("subprogram must be deterministic or probabilistic".into()));
    }
    if branch.input_alphabet() != spec.input_alphabet()
        || branch.output_alphabet() != spec.output_alphabet()
    {
        return Err(Error::Precondition("subprogram must share both alphabets".into()));
    }
    for (m, who) in [(spec, "machine"), (branch, "subprogram")] {
        if !m.output(InputSymbol::Init, m.initial()).is_empty() {
            return Err(Error::Precondition(format!(
                "{who} prints on the begin marker; its print would be lost in the mix"
            )));
        }
    }
    let p = shift_probability(alpha);

    let n_sub = branch.n_states();
    let n_main = spec.n_states();
    let sub_ix = |q: usize| 1 + q;
    let main_ix = |q: usize| 1 + n_sub + q;
    let mut names = vec!["mix:q0".to_string()];
    names.extend(branch.state_names().iter().map(|s| format!("sub:{s}")));
    names.extend(spec.state_names().iter().map(|s| format!("main:{s}")));
    let total = names.len();

    let mut transitions = BTreeMap::new();
    let mut outputs: BTreeMap<InputSymbol, Vec<OutputWord>> = BTreeMap::new();
    for (sym, main_m) in spec.transitions() {
        let sub_m = branch.matrix(*sym);
        let mut b = MatrixBuilder::new(total);
        if *sym == InputSymbol::Init {
            let mut row: Vec<(usize, C64)> = Vec::new();
            if p > 0.0 {
                row.extend(
                    sub_m
                        .row(branch.initial())
                        .iter()
                        .map(|&(q, v)| (sub_ix(q), v * p)),
                );
            }
            row.extend(
                main_m
                    .row(spec.initial())
                    .iter()
                    .map(|&(q, v)| (main_ix(q), v * (1.0 - p))),
            );
            b.set_row(0, row);
        } else {
            b.edge(0, 0);
        }
        for q in 0..n_sub {
            b.set_row(
                sub_ix(q),
                sub_m.row(q).iter().map(|&(t, v)| (sub_ix(t), v)).collect(),
            );
        }
        for q in 0..n_main {
            b.set_row(
                main_ix(q),
                main_m.row(q).iter().map(|&(t, v)| (main_ix(t), v)).collect(),
            );
        }
        transitions.insert(*sym, b.finish_stochastic()?);
        let mut words = vec![OutputWord::new(); total];
        for q in 0..n_sub {
            words[sub_ix(q)] = branch.output(*sym, q).to_vec();
        }
        for q in 0..n_main {
            words[main_ix(q)] = spec.output(*sym, q).to_vec();
        }
        outputs.insert(*sym, words);
    }
    let accepting = spec
        .accepting()
        .iter()
        .map(|&q| main_ix(q))
        .chain(branch.accepting().iter().map(|&q| sub_ix(q)))
        .collect();
    let mut rejecting: BTreeSet<usize> = spec
        .rejecting()
        .iter()
        .map(|&q| main_ix(q))
        .chain(branch.rejecting().iter().map(|&q| sub_ix(q)))
        .collect();
    // The mix state is left behind at the begin marker; END must still
    // drain it, which the stochastic completion's self-loop would not.
    let drain = total;
    names.push("mix:drain".into());
    rejecting.insert(drain);
    let mut fixed = BTreeMap::new();
    for (sym, m) in transitions {
        let mut b = MatrixBuilder::new(total + 1);
        for q in 0..total {
            let mut row = m.row(q).to_vec();
            if sym == InputSymbol::End && q == 0 {
                row = vec![(drain, C64::new(1.0, 0.0))];
            }
            b.set_row(q, row);
        }
        fixed.insert(sym, b.finish_stochastic()?);
    }
    let mut padded_outputs = BTreeMap::new();
    for (sym, mut words) in outputs {
        words.push(OutputWord::new());
        padded_outputs.insert(sym, words);
    }
    TransducerSpec::new(
        Kind::Probabilistic,
        names,
        spec.input_alphabet().clone(),
        spec.output_alphabet().clone(),
        0,
        accepting,
        rejecting,
        fixed,
        padded_outputs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::validate_spec;
    use crate::qfa::qfa_run;
    use crate::semantics::output_distribution;
    use crate::zoo::{build_machine, build_sample_qfa, Family, Params, SampleQfa};

    fn all_inputs(k: usize, max_len: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        let mut level = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
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

    #[test]
    fn normalization_preserves_outcomes() {
        for which in [SampleQfa::Parity, SampleQfa::End0] {
            let qfa = build_sample_qfa(which).unwrap();
            let norm = normalize_end_transition(&qfa).unwrap();
            assert!(validate_qfa(&norm, 1e-9).is_empty());
            assert!(norm
                .matrix(InputSymbol::End)
                .as_permutation(1e-9)
                .is_some());
            for input in all_inputs(2, 6) {
                let a = qfa_run(&qfa, &input).unwrap();
                let b = qfa_run(&norm, &input).unwrap();
                assert!(
                    (a.accept - b.accept).abs() < 1e-9 && (a.reject - b.reject).abs() < 1e-9,
                    "{which:?} diverges on {input:?}: {a:?} vs {b:?}"
                );
            }
        }
    }

    #[test]
    fn qfa_to_qfst_encodes_language_as_outputs() {
        let qfa = build_sample_qfa(SampleQfa::Parity).unwrap();
        let norm = normalize_end_transition(&qfa).unwrap();
        let qfst = qfa_to_qfst(&norm).unwrap();
        assert!(validate_spec(&qfst, 1e-9).is_empty());
        assert!(qfst.rejecting().is_empty());
        for input in all_inputs(2, 6) {
            let out = qfa_run(&qfa, &input).unwrap();
            let dist = output_distribution(&qfst, &input).unwrap();
            assert!((dist.accept_prob(&[0]) - out.accept).abs() < 1e-9);
            assert!((dist.accept_prob(&[1]) - out.reject).abs() < 1e-9);
            assert!((dist.accept_prob(&[0]) + dist.accept_prob(&[1]) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unnormalized_end_transition_is_rejected() {
        // A valid automaton whose end transition splits amplitude between
        // the two halting states and is therefore no permutation.
        let h = 1.0 / 2.0_f64.sqrt();
        let mut b = MatrixBuilder::new(3);
        b.set_row(0, vec![(1, C64::new(h, 0.0)), (2, C64::new(h, 0.0))]);
        let end = b.finish_unitary().unwrap();
        let mut transitions = BTreeMap::new();
        transitions.insert(InputSymbol::Init, SparseMat::identity(3));
        transitions.insert(InputSymbol::Letter(0), SparseMat::identity(3));
        transitions.insert(InputSymbol::End, end);
        let qfa = QfaSpec {
            states: vec!["q0".into(), "acc".into(), "rej".into()],
            input_alphabet: Alphabet::new(["a"]).unwrap(),
            initial: 0,
            accepting: BTreeSet::from([1]),
            rejecting: BTreeSet::from([2]),
            transitions,
        };
        assert!(validate_qfa(&qfa, 1e-9).is_empty());
        assert!(qfa_to_qfst(&qfa).is_err());
        // Normalizing first makes it convertible and behavior-equivalent.
        let norm = normalize_end_transition(&qfa).unwrap();
        let qfst = qfa_to_qfst(&norm).unwrap();
        for input in all_inputs(1, 4) {
            let a = qfa_run(&qfa, &input).unwrap();
            let d = output_distribution(&qfst, &input).unwrap();
            assert!((d.accept_prob(&[0]) - a.accept).abs() < 1e-12);
            assert!((d.accept_prob(&[1]) - a.reject).abs() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_preserves_acceptance() {
        for which in [SampleQfa::Parity, SampleQfa::End0] {
            let qfa = build_sample_qfa(which).unwrap();
            let norm = normalize_end_transition(&qfa).unwrap();
            let qfst = qfa_to_qfst(&norm).unwrap();
            let back = qfst_to_qfa(&qfst).unwrap();
            assert!(validate_qfa(&back, 1e-9).is_empty());
            let max_len = if which == SampleQfa::Parity { 6 } else { 5 };
            for input in all_inputs(2, max_len) {
                let a = qfa_run(&qfa, &input).unwrap();
                let b = qfa_run(&back, &input).unwrap();
                assert!(
                    (a.accept - b.accept).abs() < 1e-9,
                    "{which:?} roundtrip diverges on {input:?}: {} vs {}",
                    a.accept,
                    b.accept
                );
                assert!((a.reject - b.reject).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn wide_prints_blow_up_tape_states_and_reject_overflow() {
        // A transducer printing two symbols per step: t = 3, so the
        // automaton carries tapes up to length 3 and rejects length >= 2.
        let mut b = SpecBuilder::new_transducer(
            Kind::Quantum,
            Alphabet::new(["a"]).unwrap(),
            Alphabet::new(["0", "1"]).unwrap(),
        );
        let q0 = b.state("q0");
        b.set_initial(q0);
        let acc = b.state("acc");
        b.accept(acc);
        b.edge(InputSymbol::Init, q0, q0);
        b.edge(InputSymbol::Letter(0), q0, q0);
        b.print(InputSymbol::Letter(0), q0, vec![0, 1]);
        b.edge(InputSymbol::End, q0, acc);
        let spec = b.build().unwrap();
        let qfa = qfst_to_qfa(&spec).unwrap();
        // 2 states x (2^4 - 1) tape words
        assert_eq!(qfa.n_states(), 2 * 15);
        for m in qfa.transitions.values() {
            assert!(crate::linalg::is_unitary(m, 1e-9));
        }
        // One step prints "01": tape length 2 means certain rejection.
        let out = qfa_run(&qfa, &[0]).unwrap();
        assert!((out.reject - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squared_moduli_examples() {
        let h = 1.0 / 2.0_f64.sqrt();
        let had = SparseMat::from_dense(&[
            vec![C64::new(h, 0.0), C64::new(h, 0.0)],
            vec![C64::new(h, 0.0), C64::new(-h, 0.0)],
        ])
        .unwrap();
        let sq = had.map_entries(|v| C64::new(v.norm_sqr(), 0.0));
        for q in 0..2 {
            for p in 0..2 {
                assert!((sq.entry(q, p).re - 0.5).abs() < 1e-15);
            }
        }
        let qfst = build_machine(Family::R2, Kind::Quantum, &Params::default()).unwrap();
        let pfst = squared_moduli_pfst(&qfst).unwrap();
        assert!(validate_spec(&pfst, 1e-9).is_empty());
        assert_eq!(pfst.kind(), Kind::Probabilistic);
    }

    #[test]
    fn squared_moduli_preserves_interference_free_machines() {
        // All tile unitaries are the identity, so no interference ever
        // happens and the collapse leaves every distribution unchanged.
        use crate::oracle::compare_distributions;
        use crate::zoo::{build_pcp_machine, PcpInstance};
        let inst = PcpInstance::new(vec!["a", "ba"], vec!["ab", "a"]).unwrap();
        let qfst = build_pcp_machine(&inst, Kind::Quantum).unwrap();
        let pfst = squared_moduli_pfst(&qfst).unwrap();
        for input in all_inputs(2, 5) {
            let a = output_distribution(&qfst, &input).unwrap();
            let b = output_distribution(&pfst, &input).unwrap();
            let diff = compare_distributions(&qfst, &a, &b, 1e-12);
            assert!(diff.is_empty(), "{input:?}: {:?}", diff.mismatches);
        }
    }

    #[test]
    fn squared_moduli_loses_interference() {
        // The all-equal input relies on end-marker cancellation; the
        // stochastic collapse cannot cancel and accepts strictly more.
        let qfst = build_machine(
            Family::R3,
            Kind::Quantum,
            &Params { k: 2, l: 2, cap: Some(6) },
        )
        .unwrap();
        let pfst = squared_moduli_pfst(&qfst).unwrap();
        let input = qfst.input_alphabet().tokenize("001122").unwrap();
        let target = qfst.output_alphabet().tokenize_output("33").unwrap();
        let p_q = output_distribution(&qfst, &input).unwrap().accept_prob(&target);
        let p_p = output_distribution(&pfst, &input).unwrap().accept_prob(&target);
        assert!((p_q - 3.0 / 7.0).abs() < 1e-12);
        assert!(p_p > p_q + 0.1, "interference survived the collapse: {p_p} vs {p_q}");
    }

    #[test]
    fn shift_probability_formula() {
        assert_eq!(shift_probability(0.5), 0.0);
        assert!((shift_probability(1.0 / 3.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn shifted_machine_is_the_convex_mixture() {
        // Original: squared-moduli R4 (cutpoint 1/4); subprogram: the
        // deterministic last-symbol copier is alphabet-incompatible, so use
        // an always-reject branch via alpha > 1/2 and a manual sub for
        // alpha < 1/2.
        let orig = build_machine(Family::R4, Kind::Probabilistic, &Params { cap: Some(6), ..Params::default() }).unwrap();
        let sub = always_reject(orig.input_alphabet(), orig.output_alphabet()).unwrap();
        let alpha = 1.0 / 3.0;
        let mixed = shift_cutpoint(&orig, alpha, 0.05, Some(&sub)).unwrap();
        assert!(validate_spec(&mixed, 1e-9).is_empty());
        let p = shift_probability(alpha);
        for input in all_inputs(4, 4) {
            let d_orig = output_distribution(&orig, &input).unwrap();
            let d_sub = output_distribution(&sub, &input).unwrap();
            let d_mix = output_distribution(&mixed, &input).unwrap();
            let mut keys: Vec<_> = d_orig.accept.keys().chain(d_sub.accept.keys()).collect();
            keys.sort();
            keys.dedup();
            for w in keys {
                let want = p * d_sub.accept_prob(w) + (1.0 - p) * d_orig.accept_prob(w);
                assert!((d_mix.accept_prob(w) - want).abs() < 1e-12);
            }
            let want_rej = p * d_sub.reject + (1.0 - p) * d_orig.reject;
            assert!((d_mix.reject - want_rej).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_half_mixes_nothing() {
        let orig = build_machine(Family::R4, Kind::Probabilistic, &Params { cap: Some(4), ..Params::default() }).unwrap();
        let sub = always_reject(orig.input_alphabet(), orig.output_alphabet()).unwrap();
        let mixed = shift_cutpoint(&orig, 0.5, 0.1, Some(&sub)).unwrap();
        for input in all_inputs(4, 3) {
            let a = output_distribution(&orig, &input).unwrap();
            let b = output_distribution(&mixed, &input).unwrap();
            assert_eq!(a.accept, b.accept);
        }
        assert!(shift_cutpoint(&orig, 1.5, 0.1, None).is_err());
        assert!(shift_cutpoint(&orig, 0.4, 0.1, None).is_err());
    }
}
