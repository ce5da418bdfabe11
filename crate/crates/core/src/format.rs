//! Machine file format: a single JSON document.
//!
//! ```json
//! {
//!   "kind": "quantum",
//!   "states": ["q0", "qv"],
//!   "input_alphabet": ["1", "2"],
//!   "output_alphabet": ["a", "b"],
//!   "initial": "q0",
//!   "accepting": ["acc"],
//!   "rejecting": ["rej"],
//!   "transitions": { "INIT": [[0, [0.5, -0.5]], ...], "END": ... },
//!   "outputs": { "1": { "qv": "a" } }
//! }
//! ```
//!
//! Transition matrices are row-major and dense; complex entries are
//! `[re, im]` pairs, real entries may be bare numbers. Quantum automata use
//! the same layout with `"kind": "qfa"` and no output fields. Unknown fields
//! are rejected.

use crate::linalg::SparseMat;
use crate::machine::{Alphabet, InputSymbol, Kind, TransducerSpec, END_TOKEN, INIT_TOKEN};
use crate::qfa::QfaSpec;
use crate::{C64, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Serialize, Deserialize, Clone, Copy, Debug)]
#[serde(untagged)]
enum EntryJson {
    Real(f64),
    Complex([f64; 2]),
}

impl EntryJson {
    fn to_c64(self) -> C64 {
        match self {
            EntryJson::Real(re) => C64::new(re, 0.0),
            EntryJson::Complex([re, im]) => C64::new(re, im),
        }
    }

    fn from_c64(v: C64) -> Self {
        if v.im == 0.0 {
            EntryJson::Real(v.re)
        } else {
            EntryJson::Complex([v.re, v.im])
        }
    }
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct MachineFile {
    kind: String,
    states: Vec<String>,
    input_alphabet: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_alphabet: Option<Vec<String>>,
    initial: String,
    accepting: Vec<String>,
    rejecting: Vec<String>,
    transitions: BTreeMap<String, Vec<Vec<EntryJson>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outputs: Option<BTreeMap<String, BTreeMap<String, String>>>,
}

fn state_index(states: &[String], name: &str) -> Result<usize> {
    states
        .iter()
        .position(|s| s == name)
        .ok_or_else(|| Error::Parse(format!("unknown state {name:?}")))
}

fn symbol_key(alphabet: &Alphabet, token: &str) -> Result<InputSymbol> {
    match token {
        INIT_TOKEN => Ok(InputSymbol::Init),
        END_TOKEN => Ok(InputSymbol::End),
        _ => alphabet
            .lookup(token)
            .map(InputSymbol::Letter)
            .ok_or_else(|| Error::Parse(format!("unknown transition symbol {token:?}"))),
    }
}

fn parse_matrix(n: usize, rows: &[Vec<EntryJson>]) -> Result<SparseMat> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("transition matrix must be {n}x{n} row-major")));
    }
    let dense: Vec<Vec<C64>> = rows
        .iter()
        .map(|r| r.iter().map(|e| e.to_c64()).collect())
        .collect();
    SparseMat::from_dense(&dense)
}

fn render_matrix(m: &SparseMat) -> Vec<Vec<EntryJson>> {
    m.to_dense()
        .into_iter()
        .map(|r| r.into_iter().map(EntryJson::from_c64).collect())
        .collect()
}

impl MachineFile {
    fn transition_map(
        &self,
        alphabet: &Alphabet,
    ) -> Result<BTreeMap<InputSymbol, SparseMat>> {
        let n = self.states.len();
        let mut transitions = BTreeMap::new();
        for (token, rows) in &self.transitions {
            let sym = symbol_key(alphabet, token)?;
            transitions.insert(sym, parse_matrix(n, rows)?);
        }
        Ok(transitions)
    }
}

pub fn transducer_from_json(text: &str) -> Result<TransducerSpec> {
    let file: MachineFile = serde_json::from_str(text)?;
    let kind = match file.kind.as_str() {
        "deterministic" => Kind::Deterministic,
        "probabilistic" => Kind::Probabilistic,
        "quantum" => Kind::Quantum,
        other => return Err(Error::Parse(format!("unknown machine kind {other:?}"))),
    };
    let input_alphabet = Alphabet::new(file.input_alphabet.clone())?;
    let output_alphabet = Alphabet::new(
        file.output_alphabet
            .clone()
            .ok_or_else(|| Error::Parse("transducer file needs output_alphabet".into()))?,
    )?;
    let initial = state_index(&file.states, &file.initial)?;
    let accepting = file
        .accepting
        .iter()
        .map(|s| state_index(&file.states, s))
        .collect::<Result<BTreeSet<_>>>()?;
    let rejecting = file
        .rejecting
        .iter()
        .map(|s| state_index(&file.states, s))
        .collect::<Result<BTreeSet<_>>>()?;
    let transitions = file.transition_map(&input_alphabet)?;
    let n = file.states.len();
    let mut outputs: BTreeMap<InputSymbol, Vec<crate::OutputWord>> = BTreeMap::new();
    if let Some(out) = &file.outputs {
        for (token, per_state) in out {
            let sym = symbol_key(&input_alphabet, token)?;
            let mut words = vec![Vec::new(); n];
            for (state, text) in per_state {
                let q = state_index(&file.states, state)?;
                words[q] = output_alphabet.tokenize_output(text)?;
            }
            outputs.insert(sym, words);
        }
    }
    TransducerSpec::new(
        kind,
        file.states,
        input_alphabet,
        output_alphabet,
        initial,
        accepting,
        rejecting,
        transitions,
        outputs,
    )
}

pub fn transducer_to_json(spec: &TransducerSpec) -> String {
    let mut transitions = BTreeMap::new();
    for (sym, m) in spec.transitions() {
        transitions.insert(spec.symbol_name(*sym), render_matrix(m));
    }
    let mut outputs: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for (sym, per_state) in spec.outputs() {
        let mut m = BTreeMap::new();
        for (q, w) in per_state.iter().enumerate() {
            if !w.is_empty() {
                m.insert(
                    spec.state_name(q).to_string(),
                    spec.output_alphabet().render_output(w),
                );
            }
        }
        if !m.is_empty() {
            outputs.insert(spec.symbol_name(*sym), m);
        }
    }
    let file = MachineFile {
        kind: spec.kind().as_str().to_string(),
        states: spec.state_names().to_vec(),
        input_alphabet: spec.input_alphabet().tokens().to_vec(),
        output_alphabet: Some(spec.output_alphabet().tokens().to_vec()),
        initial: spec.state_name(spec.initial()).to_string(),
        accepting: spec.accepting().iter().map(|&q| spec.state_name(q).to_string()).collect(),
        rejecting: spec.rejecting().iter().map(|&q| spec.state_name(q).to_string()).collect(),
        transitions,
        outputs: Some(outputs),
    };
    serde_json::to_string_pretty(&file).expect("machine serialization cannot fail")
}

pub fn qfa_from_json(text: &str) -> Result<QfaSpec> {
    let file: MachineFile = serde_json::from_str(text)?;
    if file.kind != "qfa" {
        return Err(Error::Parse(format!("expected kind \"qfa\", got {:?}", file.kind)));
    }
    if file.output_alphabet.is_some() || file.outputs.is_some() {
        return Err(Error::Parse("qfa file cannot carry output fields".into()));
    }
    let input_alphabet = Alphabet::new(file.input_alphabet.clone())?;
    let initial = state_index(&file.states, &file.initial)?;
    let accepting = file
        .accepting
        .iter()
        .map(|s| state_index(&file.states, s))
        .collect::<Result<BTreeSet<_>>>()?;
    let rejecting = file
        .rejecting
        .iter()
        .map(|s| state_index(&file.states, s))
        .collect::<Result<BTreeSet<_>>>()?;
    let transitions = file.transition_map(&input_alphabet)?;
    let qfa = QfaSpec {
        states: file.states,
        input_alphabet,
        initial,
        accepting,
        rejecting,
        transitions,
    };
    qfa.check_shape()?;
    Ok(qfa)
}

pub fn qfa_to_json(qfa: &QfaSpec) -> String {
    let mut transitions = BTreeMap::new();
    for (sym, m) in &qfa.transitions {
        let token = match sym {
            InputSymbol::Init => INIT_TOKEN.to_string(),
            InputSymbol::End => END_TOKEN.to_string(),
            InputSymbol::Letter(i) => qfa.input_alphabet.token(*i).to_string(),
        };
        transitions.insert(token, render_matrix(m));
    }
    let file = MachineFile {
        kind: "qfa".into(),
        states: qfa.states.clone(),
        input_alphabet: qfa.input_alphabet.tokens().to_vec(),
        output_alphabet: None,
        initial: qfa.states[qfa.initial].clone(),
        accepting: qfa.accepting.iter().map(|&q| qfa.states[q].clone()).collect(),
        rejecting: qfa.rejecting.iter().map(|&q| qfa.states[q].clone()).collect(),
        transitions,
        outputs: None,
    };
    serde_json::to_string_pretty(&file).expect("machine serialization cannot fail")
}

/// Load either flavor, dispatching on the `kind` field.
pub enum AnyMachine {
    Transducer(TransducerSpec),
    Qfa(QfaSpec),
}

pub fn machine_from_json(text: &str) -> Result<AnyMachine> {
    #[derive(Deserialize)]
    struct KindProbe {
        kind: String,
    }
    let probe: KindProbe = serde_json::from_str(text)?;
    if probe.kind == "qfa" {
        Ok(AnyMachine::Qfa(qfa_from_json(text)?))
    } else {
        Ok(AnyMachine::Transducer(transducer_from_json(text)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"kind":"probabilistic","states":["a"],"input_alphabet":["0"],
            "output_alphabet":["x"],"initial":"a","accepting":[],"rejecting":["a"],
            "transitions":{},"outputs":{},"extra":1}"#;
        assert!(transducer_from_json(text).is_err());
    }

    #[test]
    fn minimal_roundtrip() {
        let text = r#"{
            "kind": "probabilistic",
            "states": ["a", "halt"],
            "input_alphabet": ["0"],
            "output_alphabet": ["x"],
            "initial": "a",
            "accepting": ["halt"],
            "rejecting": [],
            "transitions": {
                "INIT": [[1, 0], [0, 1]],
                "0": [[0.5, 0.5], [0, 1]],
                "END": [[0, 1], [0, 1]]
            },
            "outputs": {"0": {"a": "x"}}
        }"#;
        let spec = transducer_from_json(text).unwrap();
        assert_eq!(spec.n_states(), 2);
        assert_eq!(spec.output(InputSymbol::Letter(0), 0), &[0u8]);
        let emitted = transducer_to_json(&spec);
        let again = transducer_from_json(&emitted).unwrap();
        assert_eq!(transducer_to_json(&again), emitted);
    }
}
