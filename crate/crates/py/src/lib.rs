//! Python bindings: machine loading and construction, distributions,
//! validation, relation checks, conversions, range membership, and chain
//! classification.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use qfst::decide::{range_member, DecisionConfig, InconclusiveReason, RangeVerdict};
use qfst::machine::{validate_spec, Kind, TransducerSpec};
use qfst::oracle::{compare_distributions, path_sum_distribution};
use qfst::qfa::{qfa_run, validate_qfa, QfaSpec};
use qfst::relations::{check_isolated_cutpoint, check_with_probability};
use qfst::semantics::output_distribution;
use qfst::zoo;
use std::collections::BTreeMap;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_kind(kind: &str) -> PyResult<Kind> {
    match kind {
        "dfst" | "deterministic" => Ok(Kind::Deterministic),
        "pfst" | "probabilistic" => Ok(Kind::Probabilistic),
        "qfst" | "quantum" => Ok(Kind::Quantum),
        other => Err(err(format!("unknown kind {other:?}"))),
    }
}

/// A probabilistic, quantum or deterministic finite state transducer.
#[pyclass(frozen)]
struct Transducer {
    spec: TransducerSpec,
}

#[pymethods]
impl Transducer {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Transducer { spec: qfst::format::transducer_from_json(text).map_err(err)? })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(err)?;
        Self::from_json(&text)
    }

    fn to_json(&self) -> String {
        qfst::format::transducer_to_json(&self.spec)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.spec.kind().as_str()
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.spec.n_states()
    }

    #[getter]
    fn input_alphabet(&self) -> Vec<String> {
        self.spec.input_alphabet().tokens().to_vec()
    }

    #[getter]
    fn output_alphabet(&self) -> Vec<String> {
        self.spec.output_alphabet().tokens().to_vec()
    }

    /// Violation strings; empty means the machine is valid.
    #[pyo3(signature = (tol = 1e-9))]
    fn validate(&self, tol: f64) -> Vec<String> {
        validate_spec(&self.spec, tol)
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    /// The distribution T(.|input) as (accept dict, reject probability).
    fn distribution(&self, input: &str) -> PyResult<(BTreeMap<String, f64>, f64)> {
        let word = self.spec.input_alphabet().tokenize(input).map_err(err)?;
        let dist = output_distribution(&self.spec, &word).map_err(err)?;
        let accept = dist
            .accept
            .iter()
            .map(|(w, &p)| (self.spec.output_alphabet().render_output(w), p))
            .collect();
        Ok((accept, dist.reject))
    }

    fn accept_prob(&self, input: &str, output: &str) -> PyResult<f64> {
        let word = self.spec.input_alphabet().tokenize(input).map_err(err)?;
        let out = self.spec.output_alphabet().tokenize_output(output).map_err(err)?;
        Ok(output_distribution(&self.spec, &word).map_err(err)?.accept_prob(&out))
    }

    /// Range membership: ("yes"|"no"|"cap-hit"|"isolation-violated",
    /// witness input or None).
    #[pyo3(signature = (output, alpha, delta, gamma = 5.0, cap = 1_000_000))]
    fn range_member(
        &self,
        output: &str,
        alpha: f64,
        delta: f64,
        gamma: f64,
        cap: usize,
    ) -> PyResult<(String, Option<String>)> {
        let y = self.spec.output_alphabet().tokenize_output(output).map_err(err)?;
        let cfg = DecisionConfig { alpha, delta, gamma, state_cap: cap };
        Ok(match range_member(&self.spec, &y, &cfg).map_err(err)? {
            RangeVerdict::Yes { witness } => {
                ("yes".into(), Some(self.spec.input_alphabet().render(&witness)))
            }
            RangeVerdict::No => ("no".into(), None),
            RangeVerdict::Inconclusive(InconclusiveReason::CapHit) => ("cap-hit".into(), None),
            RangeVerdict::Inconclusive(InconclusiveReason::IsolationViolated) => {
                ("isolation-violated".into(), None)
            }
        })
    }

    /// Markov classification of the transition matrix of one symbol.
    fn classify<'py>(&self, py: Python<'py>, symbol: &str) -> PyResult<Bound<'py, PyDict>> {
        let sym = match symbol {
            "INIT" => qfst::machine::InputSymbol::Init,
            "END" => qfst::machine::InputSymbol::End,
            _ => self
                .spec
                .input_alphabet()
                .lookup(symbol)
                .map(qfst::machine::InputSymbol::Letter)
                .ok_or_else(|| err(format!("unknown symbol {symbol:?}")))?,
        };
        let cls = qfst::analysis::classify_states(self.spec.matrix(sym)).map_err(err)?;
        let name = |q: &usize| self.spec.state_name(*q).to_string();
        let out = PyDict::new(py);
        out.set_item("transient", cls.transient.iter().map(name).collect::<Vec<_>>())?;
        let classes = PyList::empty(py);
        for c in &cls.ergodic_classes {
            let d = PyDict::new(py);
            d.set_item("states", c.states.iter().map(name).collect::<Vec<_>>())?;
            d.set_item("period", c.period)?;
            d.set_item(
                "cyclic_classes",
                c.cyclic_classes
                    .iter()
                    .map(|cyc| cyc.iter().map(name).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            )?;
            d.set_item("stationary", c.stationary.clone())?;
            classes.append(d)?;
        }
        out.set_item("ergodic_classes", classes)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("Transducer(kind={}, states={})", self.spec.kind(), self.spec.n_states())
    }
}

/// A measure-many quantum finite automaton.
#[pyclass(frozen)]
struct Qfa {
    spec: QfaSpec,
}

#[pymethods]
impl Qfa {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Qfa { spec: qfst::format::qfa_from_json(text).map_err(err)? })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(err)?;
        Self::from_json(&text)
    }

    fn to_json(&self) -> String {
        qfst::format::qfa_to_json(&self.spec)
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.spec.n_states()
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn validate(&self, tol: f64) -> Vec<String> {
        validate_qfa(&self.spec, tol)
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    /// (accept, reject) probabilities on one input.
    fn outcome(&self, input: &str) -> PyResult<(f64, f64)> {
        let word = self.spec.input_alphabet.tokenize(input).map_err(err)?;
        let out = qfa_run(&self.spec, &word).map_err(err)?;
        Ok((out.accept, out.reject))
    }

    fn __repr__(&self) -> String {
        format!("Qfa(states={})", self.spec.n_states())
    }
}

/// Build a machine of family R1..R5.
#[pyfunction]
#[pyo3(signature = (family, kind, k = 4, l = 2, cap = None))]
fn build_machine(
    family: &str,
    kind: &str,
    k: usize,
    l: usize,
    cap: Option<usize>,
) -> PyResult<Transducer> {
    let fam = zoo::Family::parse(family).map_err(err)?;
    let params = zoo::Params { k, l, cap };
    Ok(Transducer { spec: zoo::build_machine(fam, parse_kind(kind)?, &params).map_err(err)? })
}

/// Build the branch machine of a tile-matching instance.
#[pyfunction]
#[pyo3(signature = (v, w, kind = "qfst"))]
fn build_pcp_machine(v: Vec<String>, w: Vec<String>, kind: &str) -> PyResult<Transducer> {
    let instance = zoo::PcpInstance::new(v, w).map_err(err)?;
    Ok(Transducer { spec: zoo::build_pcp_machine(&instance, parse_kind(kind)?).map_err(err)? })
}

/// Sample automata: "parity" or "end0".
#[pyfunction]
fn build_sample_qfa(name: &str) -> PyResult<Qfa> {
    let which = zoo::SampleQfa::parse(name).map_err(err)?;
    Ok(Qfa { spec: zoo::build_sample_qfa(which).map_err(err)? })
}

#[pyfunction]
fn normalize_end_transition(qfa: &Qfa) -> PyResult<Qfa> {
    Ok(Qfa { spec: qfst::transforms::normalize_end_transition(&qfa.spec).map_err(err)? })
}

#[pyfunction]
fn qfa_to_qfst(qfa: &Qfa) -> PyResult<Transducer> {
    Ok(Transducer { spec: qfst::transforms::qfa_to_qfst(&qfa.spec).map_err(err)? })
}

#[pyfunction]
fn qfst_to_qfa(machine: &Transducer) -> PyResult<Qfa> {
    Ok(Qfa { spec: qfst::transforms::qfst_to_qfa(&machine.spec).map_err(err)? })
}

#[pyfunction]
fn squared_moduli(machine: &Transducer) -> PyResult<Transducer> {
    Ok(Transducer { spec: qfst::transforms::squared_moduli_pfst(&machine.spec).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (machine, alpha, epsilon, subprogram = None))]
fn shift_cutpoint(
    machine: &Transducer,
    alpha: f64,
    epsilon: f64,
    subprogram: Option<&Transducer>,
) -> PyResult<Transducer> {
    let sub = subprogram.map(|s| &s.spec);
    Ok(Transducer {
        spec: qfst::transforms::shift_cutpoint(&machine.spec, alpha, epsilon, sub).map_err(err)?,
    })
}

/// Check relation computation over all inputs up to max_len. Returns
/// (pass, worst_margin, failures) with failures as (input, output,
/// measured) triples.
#[pyfunction]
#[pyo3(signature = (machine, relation, mode, alpha, epsilon = None, max_len = 8, tol = 1e-9, pcp_v = None, pcp_w = None))]
#[allow(clippy::too_many_arguments)]
fn check_relation(
    machine: &Transducer,
    relation: &str,
    mode: &str,
    alpha: f64,
    epsilon: Option<f64>,
    max_len: usize,
    tol: f64,
    pcp_v: Option<Vec<String>>,
    pcp_w: Option<Vec<String>>,
) -> PyResult<(bool, f64, Vec<(String, String, f64)>)> {
    let rel = if relation.eq_ignore_ascii_case("pcp") {
        let instance = zoo::PcpInstance::new(
            pcp_v.unwrap_or_default(),
            pcp_w.unwrap_or_default(),
        )
        .map_err(err)?;
        zoo::build_pcp_relation(&instance).map_err(err)?
    } else {
        zoo::build_relation(zoo::Family::parse(relation).map_err(err)?).map_err(err)?
    };
    let report = match mode {
        "prob" => check_with_probability(&machine.spec, &rel, alpha, max_len, tol).map_err(err)?,
        "cutpoint" => {
            let eps = epsilon.ok_or_else(|| err("cutpoint mode needs epsilon"))?;
            check_isolated_cutpoint(&machine.spec, &rel, alpha, eps, max_len, tol).map_err(err)?
        }
        other => return Err(err(format!("unknown mode {other:?}"))),
    };
    let failures = report
        .failures()
        .map(|v| (v.input.clone(), v.output.clone(), v.measured))
        .collect();
    Ok((report.pass, report.worst_margin, failures))
}

/// Compare the step semantics against the path-sum oracle on every input
/// up to max_len; returns the maximum deviation found.
#[pyfunction]
#[pyo3(signature = (machine, max_len = 4))]
fn oracle_max_deviation(machine: &Transducer, max_len: usize) -> PyResult<f64> {
    let k = machine.spec.input_alphabet().len();
    let mut level: Vec<Vec<usize>> = vec![Vec::new()];
    let mut inputs = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &level {
            for s in 0..k {
                let mut v = w.clone();
                v.push(s);
                next.push(v);
            }
        }
        inputs.extend(next.iter().cloned());
        level = next;
    }
    let mut worst = 0.0f64;
    for input in inputs {
        let fast = output_distribution(&machine.spec, &input).map_err(err)?;
        let slow = path_sum_distribution(&machine.spec, &input).map_err(err)?;
        let diff = compare_distributions(&machine.spec, &fast, &slow, 0.0);
        worst = worst.max(diff.max_deviation);
    }
    Ok(worst)
}

#[pymodule]
fn qfst_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Transducer>()?;
    m.add_class::<Qfa>()?;
    m.add_function(wrap_pyfunction!(build_machine, m)?)?;
    m.add_function(wrap_pyfunction!(build_pcp_machine, m)?)?;
    m.add_function(wrap_pyfunction!(build_sample_qfa, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_end_transition, m)?)?;
    m.add_function(wrap_pyfunction!(qfa_to_qfst, m)?)?;
    m.add_function(wrap_pyfunction!(qfst_to_qfa, m)?)?;
    m.add_function(wrap_pyfunction!(squared_moduli, m)?)?;
    m.add_function(wrap_pyfunction!(shift_cutpoint, m)?)?;
    m.add_function(wrap_pyfunction!(check_relation, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_max_deviation, m)?)?;
    Ok(())
}
