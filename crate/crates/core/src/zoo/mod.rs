//! Parameterized constructions of the machine families R1..R5, the
//! tile-matching reduction machines, their relations, and two sample
//! automata used as conversion fixtures.
//!
//! Machines that must count an unbounded phase reversibly cannot exist as
//! finite unitary machines (a permutation's orbit always returns to the
//! phase-entry state, and any amplitude-splitting alternative leaks mass).
//! The quantum builders therefore allocate a bounded chain per counting
//! phase, sized by the `cap` parameter: behavior is exact for inputs whose
//! per-phase lengths stay within `cap`, and anything longer is rejected
//! outright. The probabilistic builders have no such restriction.

mod pcp;
mod qfa_samples;
mod r1;
mod r2;
mod r3;
mod r4;
mod r5;
mod relations;

pub use pcp::{build_pcp_machine, PcpInstance};
pub use qfa_samples::{build_sample_qfa, SampleQfa};
pub use relations::{build_pcp_relation, build_relation};

use crate::linalg::MatrixBuilder;
use crate::machine::{Alphabet, InputSymbol, Kind, TransducerSpec};
use crate::qfa::QfaSpec;
use crate::{C64, Error, OutputWord, Result};
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Family {
    R1,
    R2,
    R3,
    R4,
    R5,
}

impl Family {
    pub fn parse(name: &str) -> Result<Family> {
        match name.to_ascii_uppercase().as_str() {
            "R1" => Ok(Family::R1),
            "R2" => Ok(Family::R2),
            "R3" => Ok(Family::R3),
            "R4" => Ok(Family::R4),
            "R5" => Ok(Family::R5),
            other => Err(Error::BadParams(format!("unknown family {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::R1 => "R1",
            Family::R2 => "R2",
            Family::R3 => "R3",
            Family::R4 => "R4",
            Family::R5 => "R5",
        }
    }
}

/// Builder parameters. `k` drives the R1 error bound 1/k, `l` the R3
/// bounds, `cap` overrides the per-phase length capacity of the bounded
/// quantum counters (see module docs).
#[derive(Clone, Copy, Debug)]
pub struct Params {
    pub k: usize,
    pub l: usize,
    pub cap: Option<usize>,
}

impl Default for Params {
    fn default() -> Self {
        Params { k: 4, l: 2, cap: None }
    }
}

/// Build one machine of the given family and kind.
pub fn build_machine(family: Family, kind: Kind, params: &Params) -> Result<TransducerSpec> {
    match (family, kind) {
        (Family::R1, Kind::Quantum) => r1::build_qfst(params.k, params.cap.unwrap_or(20)),
        (Family::R1, Kind::Probabilistic) => r1::build_pfst(params.k),
        (Family::R2, Kind::Quantum) => r2::build_qfst(),
        (Family::R2, Kind::Probabilistic) => {
            Ok(crate::transforms::squared_moduli_pfst(&r2::build_qfst()?)?)
        }
        (Family::R3, Kind::Quantum) => r3::build_qfst(params.l, params.cap.unwrap_or(12)),
        (Family::R4, Kind::Quantum) => r4::build_qfst(params.cap.unwrap_or(12)),
        (Family::R4, Kind::Probabilistic) => {
            Ok(crate::transforms::squared_moduli_pfst(&r4::build_qfst(
                params.cap.unwrap_or(12),
            )?)?)
        }
        (Family::R5, Kind::Deterministic) => r5::build_dfst(),
        (f, k) => Err(Error::Unsupported(format!("{} as {k}", f.name()))),
    }
}

/// Hands out fresh rejecting sink states, one per (symbol, request), reusing
/// the same pool across different symbols so the total state count stays at
/// the per-symbol maximum.
pub(crate) struct RejPool {
    counters: BTreeMap<InputSymbol, usize>,
}

impl RejPool {
    pub fn new() -> Self {
        RejPool { counters: BTreeMap::new() }
    }

    pub fn fresh(&mut self, b: &mut SpecBuilder, sym: InputSymbol) -> usize {
        let c = self.counters.entry(sym).or_insert(0);
        let q = b.state(format!("rej[{c}]"));
        *c += 1;
        b.reject(q);
        q
    }

    /// Convenience: route `from -> fresh sink` under `sym`.
    pub fn sink(&mut self, b: &mut SpecBuilder, sym: InputSymbol, from: usize) {
        let q = self.fresh(b, sym);
        b.edge(sym, from, q);
    }
}

/// Incremental machine assembly shared by the zoo and the transforms:
/// get-or-create states by name, declare rows per symbol, then complete
/// every matrix (Gram-Schmidt for quantum kinds, self-loops for stochastic).
pub(crate) struct SpecBuilder {
    kind: Kind,
    names: Vec<String>,
    index: HashMap<String, usize>,
    input_alphabet: Alphabet,
    output_alphabet: Option<Alphabet>,
    initial: Option<usize>,
    accepting: BTreeSet<usize>,
    rejecting: BTreeSet<usize>,
    rows: BTreeMap<InputSymbol, Vec<(usize, Vec<(usize, C64)>)>>,
    outputs: BTreeMap<InputSymbol, BTreeMap<usize, OutputWord>>,
}

impl SpecBuilder {
    pub fn new_transducer(kind: Kind, input: Alphabet, output: Alphabet) -> Self {
        SpecBuilder {
            kind,
            names: Vec::new(),
            index: HashMap::new(),
            input_alphabet: input,
            output_alphabet: Some(output),
            initial: None,
            accepting: BTreeSet::new(),
            rejecting: BTreeSet::new(),
            rows: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn new_qfa(input: Alphabet) -> Self {
        SpecBuilder {
            kind: Kind::Quantum,
            names: Vec::new(),
            index: HashMap::new(),
            input_alphabet: input,
            output_alphabet: None,
            initial: None,
            accepting: BTreeSet::new(),
            rejecting: BTreeSet::new(),
            rows: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn state(&mut self, name: impl Into<String>) -> usize {
        let name = name.into();
        if let Some(&q) = self.index.get(&name) {
            return q;
        }
        let q = self.names.len();
        self.index.insert(name.clone(), q);
        self.names.push(name);
        q
    }

    pub fn set_initial(&mut self, q: usize) {
        self.initial = Some(q);
    }

    pub fn accept(&mut self, q: usize) {
        self.accepting.insert(q);
    }

    pub fn reject(&mut self, q: usize) {
        self.rejecting.insert(q);
    }

    pub fn edge(&mut self, sym: InputSymbol, from: usize, to: usize) {
        self.row(sym, from, vec![(to, C64::new(1.0, 0.0))]);
    }

    pub fn row(&mut self, sym: InputSymbol, from: usize, entries: Vec<(usize, C64)>) {
        self.rows.entry(sym).or_default().push((from, entries));
    }

    pub fn print(&mut self, sym: InputSymbol, q: usize, word: OutputWord) {
        if !word.is_empty() {
            self.outputs.entry(sym).or_default().insert(q, word);
        }
    }

    /// Output word of `count` copies of output symbol `sym_ix`.
    pub fn word_of(&self, sym_ix: u8, count: usize) -> OutputWord {
        vec![sym_ix; count]
    }

    pub fn input_symbols(&self) -> Vec<InputSymbol> {
        let mut syms = vec![InputSymbol::Init];
        syms.extend((0..self.input_alphabet.len()).map(InputSymbol::Letter));
        syms.push(InputSymbol::End);
        syms
    }

    fn assemble_matrices(&mut self) -> Result<BTreeMap<InputSymbol, crate::linalg::SparseMat>> {
        let n = self.names.len();
        let mut out = BTreeMap::new();
        for sym in self.input_symbols() {
            let mut mb = MatrixBuilder::new(n);
            if let Some(rows) = self.rows.remove(&sym) {
                for (from, entries) in rows {
                    mb.set_row(from, entries);
                }
            }
            let m = if self.kind.is_quantum() {
                mb.finish_unitary()?
            } else {
                mb.finish_stochastic()?
            };
            out.insert(sym, m);
        }
        Ok(out)
    }

    pub fn build(mut self) -> Result<TransducerSpec> {
        let transitions = self.assemble_matrices()?;
        let n = self.names.len();
        let mut outputs = BTreeMap::new();
        for (sym, per_state) in std::mem::take(&mut self.outputs) {
            let mut words = vec![OutputWord::new(); n];
            for (q, w) in per_state {
                words[q] = w;
            }
            outputs.insert(sym, words);
        }
        TransducerSpec::new(
            self.kind,
            self.names,
            self.input_alphabet,
            self.output_alphabet
                .ok_or_else(|| Error::Machine("transducer builder needs an output alphabet".into()))?,
            self.initial
                .ok_or_else(|| Error::Machine("no initial state declared".into()))?,
            self.accepting,
            self.rejecting,
            transitions,
            outputs,
        )
    }

    pub fn build_qfa(mut self) -> Result<QfaSpec> {
        let transitions = self.assemble_matrices()?;
        let qfa = QfaSpec {
            states: self.names,
            input_alphabet: self.input_alphabet,
            initial: self
                .initial
                .ok_or_else(|| Error::Machine("no initial state declared".into()))?,
            accepting: self.accepting,
            rejecting: self.rejecting,
            transitions,
        };
        qfa.check_shape()?;
        Ok(qfa)
    }
}
