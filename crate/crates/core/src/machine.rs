//! Machine descriptions: alphabets with reserved markers, transducer
//! specifications, and structural/numeric validation.

use crate::linalg::{self, SparseMat};
use crate::{Error, OutputWord, Result};
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Display forms of the reserved begin/end marker symbols. They frame every
/// input and are never part of an input or output alphabet.
pub const INIT_TOKEN: &str = "INIT";
pub const END_TOKEN: &str = "END";
const MARKER_GLYPHS: [&str; 4] = [INIT_TOKEN, END_TOKEN, "\u{2021}", "$"];

/// Input symbol including the two virtual markers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InputSymbol {
    Init,
    Letter(usize),
    End,
}

impl InputSymbol {
    pub fn letter(self) -> Option<usize> {
        match self {
            InputSymbol::Letter(i) => Some(i),
            _ => None,
        }
    }
}

/// Finite ordered set of symbol tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
    single_char: bool,
}

impl Alphabet {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::Alphabet("alphabet must be nonempty".into()));
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::Alphabet("empty symbol token".into()));
            }
            if MARKER_GLYPHS.contains(&t.as_str()) {
                return Err(Error::Alphabet(format!("symbol {t:?} is a reserved marker")));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Alphabet(format!("duplicate symbol {t:?}")));
            }
        }
        let single_char = tokens.iter().all(|t| t.chars().count() == 1);
        Ok(Alphabet { tokens, index, single_char })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Split a surface string into symbol indices. Single-character
    /// alphabets are read character by character; otherwise tokens are
    /// comma-separated. The empty string is the empty word.
    pub fn tokenize(&self, s: &str) -> Result<Vec<usize>> {
        if s.is_empty() {
            return Ok(Vec::new());
        }
        if self.single_char && !s.contains(',') {
            s.chars()
                .map(|ch| {
                    self.lookup(&ch.to_string()).ok_or(Error::UnknownSymbol {
                        symbol: ch.to_string(),
                    })
                })
                .collect()
        } else {
            s.split(',')
                .map(|t| {
                    self.lookup(t).ok_or(Error::UnknownSymbol { symbol: t.to_string() })
                })
                .collect()
        }
    }

    /// Surface rendering of a symbol-index word.
    pub fn render(&self, word: &[usize]) -> String {
        if self.single_char {
            word.iter().map(|&i| self.tokens[i].as_str()).collect()
        } else {
            word.iter()
                .map(|&i| self.tokens[i].as_str())
                .collect::<Vec<_>>()
                .join(",")
        }
    }

    pub fn render_output(&self, word: &[u8]) -> String {
        let as_usize: Vec<usize> = word.iter().map(|&b| b as usize).collect();
        self.render(&as_usize)
    }

    /// Tokenize an output-tape word into compact indices.
    pub fn tokenize_output(&self, s: &str) -> Result<OutputWord> {
        let ixs = self.tokenize(s)?;
        ixs.into_iter()
            .map(|i| {
                u8::try_from(i).map_err(|_| {
                    Error::Alphabet("output alphabet larger than 256 symbols".into())
                })
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Deterministic,
    Probabilistic,
    Quantum,
}

impl Kind {
    pub fn is_quantum(self) -> bool {
        matches!(self, Kind::Quantum)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Deterministic => "deterministic",
            Kind::Probabilistic => "probabilistic",
            Kind::Quantum => "quantum",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full machine description. Immutable after construction; shared freely.
#[derive(Clone, Debug)]
pub struct TransducerSpec {
    kind: Kind,
    states: Arc<Vec<String>>,
    input_alphabet: Alphabet,
    output_alphabet: Alphabet,
    initial: usize,
    accepting: BTreeSet<usize>,
    rejecting: BTreeSet<usize>,
    transitions: BTreeMap<InputSymbol, SparseMat>,
    /// Output word printed when reading a symbol in a given source state;
    /// indexed `outputs[symbol][state]`, empty word by default.
    outputs: BTreeMap<InputSymbol, Vec<OutputWord>>,
    halting_mask: Vec<bool>,
}

impl TransducerSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: Kind,
        states: Vec<String>,
        input_alphabet: Alphabet,
        output_alphabet: Alphabet,
        initial: usize,
        accepting: BTreeSet<usize>,
        rejecting: BTreeSet<usize>,
        transitions: BTreeMap<InputSymbol, SparseMat>,
        outputs: BTreeMap<InputSymbol, Vec<OutputWord>>,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::Machine("machine needs at least one state".into()));
        }
        if initial >= n {
            return Err(Error::Machine("initial state out of range".into()));
        }
        if output_alphabet.len() > 256 {
            return Err(Error::Alphabet("output alphabet larger than 256 symbols".into()));
        }
        for &q in accepting.iter().chain(rejecting.iter()) {
            if q >= n {
                return Err(Error::Machine(format!("halting state {q} out of range")));
            }
        }
        let mut expected: Vec<InputSymbol> = vec![InputSymbol::Init, InputSymbol::End];
        expected.extend((0..input_alphabet.len()).map(InputSymbol::Letter));
        for sym in &expected {
            let m = transitions.get(sym).ok_or_else(|| {
                Error::Machine(format!("missing transition matrix for {sym:?}"))
            })?;
            if m.size() != n {
                return Err(Error::Machine(format!(
                    "transition matrix for {sym:?} has size {} but machine has {n} states",
                    m.size()
                )));
            }
        }
        if transitions.len() != expected.len() {
            return Err(Error::Machine("transition matrix for unknown symbol".into()));
        }
        for (sym, per_state) in &outputs {
            if !transitions.contains_key(sym) {
                return Err(Error::Machine(format!("output map for unknown symbol {sym:?}")));
            }
            if per_state.len() != n {
                return Err(Error::Machine(format!(
                    "output map for {sym:?} must cover all {n} states"
                )));
            }
            for w in per_state {
                for &s in w {
                    if (s as usize) >= output_alphabet.len() {
                        return Err(Error::Machine("output symbol out of range".into()));
                    }
                }
            }
        }
        let mut halting_mask = vec![false; n];
        for &q in accepting.iter().chain(rejecting.iter()) {
            halting_mask[q] = true;
        }
        let mut outputs = outputs;
        for sym in expected {
            outputs.entry(sym).or_insert_with(|| vec![Vec::new(); n]);
        }
        Ok(TransducerSpec {
            kind,
            states: Arc::new(states),
            input_alphabet,
            output_alphabet,
            initial,
            accepting,
            rejecting,
            transitions,
            outputs,
            halting_mask,
        })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.states[q]
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        &self.input_alphabet
    }

    pub fn output_alphabet(&self) -> &Alphabet {
        &self.output_alphabet
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn accepting(&self) -> &BTreeSet<usize> {
        &self.accepting
    }

    pub fn rejecting(&self) -> &BTreeSet<usize> {
        &self.rejecting
    }

    pub fn is_halting(&self, q: usize) -> bool {
        self.halting_mask[q]
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting.contains(&q)
    }

    pub fn non_halting_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states()).filter(|&q| !self.halting_mask[q])
    }

    pub fn matrix(&self, sym: InputSymbol) -> &SparseMat {
        &self.transitions[&sym]
    }

    pub fn transitions(&self) -> &BTreeMap<InputSymbol, SparseMat> {
        &self.transitions
    }

    pub fn output(&self, sym: InputSymbol, q: usize) -> &[u8] {
        &self.outputs[&sym][q]
    }

    pub fn outputs(&self) -> &BTreeMap<InputSymbol, Vec<OutputWord>> {
        &self.outputs
    }

    /// Longest single-step print, `max_{a,q} |f_a(q)|`.
    pub fn max_output_len(&self) -> usize {
        self.outputs
            .values()
            .flat_map(|per_state| per_state.iter().map(|w| w.len()))
            .max()
            .unwrap_or(0)
    }

    /// Symbol sequence for a framed run over `input`.
    pub fn framed(&self, input: &[usize]) -> Result<Vec<InputSymbol>> {
        let mut seq = Vec::with_capacity(input.len() + 2);
        seq.push(InputSymbol::Init);
        for &s in input {
            if s >= self.input_alphabet.len() {
                return Err(Error::UnknownSymbol { symbol: format!("#{s}") });
            }
            seq.push(InputSymbol::Letter(s));
        }
        seq.push(InputSymbol::End);
        Ok(seq)
    }

    pub fn symbol_name(&self, sym: InputSymbol) -> String {
        match sym {
            InputSymbol::Init => INIT_TOKEN.to_string(),
            InputSymbol::End => END_TOKEN.to_string(),
            InputSymbol::Letter(i) => self.input_alphabet.token(i).to_string(),
        }
    }
}

/// A single validation failure.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Stable rule identifier, e.g. `unitary`, `endmarker-drain`.
    pub rule: &'static str,
    /// Matrix/row location in human-readable form.
    pub location: String,
    /// Numeric size of the violation.
    pub deviation: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} (deviation {:.3e})",
            self.rule, self.location, self.deviation
        )
    }
}

/// Everything `validate_spec` found. Empty iff the machine satisfies all
/// numeric invariants of its kind within tolerance.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            writeln!(f, "ok")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Check every numeric invariant of the description: disjoint halting sets,
/// row-stochasticity or unitarity of each matrix according to kind, 0/1
/// entries for deterministic machines, and the end-marker rule (no mass may
/// remain on non-halting states after the end marker).
pub fn validate_spec(spec: &TransducerSpec, tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let overlap: Vec<usize> = spec
        .accepting()
        .intersection(spec.rejecting())
        .copied()
        .collect();
    if !overlap.is_empty() {
        violations.push(Violation {
            rule: "halting-disjoint",
            location: format!(
                "states {:?} are both accepting and rejecting",
                overlap.iter().map(|&q| spec.state_name(q)).collect::<Vec<_>>()
            ),
            deviation: overlap.len() as f64,
        });
    }
    for (sym, m) in spec.transitions() {
        let name = spec.symbol_name(*sym);
        match spec.kind() {
            Kind::Quantum => {
                let dev = linalg::unitary_deviation(m);
                if dev > tol {
                    violations.push(Violation {
                        rule: "unitary",
                        location: format!("matrix {name}"),
                        deviation: dev,
                    });
                }
            }
            Kind::Probabilistic | Kind::Deterministic => {
                for (q, dev) in linalg::stochastic_deviation(m).into_iter().enumerate() {
                    if dev > tol {
                        violations.push(Violation {
                            rule: "stochastic",
                            location: format!("matrix {name}, row {}", spec.state_name(q)),
                            deviation: dev,
                        });
                    }
                }
                if spec.kind() == Kind::Deterministic && !linalg::is_zero_one(m, tol) {
                    violations.push(Violation {
                        rule: "deterministic-entries",
                        location: format!("matrix {name}"),
                        deviation: f64::NAN,
                    });
                }
            }
        }
    }
    // End-marker rule: row q of V_END restricted to non-halting columns must
    // vanish for every non-halting q (amplitude 2-norm for quantum machines,
    // probability mass for the others).
    let end = spec.matrix(InputSymbol::End);
    for q in spec.non_halting_states() {
        let leak: f64 = if spec.kind().is_quantum() {
            end.row(q)
                .iter()
                .filter(|&&(p, _)| !spec.is_halting(p))
                .map(|(_, v)| v.norm_sqr())
                .sum::<f64>()
                .sqrt()
        } else {
            end.row(q)
                .iter()
                .filter(|&&(p, _)| !spec.is_halting(p))
                .map(|(_, v)| v.norm())
                .sum()
        };
        if leak > tol {
            violations.push(Violation {
                rule: "endmarker-drain",
                location: format!("matrix END, row {}", spec.state_name(q)),
                deviation: leak,
            });
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn two_state_spec(kind: Kind, v0: SparseMat, vend: SparseMat) -> TransducerSpec {
        let mut transitions = BTreeMap::new();
        transitions.insert(InputSymbol::Init, SparseMat::identity(3));
        transitions.insert(InputSymbol::Letter(0), v0);
        transitions.insert(InputSymbol::End, vend);
        TransducerSpec::new(
            kind,
            vec!["a".into(), "b".into(), "halt".into()],
            Alphabet::new(["0"]).unwrap(),
            Alphabet::new(["x"]).unwrap(),
            0,
            BTreeSet::from([2]),
            BTreeSet::new(),
            transitions,
            BTreeMap::new(),
        )
        .unwrap()
    }

    fn drain_all() -> SparseMat {
        // a,b -> halt is impossible as a unitary; use a stochastic drain.
        SparseMat::from_rows(
            3,
            vec![
                vec![(2, C64::new(1.0, 0.0))],
                vec![(2, C64::new(1.0, 0.0))],
                vec![(2, C64::new(1.0, 0.0))],
            ],
        )
        .unwrap()
    }

    #[test]
    fn validate_flags_nonunitary() {
        let bad = SparseMat::from_rows(
            3,
            vec![
                vec![(0, C64::new(1.0, 0.0)), (1, C64::new(1.0, 0.0))],
                vec![(1, C64::new(1.0, 0.0))],
                vec![(2, C64::new(1.0, 0.0))],
            ],
        )
        .unwrap();
        let mut b = crate::linalg::MatrixBuilder::new(3);
        b.edge(0, 2);
        b.edge(1, 0);
        let vend = b.finish_unitary().unwrap();
        let spec = two_state_spec(Kind::Quantum, bad, vend);
        let report = validate_spec(&spec, 1e-9);
        assert!(report.violations.iter().any(|v| v.rule == "unitary"));
        // row b of V_END keeps amplitude on non-halting a
        assert!(report.violations.iter().any(|v| v.rule == "endmarker-drain"));
    }

    #[test]
    fn validate_flags_endmarker_mass() {
        let keep = SparseMat::identity(3);
        let spec = two_state_spec(Kind::Probabilistic, SparseMat::identity(3), keep);
        let report = validate_spec(&spec, 1e-9);
        assert!(report.violations.iter().any(|v| v.rule == "endmarker-drain"));
        let good = two_state_spec(Kind::Probabilistic, SparseMat::identity(3), drain_all());
        assert!(validate_spec(&good, 1e-9).is_empty());
    }

    #[test]
    fn tokenize_round_trips() {
        let a = Alphabet::new(["0", "1"]).unwrap();
        assert_eq!(a.tokenize("0110").unwrap(), vec![0, 1, 1, 0]);
        assert_eq!(a.render(&[0, 1, 1, 0]), "0110");
        let multi = Alphabet::new(["10", "20"]).unwrap();
        assert_eq!(multi.tokenize("10,20").unwrap(), vec![0, 1]);
        assert_eq!(multi.render(&[0, 1]), "10,20");
        assert!(Alphabet::new(["0", "$"]).is_err());
        assert!(Alphabet::new(["INIT"]).is_err());
        assert!(a.tokenize("02").is_err());
    }
}
