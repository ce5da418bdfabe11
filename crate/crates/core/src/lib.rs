//! Exact simulation and analysis of probabilistic and quantum finite state
//! transducers (pfst/qfst): machines that read an input string framed by
//! virtual begin/end markers, write on a one-way output tape, and halt by
//! measurement into accepting or rejecting states after every step.
//!
//! The crate provides
//! * machine descriptions with structural and numeric validation ([`machine`]),
//! * exact total-state evolution and output distributions ([`semantics`]),
//! * an independent path-sum oracle for cross-checking ([`oracle`]),
//! * relation computation checks over bounded input sets ([`relations`]),
//! * a zoo of parameterized machine families R1..R5, tile-matching reduction
//!   machines and sample automata ([`zoo`]),
//! * automaton/transducer conversions and cutpoint shifting ([`transforms`]),
//! * the output-truncated range-membership decision procedure ([`decide`]),
//! * finite Markov chain classification ([`analysis`]).

pub mod analysis;
pub mod decide;
pub mod format;
pub mod linalg;
pub mod machine;
pub mod oracle;
pub mod qfa;
pub mod randgen;
pub mod relations;
pub mod semantics;
pub mod transforms;
pub mod zoo;

use thiserror::Error;

/// Default numeric tolerance for all validation and comparison.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Amplitudes/probabilities at or below this magnitude are dropped from
/// sparse supports after each step. Far below every decision tolerance.
pub const PRUNE_EPS: f64 = 1e-12;

pub type C64 = num_complex::Complex64;

/// Output-tape word: sequence of indices into the output alphabet.
pub type OutputWord = Vec<u8>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet error: {0}")]
    Alphabet(String),
    #[error("malformed machine: {0}")]
    Machine(String),
    #[error("unknown symbol {symbol:?}")]
    UnknownSymbol { symbol: String },
    #[error("input length {len} exceeds cap {cap}")]
    CapExceeded { len: usize, cap: usize },
    #[error("unsupported machine family/kind combination: {0}")]
    Unsupported(String),
    #[error("bad parameter: {0}")]
    BadParams(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
