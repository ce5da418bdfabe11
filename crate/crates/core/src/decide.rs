//! Range membership for machines computing a relation with an isolated
//! cutpoint: is a given output word ever produced with probability above
//! the cutpoint?
//!
//! The device is the output-truncated total state: fix the target word `y`,
//! keep only components whose tape content is a prefix of `y`, and fold
//! everything else into the rejected probability (the map `J`). Tape
//! content never shrinks, so truncating commutes with stepping
//! (`J T_ab = J T_b J T_a`) and the whole computation lives in the
//! finite-dimensional space over states x prefixes. Because the truncated
//! step maps are Lipschitz (constant `gamma`) in the mixed norm, two
//! truncated states closer than `delta / gamma` lead to end-marker
//! acceptance probabilities closer than `delta`, and cutpoint isolation
//! makes them interchangeable: a breadth-first search over input
//! extensions that prunes new states within that radius of a kept one
//! explores only finitely many states.

use crate::machine::{InputSymbol, Kind, TransducerSpec};
use crate::semantics::{initial_total_state, step, TotalState};
use crate::{C64, Error, OutputWord, Result, PRUNE_EPS};
use std::collections::{BTreeMap, VecDeque};

/// Total state truncated against a target output word: the running
/// component lives on (state, prefix length), accepted probability is kept
/// per prefix length, everything off-prefix has been folded into `p_rej`.
#[derive(Clone, Debug, PartialEq)]
pub enum TruncatedTotalState {
    Prob {
        p_non: BTreeMap<(usize, usize), f64>,
        p_acc: Vec<f64>,
        p_rej: f64,
    },
    Quantum {
        amp: BTreeMap<(usize, usize), C64>,
        p_acc: Vec<f64>,
        p_rej: f64,
    },
}

impl TruncatedTotalState {
    fn empty(spec: &TransducerSpec, y_len: usize) -> Self {
        match spec.kind() {
            Kind::Quantum => TruncatedTotalState::Quantum {
                amp: BTreeMap::new(),
                p_acc: vec![0.0; y_len + 1],
                p_rej: 0.0,
            },
            _ => TruncatedTotalState::Prob {
                p_non: BTreeMap::new(),
                p_acc: vec![0.0; y_len + 1],
                p_rej: 0.0,
            },
        }
    }

    pub fn p_rej(&self) -> f64 {
        match self {
            TruncatedTotalState::Prob { p_rej, .. } => *p_rej,
            TruncatedTotalState::Quantum { p_rej, .. } => *p_rej,
        }
    }

    /// Accepted probability at the full target word.
    pub fn accepted_at_full(&self) -> f64 {
        match self {
            TruncatedTotalState::Prob { p_acc, .. } => *p_acc.last().unwrap(),
            TruncatedTotalState::Quantum { p_acc, .. } => *p_acc.last().unwrap(),
        }
    }
}

fn word_is_prefix(word: &[u8], y: &[u8]) -> bool {
    word.len() <= y.len() && word == &y[..word.len()]
}

/// The truncation map `J`: keep prefix-of-`y` components, fold the rest
/// into the rejected probability.
pub fn truncate(state: &TotalState, y: &[u8]) -> TruncatedTotalState {
    match state {
        TotalState::Prob(s) => {
            let mut p_non = BTreeMap::new();
            let mut p_acc = vec![0.0; y.len() + 1];
            let mut p_rej = s.p_rej;
            for ((q, w), &m) in &s.p_non {
                if word_is_prefix(w, y) {
                    *p_non.entry((*q, w.len())).or_insert(0.0) += m;
                } else {
                    p_rej += m;
                }
            }
            for (w, &m) in &s.p_acc {
                if word_is_prefix(w, y) {
                    p_acc[w.len()] += m;
                } else {
                    p_rej += m;
                }
            }
            TruncatedTotalState::Prob { p_non, p_acc, p_rej }
        }
        TotalState::Quantum(s) => {
            let mut amp = BTreeMap::new();
            let mut p_acc = vec![0.0; y.len() + 1];
            let mut p_rej = s.p_rej;
            for ((q, w), &a) in &s.amp {
                if word_is_prefix(w, y) {
                    *amp.entry((*q, w.len())).or_insert(C64::new(0.0, 0.0)) += a;
                } else {
                    p_rej += a.norm_sqr();
                }
            }
            for (w, &m) in &s.p_acc {
                if word_is_prefix(w, y) {
                    p_acc[w.len()] += m;
                } else {
                    p_rej += m;
                }
            }
            TruncatedTotalState::Quantum { amp, p_acc, p_rej }
        }
    }
}

/// Truncated initial state after the begin marker.
pub fn truncated_start(spec: &TransducerSpec, y: &[u8]) -> Result<TruncatedTotalState> {
    let s0 = initial_total_state(spec);
    let s1 = step(spec, &s0, InputSymbol::Init)?;
    Ok(truncate(&s1, y))
}

/// The truncated step map: step, then truncate. Operates directly on the
/// truncated representation.
pub fn truncated_step(
    spec: &TransducerSpec,
    state: &TruncatedTotalState,
    sym: InputSymbol,
    y: &[u8],
) -> Result<TruncatedTotalState> {
    if let InputSymbol::Letter(i) = sym {
        if i >= spec.input_alphabet().len() {
            return Err(Error::UnknownSymbol { symbol: format!("#{i}") });
        }
    }
    let m = spec.matrix(sym);
    // Printing f from prefix length `len` stays on the prefix iff f matches
    // y there; otherwise the component leaves the truncated space now.
    let extend = |len: usize, q: usize| -> Option<usize> {
        let f = spec.output(sym, q);
        let end = len + f.len();
        if end <= y.len() && &y[len..end] == f {
            Some(end)
        } else {
            None
        }
    };
    let mut next = TruncatedTotalState::empty(spec, y.len());
    match (state, &mut next) {
        (
            TruncatedTotalState::Prob { p_non, p_acc, p_rej },
            TruncatedTotalState::Prob { p_non: n_non, p_acc: n_acc, p_rej: n_rej },
        ) => {
            *n_acc = p_acc.clone();
            *n_rej = *p_rej;
            for ((q, len), &mass) in p_non {
                let dest = extend(*len, *q);
                for &(p, v) in m.row(*q) {
                    let flow = mass * v.re;
                    if flow == 0.0 {
                        continue;
                    }
                    match dest {
                        Some(end) if spec.is_accepting(p) => n_acc[end] += flow,
                        Some(end) if !spec.is_halting(p) => {
                            *n_non.entry((p, end)).or_insert(0.0) += flow;
                        }
                        _ => *n_rej += flow,
                    }
                }
            }
            n_non.retain(|_, v| *v > 0.0);
        }
        (
            TruncatedTotalState::Quantum { amp, p_acc, p_rej },
            TruncatedTotalState::Quantum { amp: n_amp, p_acc: n_acc, p_rej: n_rej },
        ) => {
            *n_acc = p_acc.clone();
            *n_rej = *p_rej;
            let mut acc_groups: BTreeMap<(usize, usize), C64> = BTreeMap::new();
            let mut rej_groups: BTreeMap<(usize, usize), C64> = BTreeMap::new();
            // Components whose print leaves the prefix still interfere with
            // each other before their mass is folded away; the word they
            // carry is (source prefix, printed suffix).
            let mut off_prefix: BTreeMap<(usize, OutputWord, usize), C64> = BTreeMap::new();
            for ((q, len), &a) in amp {
                match extend(*len, *q) {
                    Some(end) => {
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
                                *n_amp.entry((p, end)).or_insert(C64::new(0.0, 0.0)) += flow;
                                continue;
                            };
                            *bucket.entry((p, end)).or_insert(C64::new(0.0, 0.0)) += flow;
                        }
                    }
                    None => {
                        let print = spec.output(sym, *q).to_vec();
                        for &(p, v) in m.row(*q) {
                            let flow = a * v;
                            if flow.norm_sqr() == 0.0 {
                                continue;
                            }
                            *off_prefix
                                .entry((*len, print.clone(), p))
                                .or_insert(C64::new(0.0, 0.0)) += flow;
                        }
                    }
                }
            }
            for ((_, end), a) in acc_groups {
                n_acc[end] += a.norm_sqr();
            }
            for (_, a) in rej_groups.into_iter() {
                *n_rej += a.norm_sqr();
            }
            for (_, a) in off_prefix.into_iter() {
                *n_rej += a.norm_sqr();
            }
            n_amp.retain(|_, a| a.norm() > PRUNE_EPS);
        }
        _ => unreachable!("state kind matches machine kind"),
    }
    Ok(next)
}

/// Mixed-norm distance between two truncated states: 2-norm on the
/// amplitude difference (1-norm for probabilistic machines), 1-norm on the
/// accepted parts, absolute difference on the rejected part.
pub fn truncated_distance(a: &TruncatedTotalState, b: &TruncatedTotalState) -> f64 {
    match (a, b) {
        (
            TruncatedTotalState::Prob { p_non: na, p_acc: aa, p_rej: ra },
            TruncatedTotalState::Prob { p_non: nb, p_acc: ab, p_rej: rb },
        ) => {
            let mut d = 0.0;
            for (k, va) in na {
                d += (va - nb.get(k).copied().unwrap_or(0.0)).abs();
            }
            for (k, vb) in nb {
                if !na.contains_key(k) {
                    d += vb.abs();
                }
            }
            d + acc_l1(aa, ab) + (ra - rb).abs()
        }
        (
            TruncatedTotalState::Quantum { amp: na, p_acc: aa, p_rej: ra },
            TruncatedTotalState::Quantum { amp: nb, p_acc: ab, p_rej: rb },
        ) => {
            let mut d2 = 0.0;
            for (k, va) in na {
                d2 += (va - nb.get(k).copied().unwrap_or(C64::new(0.0, 0.0))).norm_sqr();
            }
            for (k, vb) in nb {
                if !na.contains_key(k) {
                    d2 += vb.norm_sqr();
                }
            }
            d2.sqrt() + acc_l1(aa, ab) + (ra - rb).abs()
        }
        _ => f64::INFINITY,
    }
}

fn acc_l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Mixed norm of a single truncated state (distance from zero).
pub fn truncated_norm(s: &TruncatedTotalState) -> f64 {
    match s {
        TruncatedTotalState::Prob { p_non, p_acc, p_rej } => {
            p_non.values().map(|v| v.abs()).sum::<f64>()
                + p_acc.iter().map(|v| v.abs()).sum::<f64>()
                + p_rej.abs()
        }
        TruncatedTotalState::Quantum { amp, p_acc, p_rej } => {
            amp.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
                + p_acc.iter().map(|v| v.abs()).sum::<f64>()
                + p_rej.abs()
        }
    }
}

/// Configuration of the range-membership search.
#[derive(Clone, Copy, Debug)]
pub struct DecisionConfig {
    /// Cutpoint the machine is asserted to compute its relation with.
    pub alpha: f64,
    /// Isolation radius around the cutpoint.
    pub delta: f64,
    /// Lipschitz constant of the truncated step maps in the mixed norm.
    /// The default 5 covers the unit-mass reachable set: the coherent part
    /// of a step is a contraction, and each of the two halted components
    /// grows by at most twice the incoming difference.
    pub gamma: f64,
    /// Give up after this many kept net points.
    pub state_cap: usize,
}

impl DecisionConfig {
    pub fn new(alpha: f64, delta: f64) -> Self {
        DecisionConfig { alpha, delta, gamma: 5.0, state_cap: 1_000_000 }
    }

    pub fn prune_radius(&self) -> f64 {
        self.delta / self.gamma
    }

    fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) || self.delta <= 0.0 {
            return Err(Error::Precondition(
                "range search needs alpha in (0,1) and positive delta".into(),
            ));
        }
        if self.gamma < 1.0 {
            return Err(Error::Precondition("gamma below 1 is never a valid Lipschitz bound".into()));
        }
        if self.state_cap == 0 {
            return Err(Error::Precondition("state cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RangeVerdict {
    /// Some input produces the word above `alpha + delta`; a witness input
    /// is attached.
    Yes { witness: Vec<usize> },
    /// No input does (given the isolation assumption).
    No,
    /// The search could not decide: the net exceeded the cap, or some
    /// end-marker probability landed strictly inside the isolation gap,
    /// refuting the caller's isolation assumption.
    Inconclusive(InconclusiveReason),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InconclusiveReason {
    CapHit,
    IsolationViolated,
}

/// Decide whether `y` is in the range of the relation computed by `spec`
/// with isolated cutpoint `cfg.alpha`/`cfg.delta` (caller-asserted), by
/// breadth-first exploration of truncated total states with metric pruning.
pub fn range_member(spec: &TransducerSpec, y: &[u8], cfg: &DecisionConfig) -> Result<RangeVerdict> {
    cfg.check()?;
    for &s in y {
        if s as usize >= spec.output_alphabet().len() {
            return Err(Error::UnknownSymbol { symbol: format!("output #{s}") });
        }
    }
    let eta = cfg.prune_radius();
    let n_syms = spec.input_alphabet().len();

    let end_probability = |s: &TruncatedTotalState| -> Result<f64> {
        let done = truncated_step(spec, s, InputSymbol::End, y)?;
        Ok(done.accepted_at_full())
    };
    enum Outcome {
        Decided(RangeVerdict),
        Continue,
    }
    let classify = |s: &TruncatedTotalState, witness: &[usize]| -> Result<Outcome> {
        let p = end_probability(s)?;
        if p >= cfg.alpha + cfg.delta {
            Ok(Outcome::Decided(RangeVerdict::Yes { witness: witness.to_vec() }))
        } else if p > cfg.alpha - cfg.delta {
            Ok(Outcome::Decided(RangeVerdict::Inconclusive(
                InconclusiveReason::IsolationViolated,
            )))
        } else {
            Ok(Outcome::Continue)
        }
    };

    let start = truncated_start(spec, y)?;
    if let Outcome::Decided(v) = classify(&start, &[])? {
        return Ok(v);
    }
    let mut net: Vec<(TruncatedTotalState, Vec<usize>)> = vec![(start, Vec::new())];
    let mut frontier: VecDeque<usize> = VecDeque::from([0]);
    while let Some(ix) = frontier.pop_front() {
        for sym in 0..n_syms {
            let (state, witness) = &net[ix];
            let mut next_witness = witness.clone();
            next_witness.push(sym);
            let next = truncated_step(spec, state, InputSymbol::Letter(sym), y)?;
            if net.iter().any(|(kept, _)| truncated_distance(&next, kept) < eta) {
                continue;
            }
            if let Outcome::Decided(v) = classify(&next, &next_witness)? {
                return Ok(v);
            }
            net.push((next, next_witness));
            frontier.push_back(net.len() - 1);
            if net.len() > cfg.state_cap {
                return Ok(RangeVerdict::Inconclusive(InconclusiveReason::CapHit));
            }
        }
    }
    Ok(RangeVerdict::No)
}

/// Measure an empirical expansion factor of the truncated step maps:
/// the maximum of ||T~_w s - T~_w t|| / ||s - t|| over sampled reachable
/// pairs (s, t) and random suffixes w. A lower bound on the true Lipschitz
/// constant; useful for sanity-checking a configured `gamma`.
pub fn probe_gamma(spec: &TransducerSpec, y: &[u8], trials: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n_syms = spec.input_alphabet().len();
    let mut worst: f64 = 1.0;
    for _ in 0..trials {
        let mut random_word = |max: usize| -> Vec<usize> {
            let len = rng.random_range(0..=max);
            (0..len).map(|_| rng.random_range(0..n_syms)).collect()
        };
        let (wa, wb, suffix) = (random_word(6), random_word(6), random_word(4));
        let mut s = truncated_start(spec, y)?;
        for &a in &wa {
            s = truncated_step(spec, &s, InputSymbol::Letter(a), y)?;
        }
        let mut t = truncated_start(spec, y)?;
        for &a in &wb {
            t = truncated_step(spec, &t, InputSymbol::Letter(a), y)?;
        }
        let before = truncated_distance(&s, &t);
        if before < 1e-12 {
            continue;
        }
        let (mut s2, mut t2) = (s, t);
        for &a in &suffix {
            s2 = truncated_step(spec, &s2, InputSymbol::Letter(a), y)?;
            t2 = truncated_step(spec, &t2, InputSymbol::Letter(a), y)?;
        }
        worst = worst.max(truncated_distance(&s2, &t2) / before);
    }
    Ok(worst)
}
