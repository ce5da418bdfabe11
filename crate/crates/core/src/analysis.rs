//! Finite Markov chain state classification: transient states, ergodic
//! classes with their periods and cyclic classes, and per-class stationary
//! distributions.

use crate::linalg::{self, SparseMat};
use crate::{C64, Error, Result};

/// Entries above this count as edges of the transition digraph; float dust
/// must not create spurious reachability.
pub const EDGE_EPS: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ErgodicClass {
    /// States of the class, ascending.
    pub states: Vec<usize>,
    /// gcd of the cycle lengths through the class.
    pub period: usize,
    /// Cyclic classes in transition order: the chain maps class `v` into
    /// class `(v + 1) mod period`.
    pub cyclic_classes: Vec<Vec<usize>>,
    /// Stationary distribution over `states`, same order.
    pub stationary: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ChainClassification {
    pub n: usize,
    /// States from which the process eventually leaves forever.
    pub transient: Vec<usize>,
    pub ergodic_classes: Vec<ErgodicClass>,
}

impl ChainClassification {
    /// Product of all class periods.
    pub fn period_product(&self) -> u64 {
        self.ergodic_classes.iter().map(|c| c.period as u64).product()
    }
}

fn edges(m: &SparseMat) -> Vec<Vec<usize>> {
    (0..m.size())
        .map(|q| {
            m.row(q)
                .iter()
                .filter(|(_, v)| v.norm() > EDGE_EPS)
                .map(|&(p, _)| p)
                .collect()
        })
        .collect()
}

/// Strongly connected components, Kosaraju, iterative. Returns one sorted
/// state list per component.
fn sccs(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        // Post-order DFS with an explicit stack.
        let mut stack = vec![(root, 0usize)];
        seen[root] = true;
        while let Some(&mut (q, ref mut next)) = stack.last_mut() {
            if *next < adj[q].len() {
                let p = adj[q][*next];
                *next += 1;
                if !seen[p] {
                    seen[p] = true;
                    stack.push((p, 0));
                }
            } else {
                order.push(q);
                stack.pop();
            }
        }
    }
    let mut radj = vec![Vec::new(); n];
    for (q, out) in adj.iter().enumerate() {
        for &p in out {
            radj[p].push(q);
        }
    }
    let mut component = vec![usize::MAX; n];
    let mut components = Vec::new();
    for &root in order.iter().rev() {
        if component[root] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![root];
        component[root] = id;
        let mut stack = vec![root];
        while let Some(q) = stack.pop() {
            for &p in &radj[q] {
                if component[p] == usize::MAX {
                    component[p] = id;
                    members.push(p);
                    stack.push(p);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Period of a closed strongly connected class: gcd over all in-class
/// edges (u, v) of level(u) + 1 - level(v), levels from a BFS tree.
fn class_period(class: &[usize], adj: &[Vec<usize>]) -> (usize, Vec<Vec<usize>>) {
    let root = class[0];
    let mut level = vec![i64::MIN; adj.len()];
    level[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(q) = queue.pop_front() {
        for &p in &adj[q] {
            if level[p] == i64::MIN {
                level[p] = level[q] + 1;
                queue.push_back(p);
            }
        }
    }
    let mut d: i64 = 0;
    for &q in class {
        for &p in &adj[q] {
            d = gcd(d, level[q] + 1 - level[p]);
        }
    }
    let d = d.unsigned_abs().max(1) as usize;
    let mut cyclic = vec![Vec::new(); d];
    for &q in class {
        let residue = level[q].rem_euclid(d as i64) as usize;
        cyclic[residue].push(q);
    }
    (d, cyclic)
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Least-squares solve of the stationary system (pi V = pi, sum pi = 1)
/// restricted to one class. Classes are small; dense normal equations.
fn stationary(m: &SparseMat, class: &[usize]) -> Result<Vec<f64>> {
    let d = class.len();
    let pos: std::collections::BTreeMap<usize, usize> =
        class.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    // Rows of the overdetermined system B^T pi^T = c: d columns from
    // (V - I)^T and one all-ones row.
    let mut b = vec![vec![0.0; d]; d + 1];
    for (i, &q) in class.iter().enumerate() {
        b[i][i] -= 1.0;
        for &(p, v) in m.row(q) {
            if let Some(&j) = pos.get(&p) {
                b[j][i] += v.re;
            }
        }
    }
    for x in b[d].iter_mut() {
        *x = 1.0;
    }
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    // Normal equations: (B^T B) pi = B^T c.
    let mut ata = vec![vec![0.0; d]; d];
    let mut atc = vec![0.0; d];
    for r in 0..=d {
        for i in 0..d {
            atc[i] += b[r][i] * c[r];
            for j in 0..d {
                ata[i][j] += b[r][i] * b[r][j];
            }
        }
    }
    solve_dense(&mut ata, &mut atc)
        .ok_or_else(|| Error::Machine("stationary system is singular".into()))
}

fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Classify the states of a stochastic matrix: ergodic classes are the
/// closed strongly connected components of the positive-edge digraph,
/// everything else is transient; per class, the period, the cyclic
/// classes, and the stationary distribution.
pub fn classify_states(m: &SparseMat) -> Result<ChainClassification> {
    if !linalg::is_stochastic(m, 1e-7) {
        return Err(Error::Precondition("state classification needs a stochastic matrix".into()));
    }
    let adj = edges(m);
    let mut transient = Vec::new();
    let mut ergodic_classes = Vec::new();
    for class in sccs(&adj) {
        let closed = class
            .iter()
            .all(|&q| adj[q].iter().all(|p| class.binary_search(p).is_ok()));
        if closed {
            let (period, cyclic_classes) = class_period(&class, &adj);
            let stationary = stationary(m, &class)?;
            ergodic_classes.push(ErgodicClass { states: class, period, cyclic_classes, stationary });
        } else {
            transient.extend(class);
        }
    }
    transient.sort_unstable();
    ergodic_classes.sort_by_key(|c| c.states[0]);
    Ok(ChainClassification { n: m.size(), transient, ergodic_classes })
}

/// Result of raising the chain to the product of its periods.
#[derive(Clone, Debug)]
pub struct RegularizedPower {
    pub exponent: u64,
    pub matrix: SparseMat,
    /// For every cyclic class of every original ergodic class (in
    /// classification order): does the power restricted to it have an
    /// entrywise positive power, i.e. is it regular?
    pub regular: Vec<bool>,
}

/// Raise the chain to `d` = product of all class periods; each former
/// cyclic class becomes a closed class of the power, and the restriction
/// of the power to it is regular. Both facts are checked and reported.
pub fn regularized_power(m: &SparseMat, cls: &ChainClassification) -> Result<RegularizedPower> {
    let d = cls.period_product();
    if d > 1 << 20 {
        return Err(Error::Precondition(format!("period product {d} is unreasonably large")));
    }
    let powered = mat_pow(m, d);
    let mut regular = Vec::new();
    for class in &cls.ergodic_classes {
        for cyc in &class.cyclic_classes {
            regular.push(is_regular_on(&powered, cyc));
        }
    }
    Ok(RegularizedPower { exponent: d, matrix: powered, regular })
}

fn mat_pow(m: &SparseMat, mut e: u64) -> SparseMat {
    let mut result = SparseMat::identity(m.size());
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = result.mul(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.mul(&base);
        }
    }
    result
}

/// Is the restriction of `m` to `states` regular, i.e. does some power have
/// all entries positive? Boolean reachability; the primitivity index of a
/// d-state class is below d^2.
fn is_regular_on(m: &SparseMat, states: &[usize]) -> bool {
    let d = states.len();
    let pos: std::collections::BTreeMap<usize, usize> =
        states.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut adj = vec![vec![false; d]; d];
    for (i, &q) in states.iter().enumerate() {
        for &(p, v) in m.row(q) {
            if v.norm() > EDGE_EPS {
                if let Some(&j) = pos.get(&p) {
                    adj[i][j] = true;
                }
            }
        }
    }
    let mut reach = adj.clone();
    for _ in 0..d * d {
        if reach.iter().all(|row| row.iter().all(|&x| x)) {
            return true;
        }
        let mut next = vec![vec![false; d]; d];
        for i in 0..d {
            for k in 0..d {
                if reach[i][k] {
                    for j in 0..d {
                        next[i][j] |= adj[k][j];
                    }
                }
            }
        }
        reach = next;
    }
    reach.iter().all(|row| row.iter().all(|&x| x))
}

/// Residual of the stationary equation, `||pi V - pi||_1`, over one class.
pub fn stationary_residual(m: &SparseMat, class: &ErgodicClass) -> f64 {
    let pos: std::collections::BTreeMap<usize, usize> =
        class.states.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut image = vec![0.0; class.states.len()];
    for (i, &q) in class.states.iter().enumerate() {
        for &(p, v) in m.row(q) {
            if let Some(&j) = pos.get(&p) {
                image[j] += class.stationary[i] * v.re;
            }
        }
    }
    image
        .iter()
        .zip(&class.stationary)
        .map(|(a, b)| (a - b).abs())
        .sum()
}

/// Convenience for stochastic matrices given densely as reals.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<SparseMat> {
    let dense: Vec<Vec<C64>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
        .collect();
    SparseMat::from_dense(&dense)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_singleton_classes() {
        let m = SparseMat::identity(3);
        let cls = classify_states(&m).unwrap();
        assert!(cls.transient.is_empty());
        assert_eq!(cls.ergodic_classes.len(), 3);
        for c in &cls.ergodic_classes {
            assert_eq!(c.period, 1);
            assert_eq!(c.stationary, vec![1.0]);
        }
    }

    #[test]
    fn two_cycle_has_period_two() {
        let m = matrix_from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let cls = classify_states(&m).unwrap();
        assert_eq!(cls.ergodic_classes.len(), 1);
        let c = &cls.ergodic_classes[0];
        assert_eq!(c.period, 2);
        assert_eq!(c.cyclic_classes, vec![vec![0], vec![1]]);
        assert!((c.stationary[0] - 0.5).abs() < 1e-12);
        assert!((c.stationary[1] - 0.5).abs() < 1e-12);

        let reg = regularized_power(&m, &cls).unwrap();
        assert_eq!(reg.exponent, 2);
        assert_eq!(reg.matrix, SparseMat::identity(2));
        assert!(reg.regular.iter().all(|&x| x));
        // each cyclic class is now its own aperiodic ergodic class
        let cls2 = classify_states(&reg.matrix).unwrap();
        assert_eq!(cls2.ergodic_classes.len(), 2);
        assert!(cls2.ergodic_classes.iter().all(|c| c.period == 1));
    }

    #[test]
    fn transient_states_detected() {
        // 0 leaks to 1; 1 and 2 form a closed aperiodic pair.
        let m = matrix_from_rows(&[
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.3, 0.7],
            vec![0.0, 0.6, 0.4],
        ])
        .unwrap();
        let cls = classify_states(&m).unwrap();
        assert_eq!(cls.transient, vec![0]);
        assert_eq!(cls.ergodic_classes.len(), 1);
        let c = &cls.ergodic_classes[0];
        assert_eq!(c.states, vec![1, 2]);
        assert_eq!(c.period, 1);
        assert!(stationary_residual(&m, c) < 1e-12);
    }

    #[test]
    fn non_stochastic_rejected() {
        let m = matrix_from_rows(&[vec![0.9, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(classify_states(&m).is_err());
    }

    #[test]
    fn convergence_to_stationary() {
        // Aperiodic chains converge from anywhere in the class.
        let m = matrix_from_rows(&[
            vec![0.2, 0.8, 0.0],
            vec![0.3, 0.1, 0.6],
            vec![0.5, 0.0, 0.5],
        ])
        .unwrap();
        let cls = classify_states(&m).unwrap();
        let c = &cls.ergodic_classes[0];
        let p200 = mat_pow(&m, 200);
        for start in 0..3 {
            for (i, &q) in c.states.iter().enumerate() {
                let got = p200.entry(start, q).re;
                assert!((got - c.stationary[i]).abs() < 1e-6);
            }
        }
    }

    /// Started anywhere inside a cyclic class, n applications of V^d
    /// converge to the class stationary distribution conditioned on that
    /// cyclic class (each cyclic class carries mass 1/period).
    fn assert_power_convergence(m: &SparseMat, n: u64, tol: f64, label: &str) {
        let cls = classify_states(m).unwrap();
        let reg = regularized_power(m, &cls).unwrap();
        let p = mat_pow(&reg.matrix, n);
        for class in &cls.ergodic_classes {
            for cyc in &class.cyclic_classes {
                for &start in cyc {
                    for &q in cyc {
                        let i = class.states.binary_search(&q).unwrap();
                        let want = class.stationary[i] * class.period as f64;
                        let got = p.entry(start, q).re;
                        assert!(
                            (got - want).abs() < tol,
                            "{label}: start {start} -> {q}: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn power_chain_converges_within_cyclic_classes() {
        use rand::SeedableRng;
        // Dense random chains mix fast enough for the 200-step bound.
        for seed in 0..20u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = crate::linalg::random_stochastic(6, 3, &mut rng);
            assert_power_convergence(&m, 200, 1e-6, &format!("dense seed {seed}"));
        }
        // Structured chains can mix arbitrarily slowly; give them a longer
        // horizon. Their point is the nontrivial cyclic structure.
        for seed in 0..20u64 {
            let m = crate::randgen::random_structured_chain(6, seed + 500);
            assert_power_convergence(&m, 2000, 1e-6, &format!("structured seed {seed}"));
        }
    }
}
