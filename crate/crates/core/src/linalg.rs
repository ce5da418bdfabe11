//! Sparse complex matrices, the stochastic/unitary predicates, and
//! deterministic completion of partially specified transition matrices.
//!
//! Matrix orientation everywhere: entry `(q, p)` is the amplitude (or
//! probability) of moving from source state `q` to target state `p`,
//! i.e. row = source. A state distribution is a row vector and a step is
//! `row_vector * M`.

use crate::{C64, Error, Result};
use std::collections::BTreeMap;

/// Square sparse matrix with per-row sorted `(column, value)` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMat {
    n: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseMat {
    pub fn zero(n: usize) -> Self {
        SparseMat { n, rows: vec![Vec::new(); n] }
    }

    pub fn identity(n: usize) -> Self {
        SparseMat {
            n,
            rows: (0..n).map(|i| vec![(i, C64::new(1.0, 0.0))]).collect(),
        }
    }

    pub fn from_rows(n: usize, mut rows: Vec<Vec<(usize, C64)>>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::Machine(format!("expected {n} rows, got {}", rows.len())));
        }
        for row in rows.iter_mut() {
            row.sort_by_key(|&(c, _)| c);
            for &(c, _) in row.iter() {
                if c >= n {
                    return Err(Error::Machine(format!("column {c} out of range for size {n}")));
                }
            }
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Machine(format!("duplicate column {} in row", w[0].0)));
                }
            }
        }
        Ok(SparseMat { n, rows })
    }

    pub fn from_dense(dense: &[Vec<C64>]) -> Result<Self> {
        let n = dense.len();
        let rows = dense
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| v.norm_sqr() != 0.0)
                    .map(|(c, &v)| (c, v))
                    .collect()
            })
            .collect();
        let m = SparseMat { n, rows };
        for r in dense {
            if r.len() != n {
                return Err(Error::Machine("dense matrix is not square".into()));
            }
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn row(&self, q: usize) -> &[(usize, C64)] {
        &self.rows[q]
    }

    pub fn entry(&self, q: usize, p: usize) -> C64 {
        match self.rows[q].binary_search_by_key(&p, |&(c, _)| c) {
            Ok(i) => self.rows[q][i].1,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut out = vec![vec![C64::new(0.0, 0.0); self.n]; self.n];
        for (q, row) in self.rows.iter().enumerate() {
            for &(p, v) in row {
                out[q][p] = v;
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> SparseMat {
        let mut rows = vec![Vec::new(); self.n];
        for (q, row) in self.rows.iter().enumerate() {
            for &(p, v) in row {
                rows[p].push((q, v.conj()));
            }
        }
        for r in rows.iter_mut() {
            r.sort_by_key(|&(c, _)| c);
        }
        SparseMat { n: self.n, rows }
    }

    /// Matrix product `self * other` (apply `self` first under the
    /// row-vector convention).
    pub fn mul(&self, other: &SparseMat) -> SparseMat {
        assert_eq!(self.n, other.n);
        let mut rows = Vec::with_capacity(self.n);
        for row in &self.rows {
            let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
            for &(k, v) in row {
                for &(p, w) in &other.rows[k] {
                    *acc.entry(p).or_insert(C64::new(0.0, 0.0)) += v * w;
                }
            }
            rows.push(
                acc.into_iter()
                    .filter(|(_, v)| v.norm_sqr() > 0.0)
                    .collect(),
            );
        }
        SparseMat { n: self.n, rows }
    }

    /// Map every entry through `f` (used for squared-moduli conversion).
    pub fn map_entries(&self, f: impl Fn(C64) -> C64) -> SparseMat {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&(c, v)| (c, f(v)))
                    .filter(|(_, v)| v.norm_sqr() != 0.0)
                    .collect()
            })
            .collect();
        SparseMat { n: self.n, rows }
    }

    /// If every row is a single entry of value 1, return the target map.
    pub fn as_permutation(&self, tol: f64) -> Option<Vec<usize>> {
        let mut tgt = Vec::with_capacity(self.n);
        let mut seen = vec![false; self.n];
        for row in &self.rows {
            if row.len() != 1 {
                return None;
            }
            let (p, v) = row[0];
            if (v - C64::new(1.0, 0.0)).norm() > tol || seen[p] {
                return None;
            }
            seen[p] = true;
            tgt.push(p);
        }
        Some(tgt)
    }

    pub fn max_imag(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|(_, v)| v.im.abs())
            .fold(0.0, f64::max)
    }
}

/// True iff all entries are (near-)real and nonnegative above `-tol` and
/// every row sums to 1 within `tol`.
pub fn is_stochastic(m: &SparseMat, tol: f64) -> bool {
    stochastic_deviation(m).iter().all(|&d| d <= tol)
}

/// Per-row deviation from row-stochasticity: max of entry negativity,
/// entry imaginary part, and |row sum - 1|.
pub fn stochastic_deviation(m: &SparseMat) -> Vec<f64> {
    (0..m.size())
        .map(|q| {
            let mut sum = 0.0;
            let mut worst: f64 = 0.0;
            for &(_, v) in m.row(q) {
                worst = worst.max(v.im.abs()).max((-v.re).max(0.0));
                sum += v.re;
            }
            worst.max((sum - 1.0).abs())
        })
        .collect()
}

/// True iff `M * M† = I` entrywise within `tol` (rows orthonormal; for a
/// square matrix this is equivalent to unitarity).
pub fn is_unitary(m: &SparseMat, tol: f64) -> bool {
    unitary_deviation(m) <= tol
}

/// Largest entrywise deviation of `M * M†` from the identity.
pub fn unitary_deviation(m: &SparseMat) -> f64 {
    let n = m.size();
    // Bucket rows by column so only genuinely overlapping row pairs are
    // visited; sparse machines stay O(nnz).
    let mut by_col: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
    for q in 0..n {
        for &(c, v) in m.row(q) {
            by_col[c].push((q, v));
        }
    }
    let mut inner: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    for bucket in &by_col {
        for (ai, &(qa, va)) in bucket.iter().enumerate() {
            for &(qb, vb) in bucket.iter().skip(ai) {
                *inner.entry((qa, qb)).or_insert(C64::new(0.0, 0.0)) += va * vb.conj();
            }
        }
    }
    let mut worst: f64 = 0.0;
    let mut diag_seen = vec![false; n];
    for ((qa, qb), v) in inner {
        if qa == qb {
            diag_seen[qa] = true;
            worst = worst.max((v - C64::new(1.0, 0.0)).norm());
        } else {
            worst = worst.max(v.norm());
        }
    }
    for q in 0..n {
        if !diag_seen[q] {
            // Empty row.
            worst = worst.max(1.0);
        }
    }
    worst
}

/// True iff every entry is 0 or 1 within `tol` (the deterministic case).
pub fn is_zero_one(m: &SparseMat, tol: f64) -> bool {
    m.rows.iter().flatten().all(|&(_, v)| {
        v.im.abs() <= tol && ((v.re).abs() <= tol || (v.re - 1.0).abs() <= tol)
    })
}

/// Incrementally specified transition matrix. Unassigned rows are filled in
/// deterministically on `finish_*`: Gram-Schmidt over the standard basis for
/// unitary completion (scanning basis vectors in index order), identity
/// self-loops for stochastic completion.
pub struct MatrixBuilder {
    n: usize,
    rows: Vec<Option<Vec<(usize, C64)>>>,
}

impl MatrixBuilder {
    pub fn new(n: usize) -> Self {
        MatrixBuilder { n, rows: vec![None; n] }
    }

    /// Amplitude-1 edge `from -> to`.
    pub fn edge(&mut self, from: usize, to: usize) {
        self.set_row(from, vec![(to, C64::new(1.0, 0.0))]);
    }

    pub fn set_row(&mut self, from: usize, mut entries: Vec<(usize, C64)>) {
        assert!(
            self.rows[from].is_none(),
            "row {from} specified twice in transition matrix"
        );
        entries.sort_by_key(|&(c, _)| c);
        self.rows[from] = Some(entries);
    }

    pub fn is_set(&self, from: usize) -> bool {
        self.rows[from].is_some()
    }

    /// Complete to a unitary: every unassigned row receives the next
    /// standard basis vector orthogonalized against all rows chosen so far.
    /// Assigned rows must already form an orthonormal family.
    pub fn finish_unitary(self) -> Result<SparseMat> {
        let n = self.n;
        let mut chosen: Vec<Vec<(usize, C64)>> = Vec::new();
        let mut by_col: Vec<Vec<usize>> = vec![Vec::new(); n]; // column -> chosen rows touching it
        let add_chosen = |row: Vec<(usize, C64)>,
                              chosen: &mut Vec<Vec<(usize, C64)>>,
                              by_col: &mut Vec<Vec<usize>>| {
            let idx = chosen.len();
            for &(c, _) in &row {
                by_col[c].push(idx);
            }
            chosen.push(row);
        };
        for row in self.rows.iter().flatten() {
            add_chosen(row.clone(), &mut chosen, &mut by_col);
        }
        let mut completions: Vec<Vec<(usize, C64)>> = Vec::new();
        let mut cursor = 0usize;
        let missing = self.rows.iter().filter(|r| r.is_none()).count();
        for _ in 0..missing {
            let mut found = None;
            while cursor < n {
                let c = cursor;
                cursor += 1;
                // v = e_c - sum_r <e_c, r> r ; rows are orthonormal so one pass
                // over the rows touching column c suffices.
                let mut v: BTreeMap<usize, C64> = BTreeMap::new();
                v.insert(c, C64::new(1.0, 0.0));
                let touching: Vec<usize> = by_col[c].clone();
                for &ri in &touching {
                    let coeff = chosen[ri]
                        .iter()
                        .find(|&&(col, _)| col == c)
                        .map(|&(_, val)| val.conj())
                        .unwrap_or_else(|| C64::new(0.0, 0.0));
                    if coeff.norm_sqr() == 0.0 {
                        continue;
                    }
                    for &(col, val) in &chosen[ri] {
                        *v.entry(col).or_insert(C64::new(0.0, 0.0)) -= coeff * val;
                    }
                }
                let norm: f64 = v.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm > 1e-7 {
                    let row: Vec<(usize, C64)> = v
                        .into_iter()
                        .map(|(col, val)| (col, val / norm))
                        .filter(|(_, val)| val.norm_sqr() > 1e-28)
                        .collect();
                    found = Some(row);
                    break;
                }
            }
            let row = found.ok_or_else(|| {
                Error::Machine("cannot complete matrix to a unitary: basis exhausted".into())
            })?;
            add_chosen(row.clone(), &mut chosen, &mut by_col);
            completions.push(row);
        }
        let mut completions = completions.into_iter();
        let rows = self
            .rows
            .into_iter()
            .map(|r| r.unwrap_or_else(|| completions.next().unwrap()))
            .collect();
        SparseMat::from_rows(n, rows)
    }

    /// Complete to a stochastic matrix: unassigned rows become self-loops.
    pub fn finish_stochastic(self) -> Result<SparseMat> {
        let n = self.n;
        let rows = self
            .rows
            .into_iter()
            .enumerate()
            .map(|(q, r)| r.unwrap_or_else(|| vec![(q, C64::new(1.0, 0.0))]))
            .collect();
        SparseMat::from_rows(n, rows)
    }
}

/// Random unitary as a product of Givens rotations with random phases,
/// driven by any `rand` RNG.
pub fn random_unitary<R: rand::Rng>(n: usize, rng: &mut R) -> SparseMat {
    use std::f64::consts::TAU;
    let mut dense = vec![vec![C64::new(0.0, 0.0); n]; n];
    for (i, row) in dense.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    let rounds = 2 * n * n.max(2);
    for _ in 0..rounds {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n);
        if n > 1 {
            while j == i {
                j = rng.random_range(0..n);
            }
        }
        let theta = rng.random_range(0.0..TAU);
        let phi = rng.random_range(0.0..TAU);
        let (s, c) = theta.sin_cos();
        let eip = C64::new(phi.cos(), phi.sin());
        for row in dense.iter_mut() {
            let a = row[i];
            let b = row[j];
            row[i] = a * c + b * s * eip;
            row[j] = -a * s * eip.conj() + b * c;
        }
    }
    SparseMat::from_dense(&dense).expect("square by construction")
}

/// Random stochastic matrix with `support` nonzero entries per row.
pub fn random_stochastic<R: rand::Rng>(n: usize, support: usize, rng: &mut R) -> SparseMat {
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let k = support.clamp(1, n);
        let mut cols: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = rng.random_range(i..n);
            cols.swap(i, j);
        }
        let mut weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        let row: Vec<(usize, C64)> = cols[..k]
            .iter()
            .zip(&weights)
            .map(|(&c, &w)| (c, C64::new(w, 0.0)))
            .collect();
        rows.push(row);
    }
    SparseMat::from_rows(n, rows).expect("valid by construction")
}
