//! Dense exact linear algebra over [`Rational`] and [`RationalFunction`].
//!
//! Matrices here are at most about 11×11, so everything is dense and
//! row-reduction based. Nilpotent Jordan types are read off the rank
//! sequence of powers rather than by building chains.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{Rational, RationalFunction, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not nilpotent")]
    NotNilpotent,
    #[error("ambient dimensions differ: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

pub type QMatrix = Matrix<Rational>;
pub type RfMatrix = Matrix<RationalFunction>;

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Shape("ragged rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_cols(cols: &[Vec<S>]) -> Result<Self, LinalgError> {
        Ok(Self::from_rows(cols.to_vec())?.transpose())
    }

    pub fn diagonal(d: Vec<S>) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, x) in d.into_iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(S::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.get(i, j).clone());
            }
        }
        m
    }

    pub fn mul(&self, o: &Self) -> Result<Self, LinalgError> {
        if self.cols != o.rows {
            return Err(LinalgError::Shape(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut m = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        let v = m.get(i, j).plus(&a.times(b));
                        m.set(i, j, v);
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols, "vector length");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(S::zero(), |acc, (a, b)| acc.plus(&a.times(b)))
            })
            .collect()
    }

    /// `self^k` for a square matrix.
    pub fn pow(&self, k: usize) -> Self {
        assert!(self.is_square());
        (0..k).fold(Self::identity(self.rows), |acc, _| acc.mul(self).expect("square"))
    }

    /// Reduced row-echelon form and pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = S::one().over(m.get(r, c));
            for j in c..m.cols {
                let v = m.get(r, j).times(&inv);
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c).clone();
                for j in c..m.cols {
                    let prj = m.get(r, j);
                    if !prj.is_zero() {
                        let v = m.get(i, j).minus(&f.times(prj));
                        m.set(i, j, v);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn determinant(&self) -> Result<S, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Shape("determinant of non-square matrix".into()));
        }
        let mut m = self.clone();
        let n = m.rows;
        let mut det = S::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m.get(i, c).is_zero()) else {
                return Ok(S::zero());
            };
            if p != c {
                m.swap_rows(p, c);
                det = det.negate();
            }
            let piv = m.get(c, c).clone();
            det = det.times(&piv);
            for i in c + 1..n {
                if m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c).over(&piv);
                for j in c..n {
                    let v = m.get(i, j).minus(&f.times(m.get(c, j)));
                    m.set(i, j, v);
                }
            }
        }
        Ok(det)
    }

    pub fn invert(&self) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Shape("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, S::one());
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(LinalgError::Singular);
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, r.get(i, n + j).clone());
            }
        }
        Ok(inv)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
}

impl Matrix<Rational> {
    /// Null space, returned in reduced echelon form.
    pub fn kernel_basis(&self) -> Subspace {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let vecs = free
            .iter()
            .map(|&f| {
                let mut v = vec![Rational::zero(); self.cols];
                v[f] = Rational::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -r.get(row, f).clone();
                }
                v
            })
            .collect();
        Subspace::span(self.cols, vecs)
    }

    pub fn to_rf(&self) -> RfMatrix {
        self.map(|x| RationalFunction::from_rational(x.clone()))
    }
}

/// Jordan type of a nilpotent matrix from its rank sequence.
pub fn nilpotent_partition(n: &QMatrix) -> Result<Partition, LinalgError> {
    if !n.is_square() {
        return Err(LinalgError::Shape("non-square".into()));
    }
    let d = n.rows();
    let mut ranks = vec![d];
    let mut p = QMatrix::identity(d);
    while *ranks.last().expect("nonempty") > 0 {
        if ranks.len() > d {
            return Err(LinalgError::NotNilpotent);
        }
        p = p.mul(n)?;
        let r = p.rank();
        if r == *ranks.last().expect("nonempty") {
            return Err(LinalgError::NotNilpotent);
        }
        ranks.push(r);
    }
    Ok(Partition::from_ranks(d, &ranks[1..]))
}

/// Weakly decreasing positive parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(mut parts: Vec<usize>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self { parts }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn size(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Invert `r_m = Σ max(λ_i − m, 0)` for an operator on a space of
    /// dimension `dim`; `ranks[m-1] = r_m`, missing entries are zero.
    pub fn from_ranks(dim: usize, ranks: &[usize]) -> Self {
        let r = |m: usize| if m == 0 { dim } else { ranks.get(m - 1).copied().unwrap_or(0) };
        let mut parts = Vec::new();
        for k in (1..=dim).rev() {
            // blocks of size ≥ k minus blocks of size ≥ k+1
            let exact = (r(k - 1) - r(k)) - (r(k) - r(k + 1));
            parts.extend(std::iter::repeat(k).take(exact));
        }
        Self { parts }
    }

    /// `r_m` for m = 1.. until the first zero (excluded).
    pub fn rank_sequence(&self) -> Vec<usize> {
        (1..)
            .map(|m| self.parts.iter().map(|&l| l.saturating_sub(m)).sum::<usize>())
            .take_while(|&r| r > 0)
            .collect()
    }

    /// Drop parts equal to one; this is how contraction types are labelled.
    pub fn nontrivial(&self) -> Self {
        Self { parts: self.parts.iter().copied().filter(|&p| p > 1).collect() }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.parts.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
    }
}

/// A subspace of `Q^ambient`, stored as RREF rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<Vec<Rational>>,
}

impl Subspace {
    pub fn span(ambient: usize, vecs: Vec<Vec<Rational>>) -> Self {
        let vecs: Vec<_> = vecs.into_iter().filter(|v| v.iter().any(|x| !x.is_zero())).collect();
        if vecs.is_empty() {
            return Self::zero(ambient);
        }
        assert!(vecs.iter().all(|v| v.len() == ambient), "vector length");
        let (r, piv) = QMatrix::from_rows(vecs).expect("rectangular").rref();
        Self { ambient, basis: (0..piv.len()).map(|i| r.row(i).to_vec()).collect() }
    }

    pub fn zero(ambient: usize) -> Self {
        Self { ambient, basis: Vec::new() }
    }

    pub fn full(ambient: usize) -> Self {
        Self { ambient, basis: QMatrix::identity(ambient).to_rows() }
    }

    /// `V_i = ⟨e_i, …, e_n⟩` (1-based); `V_{n+1} = 0`.
    pub fn tail(ambient: usize, i: usize) -> Self {
        let vecs = (i.max(1)..=ambient).map(|k| unit(ambient, k - 1)).collect();
        Self { ambient, basis: vecs }
    }

    /// Span of standard basis vectors with the given 1-based indices.
    pub fn coords(ambient: usize, idx: &[usize]) -> Self {
        Self::span(ambient, idx.iter().map(|&k| unit(ambient, k - 1)).collect())
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Rational>] {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    fn check(&self, o: &Self) -> Result<(), LinalgError> {
        if self.ambient != o.ambient {
            return Err(LinalgError::AmbientMismatch(self.ambient, o.ambient));
        }
        Ok(())
    }

    pub fn sum(&self, o: &Self) -> Result<Self, LinalgError> {
        self.check(o)?;
        Ok(Self::span(self.ambient, self.basis.iter().chain(&o.basis).cloned().collect()))
    }

    /// Orthogonal complement for the standard bilinear form.
    pub fn perp(&self) -> Self {
        if self.is_zero() {
            return Self::full(self.ambient);
        }
        QMatrix::from_rows(self.basis.clone()).expect("rectangular").kernel_basis()
    }

    pub fn intersect(&self, o: &Self) -> Result<Self, LinalgError> {
        self.check(o)?;
        Ok(self.perp().sum(&o.perp())?.perp())
    }

    pub fn contains_vector(&self, v: &[Rational]) -> bool {
        assert_eq!(v.len(), self.ambient, "vector length");
        // reduce v against the RREF rows
        let mut w = v.to_vec();
        for row in &self.basis {
            let p = row.iter().position(|x| !x.is_zero()).expect("nonzero row");
            if !w[p].is_zero() {
                let f = w[p].clone();
                for (a, b) in w.iter_mut().zip(row) {
                    *a -= &f * b;
                }
            }
        }
        w.iter().all(Zero::is_zero)
    }

    fn pivots(&self) -> Vec<usize> {
        self.basis.iter().map(|r| r.iter().position(|x| !x.is_zero()).expect("nonzero row")).collect()
    }

    /// Coordinates of `v` in the stored basis, `None` if `v` is outside.
    pub fn coordinates(&self, v: &[Rational]) -> Option<Vec<Rational>> {
        if !self.contains_vector(v) {
            return None;
        }
        Some(self.pivots().into_iter().map(|p| v[p].clone()).collect())
    }

    /// 0-based indices of standard vectors spanning a complement.
    pub fn complement_coords(&self) -> Vec<usize> {
        let piv = self.pivots();
        (0..self.ambient).filter(|k| !piv.contains(k)).collect()
    }

    /// Whether `o ⊆ self`.
    pub fn contains(&self, o: &Self) -> Result<bool, LinalgError> {
        self.check(o)?;
        Ok(o.basis.iter().all(|v| self.contains_vector(v)))
    }
}

/// Lattice operation selector for [`subspace_ops`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceOp {
    Sum,
    Intersect,
    Contains,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubspaceResult {
    Space(Subspace),
    Bool(bool),
}

pub fn subspace_ops(u: &Subspace, w: &Subspace, op: SubspaceOp) -> Result<SubspaceResult, LinalgError> {
    Ok(match op {
        SubspaceOp::Sum => SubspaceResult::Space(u.sum(w)?),
        SubspaceOp::Intersect => SubspaceResult::Space(u.intersect(w)?),
        SubspaceOp::Contains => SubspaceResult::Bool(u.contains(w)?),
    })
}

/// Standard basis vector with a 0-based index.
pub fn unit(n: usize, k: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); n];
    v[k] = Rational::one();
    v
}
