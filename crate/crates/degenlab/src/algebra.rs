//! Anticommutative algebras given by structure constants.
//!
//! Only products `e_i e_j` with `i < j` are stored; `e_j e_i = -e_i e_j` and
//! `e_i e_i = 0` hold by construction. Indices in the public table API are
//! 1-based to match the usual notation, vectors are plain 0-based slices.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{parse_rational, NumError, Rational};
use crate::linalg::{unit, LinalgError, QMatrix, Subspace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bad product index ({0},{1})")]
    BadIndex(usize, usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("json: {0}")]
    Json(String),
}

type Vector = Vec<Rational>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructureTensor {
    dim: usize,
    /// 0-based (i, j) with i < j.
    products: BTreeMap<(usize, usize), Vector>,
}

impl StructureTensor {
    pub fn zero(dim: usize) -> Self {
        Self { dim, products: BTreeMap::new() }
    }

    /// Build from 1-based entries `(i, j, k, c)` meaning `e_i e_j += c e_k`.
    pub fn from_table(dim: usize, entries: &[(usize, usize, usize, i64)]) -> Result<Self, AlgebraError> {
        let mut a = Self::zero(dim);
        for &(i, j, k, c) in entries {
            if k == 0 || k > dim {
                return Err(AlgebraError::BadIndex(i, j));
            }
            let mut v = vec![Rational::zero(); dim];
            v[k - 1] = Rational::from_integer(c.into());
            a.add_product(i, j, &v)?;
        }
        Ok(a)
    }

    /// `e_i e_j += v` (1-based), respecting anticommutativity.
    pub fn add_product(&mut self, i: usize, j: usize, v: &[Rational]) -> Result<(), AlgebraError> {
        if i == 0 || j == 0 || i > self.dim || j > self.dim || i == j {
            return Err(AlgebraError::BadIndex(i, j));
        }
        self.check_len(v)?;
        let (key, sign) = if i < j { ((i - 1, j - 1), true) } else { ((j - 1, i - 1), false) };
        let slot = self.products.entry(key).or_insert_with(|| vec![Rational::zero(); self.dim]);
        for (s, x) in slot.iter_mut().zip(v) {
            if sign {
                *s += x;
            } else {
                *s -= x;
            }
        }
        if slot.iter().all(Zero::is_zero) {
            self.products.remove(&key);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nonzero products, 1-based `(i, j)` with `i < j`.
    pub fn nonzero_products(&self) -> impl Iterator<Item = ((usize, usize), &Vector)> {
        self.products.iter().map(|(&(i, j), v)| ((i + 1, j + 1), v))
    }

    /// `e_i e_j` for 0-based indices.
    pub fn basis_product(&self, i: usize, j: usize) -> Vector {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.products.get(&(i, j)).cloned().unwrap_or_else(|| vec![Rational::zero(); self.dim]),
            Greater => match self.products.get(&(j, i)) {
                Some(v) => v.iter().map(|x| -x).collect(),
                None => vec![Rational::zero(); self.dim],
            },
            Equal => vec![Rational::zero(); self.dim],
        }
    }

    /// Structure constant `μ_{ij}^k`, 1-based.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> Rational {
        self.basis_product(i - 1, j - 1)[k - 1].clone()
    }

    fn check_len(&self, v: &[Rational]) -> Result<(), AlgebraError> {
        if v.len() != self.dim {
            return Err(AlgebraError::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    pub fn product(&self, x: &[Rational], y: &[Rational]) -> Result<Vector, AlgebraError> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok(self.mul(x, y))
    }

    /// Unchecked bilinear product.
    pub(crate) fn mul(&self, x: &[Rational], y: &[Rational]) -> Vector {
        let mut out = vec![Rational::zero(); self.dim];
        for (&(i, j), v) in &self.products {
            let c = &x[i] * &y[j] - &x[j] * &y[i];
            if c.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(v) {
                if !a.is_zero() {
                    *o += &c * a;
                }
            }
        }
        out
    }

    pub fn is_zero_algebra(&self) -> bool {
        self.products.is_empty()
    }

    pub fn subspace_product(&self, u: &Subspace, w: &Subspace) -> Result<Subspace, AlgebraError> {
        for s in [u, w] {
            if s.ambient() != self.dim {
                return Err(AlgebraError::DimensionMismatch { expected: self.dim, got: s.ambient() });
            }
        }
        let vecs = u
            .basis()
            .iter()
            .flat_map(|a| w.basis().iter().map(move |b| (a, b)))
            .map(|(a, b)| self.mul(a, b))
            .collect();
        Ok(Subspace::span(self.dim, vecs))
    }

    /// `A²`
    pub fn square(&self) -> Subspace {
        Subspace::span(self.dim, self.products.values().cloned().collect())
    }

    /// `A^1 = A`, `A^i = A·A^{i-1}`.
    pub fn power_ideal(&self, i: usize) -> Subspace {
        let full = Subspace::full(self.dim);
        let mut p = full.clone();
        for _ in 1..i.max(1) {
            if p.is_zero() {
                break;
            }
            p = self.subspace_product(&full, &p).expect("same ambient");
        }
        p
    }

    /// Smallest `m` with `A^m = 0`, or `None` when the powers stabilise.
    pub fn nilpotency_index(&self) -> Option<usize> {
        let full = Subspace::full(self.dim);
        let mut p = full.clone();
        let mut m = 1;
        while !p.is_zero() {
            let next = self.subspace_product(&full, &p).expect("same ambient");
            if next.dim() == p.dim() {
                return None;
            }
            p = next;
            m += 1;
        }
        Some(m)
    }

    pub fn is_nilpotent(&self) -> (bool, Option<usize>) {
        let m = self.nilpotency_index();
        (m.is_some(), m)
    }

    /// `{a : aA = 0}`.
    pub fn annihilator(&self) -> Subspace {
        let n = self.dim;
        // row block j encodes a ↦ a·e_j
        let mut rows = Vec::with_capacity(n * n);
        for j in 0..n {
            let cols: Vec<Vector> = (0..n).map(|i| self.basis_product(i, j)).collect();
            for k in 0..n {
                rows.push((0..n).map(|i| cols[i][k].clone()).collect::<Vector>());
            }
        }
        rows.retain(|r| r.iter().any(|x| !x.is_zero()));
        if rows.is_empty() {
            return Subspace::full(n);
        }
        QMatrix::from_rows(rows).expect("rectangular").kernel_basis()
    }

    /// Matrix of `L_a`; column j is `a e_j`.
    pub fn left_mult_matrix(&self, a: &[Rational]) -> Result<QMatrix, AlgebraError> {
        self.check_len(a)?;
        let cols: Vec<Vector> = (0..self.dim).map(|j| self.mul(a, &unit(self.dim, j))).collect();
        Ok(QMatrix::from_cols(&cols)?)
    }

    fn basis_left_mult(&self) -> Vec<QMatrix> {
        (0..self.dim)
            .map(|i| self.left_mult_matrix(&unit(self.dim, i)).expect("length"))
            .collect()
    }

    pub fn is_jacobi(&self) -> bool {
        let n = self.dim;
        let e: Vec<Vector> = (0..n).map(|i| unit(n, i)).collect();
        for i in 0..n {
            for j in i + 1..n {
                let xy = self.basis_product(i, j);
                for k in j + 1..n {
                    let yz = self.basis_product(j, k);
                    let zx = self.basis_product(k, i);
                    let s: Vector = self
                        .mul(&xy, &e[k])
                        .into_iter()
                        .zip(self.mul(&yz, &e[i]))
                        .zip(self.mul(&zx, &e[j]))
                        .map(|((a, b), c)| a + b + c)
                        .collect();
                    if s.iter().any(|x| !x.is_zero()) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `(xy)(xz) − ((xy)z)x − ((yz)x)x − ((zx)x)y` vanishes identically.
    /// Quadratic in x, linear in y and z: testing x over `e_i` and
    /// `e_i + e_j` and y, z over the basis is exact in characteristic zero.
    pub fn is_malcev(&self) -> bool {
        let n = self.dim;
        let mut xs: Vec<Vector> = (0..n).map(|i| unit(n, i)).collect();
        for i in 0..n {
            for j in i + 1..n {
                let mut v = unit(n, i);
                v[j] = Rational::one();
                xs.push(v);
            }
        }
        xs.iter().all(|x| {
            (0..n).all(|yi| {
                let y = unit(n, yi);
                let xy = self.mul(x, &y);
                (0..n).all(|zi| self.malcev_zero(x, &y, &unit(n, zi), &xy))
            })
        })
    }

    fn malcev_zero(&self, x: &[Rational], y: &[Rational], z: &[Rational], xy: &[Rational]) -> bool {
        let xz = self.mul(x, z);
        let lhs = self.mul(xy, &xz);
        let t1 = self.mul(&self.mul(xy, z), x);
        let t2 = self.mul(&self.mul(&self.mul(y, z), x), x);
        let t3 = self.mul(&self.mul(&self.mul(z, x), x), y);
        lhs.iter()
            .zip(&t1)
            .zip(&t2)
            .zip(&t3)
            .all(|(((l, a), b), c)| (l - a - b - c).is_zero())
    }

    pub fn identity_flags(&self) -> IdentityFlags {
        let wellformed = self.products.iter().all(|(&(i, j), v)| i < j && j < self.dim && v.len() == self.dim);
        IdentityFlags { anticommutative_wellformed: wellformed, jacobi: self.is_jacobi(), malcev: self.is_malcev() }
    }

    /// Smallest `m ≤ max_m` with `(L_a)^m = 0` for every `a`.
    ///
    /// Decided by polarization: `(L_a)^m = 0` for all `a` iff for every
    /// multiset M of m basis indices the sum of `L_{i_1}···L_{i_m}` over
    /// all distinct orderings of M vanishes.
    pub fn engel_degree(&self, max_m: usize) -> Option<usize> {
        let ls = self.basis_left_mult();
        let n = self.dim;
        // words[M] = Σ over distinct orderings of M, keyed by sorted multiset
        let mut prev: HashMap<Vec<usize>, QMatrix> = HashMap::new();
        prev.insert(Vec::new(), QMatrix::identity(n));
        for m in 1..=max_m {
            let mut cur: HashMap<Vec<usize>, QMatrix> = HashMap::new();
            for ms in multisets(n, m) {
                let mut acc = QMatrix::zeros(n, n);
                for (pos, &i) in ms.iter().enumerate() {
                    if pos > 0 && ms[pos - 1] == i {
                        continue;
                    }
                    let mut rest = ms.clone();
                    rest.remove(pos);
                    let Some(w) = prev.get(&rest) else { continue };
                    acc = add_q(&acc, &ls[i].mul(w).expect("square"));
                }
                if !acc.is_zero() {
                    cur.insert(ms, acc);
                }
            }
            if cur.is_empty() {
                return Some(m);
            }
            prev = cur;
        }
        None
    }

    /// `dim Der(A)`. The orbit of A has dimension `n² - dim Der(A)`, so a
    /// degeneration `A → B` is proper exactly when `dim Der(B) > dim Der(A)`.
    pub fn derivation_dim(&self) -> usize {
        let n = self.dim;
        // unknown D_{ka} (D e_a = Σ_k D_{ka} e_k) sits at column k*n + a
        let mut rows = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let mu_ij = self.basis_product(i, j);
                for k in 0..n {
                    let mut row = vec![Rational::zero(); n * n];
                    for (c, m) in mu_ij.iter().enumerate() {
                        if !m.is_zero() {
                            row[k * n + c] += m;
                        }
                    }
                    for b in 0..n {
                        let bj = self.constant_0(b, j, k);
                        if !bj.is_zero() {
                            row[b * n + i] -= &bj;
                        }
                        let ib = self.constant_0(i, b, k);
                        if !ib.is_zero() {
                            row[b * n + j] -= &ib;
                        }
                    }
                    if row.iter().any(|x| !x.is_zero()) {
                        rows.push(row);
                    }
                }
            }
        }
        if rows.is_empty() {
            return n * n;
        }
        n * n - QMatrix::from_rows(rows).expect("rectangular").rank()
    }

    fn constant_0(&self, i: usize, j: usize, k: usize) -> Rational {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.products.get(&(i, j)).map_or_else(Rational::zero, |v| v[k].clone()),
            std::cmp::Ordering::Greater => self.products.get(&(j, i)).map_or_else(Rational::zero, |v| -&v[k]),
            std::cmp::Ordering::Equal => Rational::zero(),
        }
    }

    /// `g * μ (x, y) = g μ(g⁻¹x, g⁻¹y)`.
    pub fn change_basis(&self, g: &QMatrix) -> Result<Self, AlgebraError> {
        if g.rows() != self.dim || g.cols() != self.dim {
            return Err(AlgebraError::DimensionMismatch { expected: self.dim, got: g.rows() });
        }
        let gi = g.invert()?;
        let n = self.dim;
        let cols: Vec<Vector> = (0..n).map(|j| gi.col(j)).collect();
        let mut out = Self::zero(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = g.mul_vec(&self.mul(&cols[i], &cols[j]));
                if v.iter().any(|x| !x.is_zero()) {
                    out.products.insert((i, j), v);
                }
            }
        }
        Ok(out)
    }

    /// The algebra in the basis `b_1, …, b_n` (rows of `basis`, standard
    /// coordinates). Equivalent to `change_basis` with `g = basis^{-T}`.
    pub fn in_basis(&self, basis: &QMatrix) -> Result<Self, AlgebraError> {
        self.change_basis(&basis.transpose().invert()?)
    }

    /// `A ⊕ k^extra` with the new coordinates appended and central.
    pub fn direct_sum_trivial(&self, extra: usize) -> Self {
        let n = self.dim + extra;
        let products = self
            .products
            .iter()
            .map(|(&k, v)| {
                let mut w = v.clone();
                w.resize(n, Rational::zero());
                (k, w)
            })
            .collect();
        Self { dim: n, products }
    }

    /// Same multiplication with coordinates renamed: old `e_i` becomes new
    /// `e_{perm[i]}` (0-based).
    pub fn permute(&self, perm: &[usize]) -> Self {
        let n = self.dim;
        let mut g = QMatrix::zeros(n, n);
        for (i, &p) in perm.iter().enumerate() {
            g.set(p, i, Rational::one());
        }
        self.change_basis(&g).expect("permutation is invertible")
    }

    pub fn to_json(&self) -> AlgebraFile {
        AlgebraFile {
            dim: self.dim,
            products: self
                .nonzero_products()
                .map(|((i, j), v)| ProductEntry { i, j, value: v.iter().map(RationalRepr::from).collect() })
                .collect(),
        }
    }

    pub fn from_json(f: &AlgebraFile) -> Result<Self, AlgebraError> {
        let mut a = Self::zero(f.dim);
        for p in &f.products {
            if p.i >= p.j {
                return Err(AlgebraError::BadIndex(p.i, p.j));
            }
            let v = p.value.iter().map(RationalRepr::to_rational).collect::<Result<Vec<_>, _>>()?;
            a.add_product(p.i, p.j, &v)?;
        }
        Ok(a)
    }

    pub fn parse_json(s: &str) -> Result<Self, AlgebraError> {
        let f: AlgebraFile = serde_json::from_str(s).map_err(|e| AlgebraError::Json(e.to_string()))?;
        Self::from_json(&f)
    }

    /// Human-readable table, e.g. `e1e2=e5, e1e3=-e6+2e7`.
    pub fn table_string(&self) -> String {
        if self.products.is_empty() {
            return "(zero multiplication)".into();
        }
        self.nonzero_products()
            .map(|((i, j), v)| format!("e{i}e{j}={}", fmt_vector(v)))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn fmt_vector(v: &[Rational]) -> String {
    let mut s = String::new();
    for (k, c) in v.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let neg = c < &Rational::zero();
        let a = if neg { -c } else { c.clone() };
        if !s.is_empty() || neg {
            s.push(if neg { '-' } else { '+' });
        }
        if !a.is_one() {
            s.push_str(&a.to_string());
        }
        s.push_str(&format!("e{}", k + 1));
    }
    s
}

fn add_q(a: &QMatrix, b: &QMatrix) -> QMatrix {
    let mut m = a.clone();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let v = b.get(i, j);
            if !v.is_zero() {
                m.set(i, j, a.get(i, j) + v);
            }
        }
    }
    m
}

/// Sorted multisets of size m over 0..n.
fn multisets(n: usize, m: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    (0..n).combinations_with_replacement(m).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityFlags {
    pub anticommutative_wellformed: bool,
    pub jacobi: bool,
    pub malcev: bool,
}

/// On-disk algebra format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub dim: usize,
    pub products: Vec<ProductEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductEntry {
    pub i: usize,
    pub j: usize,
    pub value: Vec<RationalRepr>,
}

/// A rational in JSON: an integer, or a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalRepr {
    Int(i64),
    Str(String),
}

impl RationalRepr {
    pub fn to_rational(&self) -> Result<Rational, NumError> {
        match self {
            RationalRepr::Int(n) => Ok(Rational::from_integer((*n).into())),
            RationalRepr::Str(s) => parse_rational(s),
        }
    }
}

impl From<&Rational> for RationalRepr {
    fn from(r: &Rational) -> Self {
        use num_traits::ToPrimitive;
        match (r.is_integer(), r.numer().to_i64()) {
            (true, Some(n)) => RationalRepr::Int(n),
            _ => RationalRepr::Str(format!("{}/{}", r.numer(), r.denom())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;

    fn v(xs: &[i64]) -> Vector {
        xs.iter().map(|&x| rat(x)).collect()
    }

    fn eta2() -> StructureTensor {
        StructureTensor::from_table(5, &[(1, 2, 5, 1), (3, 4, 5, 1)]).unwrap()
    }

    #[test]
    fn bilinear_product() {
        let a = eta2();
        assert_eq!(a.product(&v(&[1, 0, 1, 0, 0]), &v(&[0, 1, 0, 1, 0])).unwrap(), v(&[0, 0, 0, 0, 2]));
        let x = v(&[1, 2, 3, 4, 5]);
        assert_eq!(a.product(&x, &x).unwrap(), v(&[0; 5]));
        assert!(a.product(&v(&[1, 0]), &x).is_err());
    }

    #[test]
    fn anticommutative_storage() {
        let mut a = StructureTensor::zero(3);
        a.add_product(2, 1, &v(&[0, 0, 1])).unwrap();
        assert_eq!(a.constant(1, 2, 3), rat(-1));
        assert_eq!(a.constant(2, 1, 3), rat(1));
        assert!(a.add_product(1, 1, &v(&[0, 0, 1])).is_err());
    }

    #[test]
    fn nilpotency() {
        assert_eq!(StructureTensor::zero(5).is_nilpotent(), (true, Some(2)));
        assert_eq!(eta2().is_nilpotent(), (true, Some(3)));
        let t4 = StructureTensor::from_table(5, &[(1, 2, 3, 1), (1, 3, 4, 1), (1, 4, 5, 1)]).unwrap();
        assert_eq!(t4.is_nilpotent(), (true, Some(5)));
        assert!(t4.power_ideal(5).is_zero() && !t4.power_ideal(4).is_zero());
        assert_eq!(t4.power_ideal(3), Subspace::coords(5, &[4, 5]));
        assert!(t4.power_ideal(6).is_zero());
        assert_eq!(t4.engel_degree(5), Some(4));
        // sl2-like: not nilpotent
        let sl2 = StructureTensor::from_table(3, &[(1, 2, 3, 1), (2, 3, 1, 1), (3, 1, 2, 1)]).unwrap();
        assert_eq!(sl2.is_nilpotent(), (false, None));
        assert_eq!(sl2.engel_degree(3), None);
    }

    #[test]
    fn json_round_trip() {
        let mut a = eta2();
        a.add_product(1, 3, &[rat(0), rat(0), rat(0), crate::exactnum::ratio(1, 3), rat(0)]).unwrap();
        let s = serde_json::to_string(&a.to_json()).unwrap();
        assert!(s.contains("\"1/3\""));
        assert_eq!(StructureTensor::parse_json(&s).unwrap(), a);
    }

    #[test]
    fn engel_zero_and_heisenberg() {
        assert_eq!(StructureTensor::zero(4).engel_degree(4), Some(1));
        assert_eq!(eta2().engel_degree(5), Some(2));
    }

    #[test]
    fn direct_sum_adds_central_coords() {
        let a = eta2();
        let b = a.direct_sum_trivial(2);
        assert_eq!(b.dim(), 7);
        assert_eq!(b.annihilator().dim(), a.annihilator().dim() + 2);
        assert_eq!(a.direct_sum_trivial(0), a);
    }

    #[test]
    fn derivations() {
        let h3 = StructureTensor::from_table(3, &[(1, 2, 3, 1)]).unwrap();
        assert_eq!(h3.derivation_dim(), 6);
        assert_eq!(StructureTensor::zero(3).derivation_dim(), 9);
        // sl2 has only inner derivations
        let sl2 = StructureTensor::from_table(3, &[(1, 2, 3, 1), (2, 3, 1, 1), (3, 1, 2, 1)]).unwrap();
        assert_eq!(sl2.derivation_dim(), 3);
    }
}
