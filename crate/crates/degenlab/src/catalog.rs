//! Named algebra families, level tables and the `T^{2,2}` classifier.
//!
//! Everything here is driven by `data/catalog.json`: multiplication tables
//! are templates in `n` (and `m`), levels are first-match rules over `n`
//! and `m`. Coordinates follow the usual convention of products landing in
//! high-index basis vectors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::StructureTensor;
use crate::contraction::{iw_max, ContractionError};
use crate::exactnum::{Polynomial, Rational};
use crate::linalg::{unit, Partition, QMatrix};
use crate::template::{self, eval_cond, eval_index, expand_line, TemplateError, Vars};

const MANIFEST: &str = include_str!("../../../data/catalog.json");

/// Largest dimension exercised by the test matrix.
pub const MAX_TEST_DIM: usize = 11;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("unknown catalog name `{0}`")]
    UnknownName(String),
    #[error("family `{0}` needs a parameter, e.g. `{0}(3)`")]
    MissingParameter(String),
    #[error("{name} is not defined at n = {n} (requires {bound})")]
    DimensionOutOfRange { name: String, n: usize, bound: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("catalog manifest: {0}")]
    Manifest(String),
    #[error("form is not skew-symmetric")]
    NotSkew,
    #[error("the pair of forms does not span a 2-dimensional image")]
    NotSurjective,
    #[error("forms must be square of equal size")]
    Shape,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

// ---------------------------------------------------------------------------
// Names

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Zero,
    N3,
    Eta,
    EtaEps15,
    EtaEpsDouble,
    T(Partition),
    T22E23,
    T22E24,
    T22E34,
    T22E45,
    T222E23,
    T222E24,
    T222E7Special,
    T2k2E23,
    T2k2E23Shift,
    T2k2Special,
    T2k2E2m2,
    T3E23,
    T3E24,
    T3E34,
    T3E45,
    T32E23,
    T4E23,
}

const SIMPLE_KEYS: &[(&str, Family)] = &[
    ("zero", Family::Zero),
    ("n3", Family::N3),
    ("eta", Family::Eta),
    ("eta_eps15", Family::EtaEps15),
    ("eta_eps_double", Family::EtaEpsDouble),
    ("T22_e23", Family::T22E23),
    ("T22_e24", Family::T22E24),
    ("T22_e34", Family::T22E34),
    ("T22_e45", Family::T22E45),
    ("T222_e23", Family::T222E23),
    ("T222_e24", Family::T222E24),
    ("T222_e7special", Family::T222E7Special),
    ("T2k2_e23", Family::T2k2E23),
    ("T2k2_e23_shift", Family::T2k2E23Shift),
    ("T2k2_special", Family::T2k2Special),
    ("T2k2_e2m2", Family::T2k2E2m2),
    ("T3_e23", Family::T3E23),
    ("T3_e24", Family::T3E24),
    ("T3_e34", Family::T3E34),
    ("T3_e45", Family::T3E45),
    ("T32_e23", Family::T32E23),
    ("T4_e23", Family::T4E23),
];

impl Family {
    pub fn key(&self) -> String {
        match self {
            Family::T(p) => format!("T{p}"),
            f => SIMPLE_KEYS.iter().find(|(_, g)| g == f).map(|(k, _)| k.to_string()).expect("listed"),
        }
    }

    pub fn takes_parameter(&self) -> bool {
        matches!(self, Family::Eta | Family::EtaEpsDouble | Family::T2k2E23 | Family::T2k2E23Shift
            | Family::T2k2Special | Family::T2k2E2m2)
    }
}

/// A catalog reference such as `T22_e45`, `eta(3)`, `T(3,2)` or `T2k2_special(4)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CatalogName {
    pub family: Family,
    pub m: Option<usize>,
}

impl CatalogName {
    pub fn simple(family: Family) -> Self {
        Self { family, m: None }
    }

    pub fn with_m(family: Family, m: usize) -> Self {
        Self { family, m: Some(m) }
    }

    pub fn t(parts: &[usize]) -> Self {
        Self::simple(Family::T(Partition::new(parts.to_vec())))
    }

    fn vars(&self, n: usize) -> Vars {
        let mut v = template::vars(&[("n", n as i64)]);
        if let Some(m) = self.m {
            v.insert("m".into(), m as i64);
        }
        v
    }
}

impl fmt::Display for CatalogName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.m {
            Some(m) => write!(f, "{}({m})", self.family.key()),
            None => write!(f, "{}", self.family.key()),
        }
    }
}

const ALIASES: &[(&str, &str)] = &[
    ("k", "zero"),
    ("eta1", "eta(1)"),
    ("T2", "n3"),
    ("T3", "T(3)"),
    ("T22", "T(2,2)"),
    ("T222", "T(2,2,2)"),
    ("T2222", "T(2,2,2,2)"),
    ("T22222", "T(2,2,2,2,2)"),
    ("T4", "T(4)"),
    ("T32", "T(3,2)"),
    ("T33", "T(3,3)"),
    ("T322", "T(3,2,2)"),
    ("7special", "T222_e7special"),
];

impl FromStr for CatalogName {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = ALIASES.iter().find(|(a, _)| *a == s).map_or(s, |(_, b)| b);
        let unknown = || CatalogError::UnknownName(s.to_string());
        if let Some(inner) = s.strip_prefix("T(").and_then(|r| r.strip_suffix(')')) {
            let parts = inner.split(',').map(|p| p.trim().parse::<usize>()).collect::<Result<Vec<_>, _>>();
            let parts = parts.map_err(|_| unknown())?;
            let name = CatalogName::t(&parts);
            manifest().family(&name.family.key()).ok_or_else(unknown)?;
            return Ok(name);
        }
        let (key, m) = match s.split_once('(') {
            Some((k, rest)) => {
                let m = rest.strip_suffix(')').and_then(|x| x.trim().parse::<usize>().ok()).ok_or_else(unknown)?;
                (k, Some(m))
            }
            None => (s, None),
        };
        let family = SIMPLE_KEYS.iter().find(|(k, _)| *k == key).map(|(_, f)| f.clone()).ok_or_else(unknown)?;
        match (family.takes_parameter(), m) {
            (true, None) => Err(CatalogError::MissingParameter(key.to_string())),
            (false, Some(_)) => Err(unknown()),
            _ => Ok(CatalogName { family, m }),
        }
    }
}

impl Serialize for CatalogName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CatalogName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Manifest

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub families: Vec<FamilySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: String,
    pub source: String,
    #[serde(default)]
    pub param_values: Vec<usize>,
    pub min_dim: String,
    #[serde(default)]
    pub max_dim: Option<String>,
    pub table: Vec<String>,
    pub iw_max: String,
    /// Overrides of `iw_max` for particular parameter values.
    #[serde(default)]
    pub iw_max_when: Vec<IwRule>,
    pub levels: Vec<LevelRule>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IwRule {
    pub when: String,
    pub iw_max: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelRule {
    pub when: String,
    pub level: String,
    pub infinite: String,
}

impl Manifest {
    pub fn parse(src: &str) -> Result<Self, CatalogError> {
        serde_json::from_str(src).map_err(|e| CatalogError::Manifest(e.to_string()))
    }

    pub fn family(&self, key: &str) -> Option<&FamilySpec> {
        self.families.iter().find(|f| f.family == key)
    }

    /// Every `(name, n)` pair of the test matrix: the two smallest legal
    /// dimensions of each family member, capped at [`MAX_TEST_DIM`].
    pub fn test_matrix(&self) -> Vec<(CatalogName, usize)> {
        let mut out = Vec::new();
        for name in self.names() {
            let Ok((lo, hi)) = dim_range(&name) else { continue };
            for n in [lo, lo + 1] {
                if n <= MAX_TEST_DIM && hi.is_none_or(|h| n <= h) {
                    out.push((name.clone(), n));
                }
            }
        }
        out
    }

    /// All concrete names: one per family, one per parameter value.
    pub fn names(&self) -> Vec<CatalogName> {
        let mut out = Vec::new();
        for f in &self.families {
            let base: CatalogName = match f.family.parse() {
                Ok(b) => b,
                Err(CatalogError::MissingParameter(_)) => {
                    let fam = SIMPLE_KEYS.iter().find(|(k, _)| *k == f.family).map(|(_, g)| g.clone());
                    let Some(fam) = fam else { continue };
                    out.extend(f.param_values.iter().map(|&m| CatalogName::with_m(fam.clone(), m)));
                    continue;
                }
                Err(_) => continue,
            };
            out.push(base);
        }
        out
    }
}

/// The shipped manifest.
pub fn manifest() -> &'static Manifest {
    static M: OnceLock<Manifest> = OnceLock::new();
    M.get_or_init(|| Manifest::parse(MANIFEST).expect("shipped catalog manifest parses"))
}

fn spec_for(name: &CatalogName) -> Result<&'static FamilySpec, CatalogError> {
    if name.family.takes_parameter() && name.m.is_none() {
        return Err(CatalogError::MissingParameter(name.family.key()));
    }
    manifest().family(&name.family.key()).ok_or_else(|| CatalogError::UnknownName(name.to_string()))
}

/// Legal dimensions `[min, max]` of a family member.
pub fn dim_range(name: &CatalogName) -> Result<(usize, Option<usize>), CatalogError> {
    let spec = spec_for(name)?;
    let v = name.vars(0);
    let lo = eval_index(&spec.min_dim, &v)?.max(1) as usize;
    let hi = spec.max_dim.as_ref().map(|e| eval_index(e, &v)).transpose()?.map(|h| h as usize);
    Ok((lo, hi))
}

fn check_dim(name: &CatalogName, n: usize) -> Result<&'static FamilySpec, CatalogError> {
    let spec = spec_for(name)?;
    let (lo, hi) = dim_range(name)?;
    if n < lo || hi.is_some_and(|h| n > h) {
        let bound = match hi {
            Some(h) if h == lo => format!("n = {lo}"),
            Some(h) => format!("{lo} <= n <= {h}"),
            None => format!("n >= {lo}"),
        };
        return Err(CatalogError::DimensionOutOfRange { name: name.to_string(), n, bound });
    }
    Ok(spec)
}

/// Parse table lines `i j k [c]` (with optional `for` loops) at dimension n.
pub fn table_from_template(lines: &[String], n: usize, vars: &Vars) -> Result<StructureTensor, CatalogError> {
    let mut a = StructureTensor::zero(n);
    for line in lines {
        for (body, vs) in expand_line(line, vars)? {
            let parts: Vec<&str> = body.split_whitespace().collect();
            if !(3..=4).contains(&parts.len()) {
                return Err(CatalogError::Manifest(format!("bad table line `{body}`")));
            }
            let idx = |s: &str| -> Result<usize, CatalogError> {
                let v = eval_index(s, &vs)?;
                if v < 1 || v as usize > n {
                    return Err(CatalogError::Manifest(format!("index {v} out of range in `{body}`")));
                }
                Ok(v as usize)
            };
            let (i, j, k) = (idx(parts[0])?, idx(parts[1])?, idx(parts[2])?);
            let c = match parts.get(3) {
                Some(c) => crate::exactnum::parse_rational(c).map_err(|e| CatalogError::Manifest(e.to_string()))?,
                None => Rational::one(),
            };
            let mut v = vec![Rational::zero(); n];
            v[k - 1] = c;
            a.add_product(i, j, &v).map_err(|e| CatalogError::Manifest(format!("{e} in `{body}`")))?;
        }
    }
    Ok(a)
}

/// The multiplication table of `name` at dimension `n`.
pub fn instantiate(name: &CatalogName, n: usize) -> Result<StructureTensor, CatalogError> {
    let spec = check_dim(name, n)?;
    table_from_template(&spec.table, n, &name.vars(n))
}

/// Level as classified, or a lower bound beyond the classified range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LevelValue {
    Exact(u8),
    AtLeast(u8),
}

impl LevelValue {
    fn parse(src: &str, vars: &Vars) -> Result<Self, CatalogError> {
        let (at_least, expr) = match src.trim().strip_prefix(">=") {
            Some(r) => (true, r),
            None => (false, src),
        };
        let v = eval_index(expr, vars)?.clamp(0, 255) as u8;
        Ok(if at_least { LevelValue::AtLeast(v) } else { LevelValue::Exact(v) })
    }

    pub fn exact(&self) -> Option<u8> {
        match self {
            LevelValue::Exact(v) => Some(*v),
            LevelValue::AtLeast(_) => None,
        }
    }
}

impl fmt::Display for LevelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelValue::Exact(v) => write!(f, "{v}"),
            LevelValue::AtLeast(v) => write!(f, ">={v}"),
        }
    }
}

impl Serialize for LevelValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LevelRecord {
    pub level: LevelValue,
    pub infinite_level: LevelValue,
}

pub fn level_lookup(name: &CatalogName, n: usize) -> Result<LevelRecord, CatalogError> {
    let spec = check_dim(name, n)?;
    let vars = name.vars(n);
    for rule in &spec.levels {
        if eval_cond(&rule.when, &vars)? {
            return Ok(LevelRecord {
                level: LevelValue::parse(&rule.level, &vars)?,
                infinite_level: LevelValue::parse(&rule.infinite, &vars)?,
            });
        }
    }
    Err(CatalogError::Manifest(format!("no level rule matches {name} at n = {n}")))
}

/// The partition `λ` of the maximal contraction `T^λ` (parts ≥ 2 only).
pub fn expected_iw_max(name: &CatalogName) -> Result<Partition, CatalogError> {
    let spec = spec_for(name)?;
    let vars = name.vars(0);
    let mut src = spec.iw_max.as_str();
    for rule in &spec.iw_max_when {
        if eval_cond(&rule.when, &vars)? {
            src = &rule.iw_max;
            break;
        }
    }
    let mut parts = Vec::new();
    for p in src.split(',').filter(|p| !p.trim().is_empty()) {
        let (base, rep) = match p.split_once('^') {
            Some((b, r)) => (eval_index(b, &vars)?, eval_index(r, &vars)?),
            None => (eval_index(p, &vars)?, 1),
        };
        parts.extend(std::iter::repeat_n(base as usize, rep.max(0) as usize));
    }
    Ok(Partition::new(parts))
}

// ---------------------------------------------------------------------------
// Skew pairs and the T^{2,2} classifier

fn check_skew(f: &QMatrix) -> Result<(), CatalogError> {
    let n = f.rows();
    if f.cols() != n {
        return Err(CatalogError::Shape);
    }
    for i in 0..n {
        for j in 0..n {
            if f.get(i, j) != &-f.get(j, i).clone() {
                return Err(CatalogError::NotSkew);
            }
        }
    }
    Ok(())
}

/// `U ⋉_φ k²` with `φ = (f1, f2)`: `u_a u_b = f1[a][b] e_{n-1} + f2[a][b] e_n`.
pub fn build_skew_pair_algebra(f1: &QMatrix, f2: &QMatrix) -> Result<StructureTensor, CatalogError> {
    check_skew(f1)?;
    check_skew(f2)?;
    if f1.rows() != f2.rows() {
        return Err(CatalogError::Shape);
    }
    let u = f1.rows();
    let n = u + 2;
    let mut a = StructureTensor::zero(n);
    for i in 0..u {
        for j in i + 1..u {
            let mut v = vec![Rational::zero(); n];
            v[n - 2] = f1.get(i, j).clone();
            v[n - 1] = f2.get(i, j).clone();
            if v.iter().any(|x| !x.is_zero()) {
                a.add_product(i + 1, j + 1, &v).expect("indices in range");
            }
        }
    }
    if a.square().dim() != 2 {
        return Err(CatalogError::NotSurjective);
    }
    Ok(a)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum T22Class {
    Name(CatalogName),
    LevelAtLeast6,
    NeedsExtension,
}

impl fmt::Display for T22Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            T22Class::Name(n) => write!(f, "{n}"),
            T22Class::LevelAtLeast6 => f.write_str("level >= 6"),
            T22Class::NeedsExtension => f.write_str("needs a quadratic extension"),
        }
    }
}

/// Pfaffian of a 4×4 skew matrix given as a closure over entries.
fn pf4<T>(p: impl Fn(usize, usize) -> T) -> T
where
    for<'a> &'a T: std::ops::Mul<&'a T, Output = T> + std::ops::Sub<&'a T, Output = T> + std::ops::Add<&'a T, Output = T>,
{
    let a = &p(0, 1) * &p(2, 3);
    let b = &p(0, 2) * &p(1, 3);
    let c = &p(0, 3) * &p(1, 2);
    &(&a - &b) + &c
}

fn is_rational_square(q: &Rational) -> bool {
    if q < &Rational::zero() {
        return false;
    }
    let (n, d) = (q.numer(), q.denom());
    let (rn, rd) = (n.sqrt(), d.sqrt());
    &(&rn * &rn) == n && &(&rd * &rd) == d
}

/// Decide the `T^{2,2}` class of `a` from the pencil of skew forms it
/// induces on `A / A²`.
///
/// The forms are reduced modulo their common radical; on the remaining
/// `d`-dimensional space the class is fixed by the pencil's Kronecker type:
/// d = 3 is `T^{2,2}`, d = 4 splits by the discriminant of the Pfaffian
/// quadratic, d = 5 is `ε₄₅` iff some member of the pencil drops rank,
/// anything else has level at least six.
pub fn classify_t22(a: &StructureTensor, seed: u64, trials: usize) -> Result<T22Class, CatalogError> {
    let pre = |m: String| CatalogError::PreconditionViolated(m);
    let iw = iw_max(a, seed, trials).map_err(|e: ContractionError| pre(e.to_string()))?;
    if iw.label() != Partition::new(vec![2, 2]) {
        return Err(pre(format!("maximal contraction is T{} rather than T(2,2)", iw.label())));
    }
    let n = a.dim();
    let sq = a.square();
    match sq.dim() {
        3 => return Ok(T22Class::Name(CatalogName::simple(Family::T22E23))),
        2 => {}
        d => return Err(pre(format!("dim A^2 = {d}"))),
    }
    if !a.annihilator().contains(&sq).expect("same ambient") {
        return Err(pre("A^2 is not central".into()));
    }
    let comp: Vec<Vec<Rational>> = sq.complement_coords().into_iter().map(|k| unit(n, k)).collect();
    let u = comp.len();
    let mut f = [QMatrix::zeros(u, u), QMatrix::zeros(u, u)];
    for i in 0..u {
        for j in i + 1..u {
            let p = a.product(&comp[i], &comp[j]).expect("length");
            let c = sq.coordinates(&p).expect("product lies in A^2");
            for (k, fk) in f.iter_mut().enumerate() {
                fk.set(i, j, c[k].clone());
                fk.set(j, i, -c[k].clone());
            }
        }
    }
    // restrict to a complement of the common radical
    let mut stacked = f[0].to_rows();
    stacked.extend(f[1].to_rows());
    let radical = QMatrix::from_rows(stacked).expect("rectangular").kernel_basis();
    let keep: Vec<Vec<Rational>> = radical.complement_coords().into_iter().map(|k| unit(u, k)).collect();
    let d = keep.len();
    let b = QMatrix::from_cols(&keep).expect("columns");
    let g: Vec<QMatrix> = f
        .iter()
        .map(|fk| b.transpose().mul(fk).and_then(|x| x.mul(&b)).expect("shapes"))
        .collect();
    match d {
        3 => Ok(T22Class::Name(CatalogName::t(&[2, 2]))),
        4 => {
            let alpha = pf4(|i, j| g[0].get(i, j).clone());
            let gamma = pf4(|i, j| g[1].get(i, j).clone());
            let both = pf4(|i, j| g[0].get(i, j) + g[1].get(i, j));
            let beta = &(&both - &alpha) - &gamma;
            if alpha.is_zero() && beta.is_zero() && gamma.is_zero() {
                return Err(pre("pencil on a 4-dimensional quotient has generic rank 2".into()));
            }
            let disc = &(&beta * &beta) - &(Rational::from_integer(4.into()) * &alpha * &gamma);
            if disc.is_zero() {
                Ok(T22Class::Name(CatalogName::simple(Family::T22E24)))
            } else if is_rational_square(&disc) {
                Ok(T22Class::Name(CatalogName::simple(Family::T22E34)))
            } else {
                Ok(T22Class::NeedsExtension)
            }
        }
        5 => {
            // x·G1 + G2 drops below rank 4 iff every principal 4×4 Pfaffian vanishes
            let entry = |i: usize, j: usize| Polynomial::from_coeffs(vec![g[1].get(i, j).clone(), g[0].get(i, j).clone()]);
            let mut common = Polynomial::zero();
            for skip in 0..5 {
                let idx: Vec<usize> = (0..5).filter(|&k| k != skip).collect();
                let pf = pf4(|i, j| entry(idx[i], idx[j]));
                common = Polynomial::gcd(&common, &pf);
            }
            // a rank drop somewhere on the projective line means L1 ⊕ J, else L2
            let finite_drop = common.degree().is_some_and(|deg| deg > 0);
            if finite_drop || g[0].rank() < 4 {
                Ok(T22Class::Name(CatalogName::simple(Family::T22E45)))
            } else {
                Ok(T22Class::LevelAtLeast6)
            }
        }
        d if d >= 6 => Ok(T22Class::LevelAtLeast6),
        d => Err(pre(format!("pencil lives on a {d}-dimensional quotient"))),
    }
}

/// Convenience for tables: name → dimension → tensor over the test matrix.
pub fn test_matrix_algebras() -> Result<BTreeMap<(CatalogName, usize), StructureTensor>, CatalogError> {
    manifest().test_matrix().into_iter().map(|(name, n)| Ok(((name.clone(), n), instantiate(&name, n)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn name(s: &str) -> CatalogName {
        s.parse().unwrap()
    }

    #[test]
    fn names_round_trip() {
        for s in ["zero", "n3", "eta(3)", "T(3,2)", "T22_e45", "T2k2_special(4)", "T4_e23"] {
            assert_eq!(name(s).to_string(), s);
        }
        assert_eq!(name("T32"), CatalogName::t(&[3, 2]));
        assert_eq!(name("7special"), CatalogName::simple(Family::T222E7Special));
        assert!(matches!("eta".parse::<CatalogName>(), Err(CatalogError::MissingParameter(_))));
        assert!("T(5,1)".parse::<CatalogName>().is_err());
        assert!("bogus".parse::<CatalogName>().is_err());
    }

    #[test]
    fn tables() {
        let eta2 = instantiate(&name("eta(2)"), 5).unwrap();
        assert_eq!(eta2.table_string(), "e1e2=e5, e3e4=e5");
        let t32 = instantiate(&name("T(3,2)"), 6).unwrap();
        assert_eq!(t32.table_string(), "e1e2=e5, e1e3=e4, e1e4=e6");
        let sp = instantiate(&name("T222_e7special"), 7).unwrap();
        assert_eq!(sp.table_string(), "e1e2=e5, e1e3=e6, e1e4=e7, e2e3=e4, e2e6=-e7, e3e5=e7");
        assert!(matches!(
            instantiate(&name("T22_e45"), 6),
            Err(CatalogError::DimensionOutOfRange { .. })
        ));
        assert!(instantiate(&name("T(3,3)"), 8).is_err());
    }

    #[test]
    fn levels() {
        let lv = |s: &str, n| level_lookup(&name(s), n).unwrap();
        assert_eq!(lv("T22_e34", 6).level, LevelValue::Exact(4));
        assert_eq!(lv("T22_e45", 7).level, LevelValue::Exact(5));
        assert_eq!(lv("eta(3)", 7).level, LevelValue::Exact(3));
        assert_eq!(lv("T(4)", 5).level, LevelValue::Exact(4));
        assert_eq!(lv("T(4)", 6).level, LevelValue::Exact(5));
        assert_eq!(lv("T3_e45", 7).level, LevelValue::AtLeast(6));
        assert_eq!(lv("T2k2_special(3)", 7).infinite_level, LevelValue::AtLeast(7));
    }

    #[test]
    fn expected_partitions() {
        assert_eq!(expected_iw_max(&name("T2k2_e23(4)")).unwrap(), Partition::new(vec![2, 2, 2, 2]));
        assert_eq!(expected_iw_max(&name("zero")).unwrap(), Partition::new(vec![]));
        assert_eq!(expected_iw_max(&name("T32_e23")).unwrap(), Partition::new(vec![3, 2]));
        assert_eq!(expected_iw_max(&name("eta_eps_double(1)")).unwrap(), Partition::new(vec![3]));
        assert_eq!(expected_iw_max(&name("eta_eps_double(3)")).unwrap(), Partition::new(vec![3, 2]));
    }

    #[test]
    fn skew_pairs() {
        // T^{2,2} at n = 5: forms e1∧e2 and e1∧e3 on U = ⟨e1,e2,e3⟩
        let mut f1 = QMatrix::zeros(3, 3);
        f1.set(0, 1, Rational::one());
        f1.set(1, 0, -Rational::one());
        let mut f2 = QMatrix::zeros(3, 3);
        f2.set(0, 2, Rational::one());
        f2.set(2, 0, -Rational::one());
        let a = build_skew_pair_algebra(&f1, &f2).unwrap();
        assert_eq!(a, instantiate(&name("T(2,2)"), 5).unwrap());
        assert_eq!(build_skew_pair_algebra(&f1, &QMatrix::zeros(3, 3)), Err(CatalogError::NotSurjective));
        let mut bad = f1.clone();
        bad.set(1, 0, Rational::one());
        assert_eq!(build_skew_pair_algebra(&bad, &f2), Err(CatalogError::NotSkew));
    }

    #[test]
    fn classifier_on_canonical_forms() {
        for (s, n) in [("T(2,2)", 6), ("T22_e23", 6), ("T22_e24", 6), ("T22_e34", 6), ("T22_e45", 7)] {
            let a = instantiate(&name(s), n).unwrap();
            assert_eq!(classify_t22(&a, 7, 10).unwrap(), T22Class::Name(name(s)), "{s}");
        }
        let last = StructureTensor::from_table(7, &[(1, 2, 6, 1), (1, 3, 7, 1), (2, 4, 7, 1), (3, 5, 6, 1)]).unwrap();
        assert_eq!(classify_t22(&last, 7, 10).unwrap(), T22Class::LevelAtLeast6);
        // e12+e34 and e23+e45: no member of the pencil drops rank
        let l2 = StructureTensor::from_table(7, &[(1, 2, 6, 1), (3, 4, 6, 1), (2, 3, 7, 1), (4, 5, 7, 1)]).unwrap();
        assert_eq!(classify_t22(&l2, 7, 10).unwrap(), T22Class::LevelAtLeast6);
        // Pf(a F1 + b F2) = a² - 2b²
        let irr = StructureTensor::from_table(6, &[(1, 2, 5, 1), (3, 4, 5, 1), (1, 3, 6, 1), (2, 4, 6, 2)]).unwrap();
        assert_eq!(classify_t22(&irr, 7, 10).unwrap(), T22Class::NeedsExtension);
        let t3 = instantiate(&name("T(3)"), 5).unwrap();
        assert!(matches!(classify_t22(&t3, 7, 10), Err(CatalogError::PreconditionViolated(_))));
    }
}
