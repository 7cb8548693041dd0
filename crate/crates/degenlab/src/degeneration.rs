//! Degenerations certified by parameterized bases, flag-defined closed sets
//! and non-degeneration witnesses.
//!
//! A certificate `A --E(t)--> B` passes when every structure constant of `A`
//! in the basis `E(t)` is regular at `t = 0` with value the constant of `B`.
//! Non-degeneration comes in two strengths: invariant comparisons are proofs,
//! closed-set witnesses are checked on the source side exactly and on the
//! target side only by seeded random search of the orbit.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::StructureTensor;
use crate::contraction::{dominates, iw_max, rank_sequence, ContractionError, RankSequence};
use crate::exactnum::{parse_linear_combination, NumError, Rational, RationalFunction};
use crate::linalg::{QMatrix, RfMatrix};
use crate::par;
use crate::template::{eval_index, expand_line, TemplateError, Vars};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DegenerationError {
    #[error("basis determinant vanishes identically")]
    SingularFamily,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis row `{row}`: {source}")]
    Row { row: String, source: NumError },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("closed-set triple ({0},{1},{2}) out of range")]
    BadTriple(usize, usize, usize),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
}

// ---------------------------------------------------------------------------
// Parameterized bases

/// Rows are the vectors `E_i(t)` in standard coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterizedBasis {
    rows: RfMatrix,
}

impl ParameterizedBasis {
    pub fn new(rows: RfMatrix) -> Result<Self, DegenerationError> {
        if !rows.is_square() {
            return Err(DegenerationError::DimensionMismatch { expected: rows.rows(), got: rows.cols() });
        }
        if rows.determinant().expect("square").is_zero() {
            return Err(DegenerationError::SingularFamily);
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        Self { rows: RfMatrix::identity(n) }
    }

    /// A constant basis (an isomorphism certificate).
    pub fn constant(rows: &QMatrix) -> Result<Self, DegenerationError> {
        Self::new(rows.to_rf())
    }

    /// Instantiate row templates such as `t*e{n-1} + e{n}` or
    /// `e{i} for i in 6..n` at dimension `n`.
    pub fn parse(lines: &[String], n: usize, vars: &Vars) -> Result<Self, DegenerationError> {
        let mut rows = Vec::with_capacity(n);
        for line in lines {
            for (body, vs) in expand_line(line, vars)? {
                let idx = |s: &str| eval_index(s, &vs).ok();
                let row = parse_linear_combination(&body, n, &idx)
                    .map_err(|source| DegenerationError::Row { row: body.clone(), source })?;
                rows.push(row);
            }
        }
        if rows.len() != n {
            return Err(DegenerationError::DimensionMismatch { expected: n, got: rows.len() });
        }
        Self::new(RfMatrix::from_rows(rows).expect("rows have length n"))
    }

    pub fn dim(&self) -> usize {
        self.rows.rows()
    }

    pub fn matrix(&self) -> &RfMatrix {
        &self.rows
    }

    /// `None` if some entry has a pole at 0 or the limit is singular.
    pub fn at_zero(&self) -> Option<QMatrix> {
        let n = self.dim();
        let mut m = QMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, self.rows.get(i, j).eval_at_zero().ok()?);
            }
        }
        Some(m)
    }

    pub fn rows_string(&self) -> Vec<String> {
        (0..self.dim())
            .map(|i| {
                let terms: Vec<String> = self
                    .rows
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(k, c)| match c.as_constant() {
                        Some(q) if q.is_one() => format!("e{}", k + 1),
                        Some(q) if q == -Rational::one() => format!("-e{}", k + 1),
                        _ => format!("({c})*e{}", k + 1),
                    })
                    .collect();
                terms.join(" + ")
            })
            .collect()
    }
}

/// Structure constants over `Q(t)`, stored like [`StructureTensor`]: 0-based
/// `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    dim: usize,
    products: BTreeMap<(usize, usize), Vec<RationalFunction>>,
}

impl ParamTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `ν_{ij}^k(t)`, 1-based.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> RationalFunction {
        let (a, b, sign) = if i < j { (i, j, false) } else { (j, i, true) };
        if a == b {
            return RationalFunction::zero();
        }
        match self.products.get(&(a - 1, b - 1)) {
            Some(v) if sign => -&v[k - 1],
            Some(v) => v[k - 1].clone(),
            None => RationalFunction::zero(),
        }
    }

    /// Value at `t = 0`, or the first constant with a pole there.
    pub fn limit(&self) -> Result<StructureTensor, (usize, usize, usize)> {
        let mut out = StructureTensor::zero(self.dim);
        for (&(i, j), v) in &self.products {
            let mut w = Vec::with_capacity(self.dim);
            for (k, c) in v.iter().enumerate() {
                w.push(c.eval_at_zero().map_err(|_| (i + 1, j + 1, k + 1))?);
            }
            if w.iter().any(|x| !x.is_zero()) {
                out.add_product(i + 1, j + 1, &w).expect("valid indices");
            }
        }
        Ok(out)
    }
}

/// Structure constants of `a` in the basis `e`.
pub fn apply_parameterized_basis(a: &StructureTensor, e: &ParameterizedBasis) -> Result<ParamTensor, DegenerationError> {
    let n = a.dim();
    if e.dim() != n {
        return Err(DegenerationError::DimensionMismatch { expected: n, got: e.dim() });
    }
    // w = Σ_k c_k E_k = Eᵀ c
    let p_inv = e.rows.transpose().invert().map_err(|_| DegenerationError::SingularFamily)?;
    let mu: Vec<((usize, usize), Vec<RationalFunction>)> = a
        .nonzero_products()
        .map(|((x, y), v)| ((x - 1, y - 1), v.iter().map(|q| RationalFunction::from_rational(q.clone())).collect()))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n).tuple_combinations().collect();
    let rows = par::map_slice(&pairs, |&(i, j)| {
        let (ei, ej) = (e.rows.row(i), e.rows.row(j));
        let mut w = vec![RationalFunction::zero(); n];
        for ((x, y), v) in &mu {
            let c = &(&ei[*x] * &ej[*y]) - &(&ei[*y] * &ej[*x]);
            if c.is_zero() {
                continue;
            }
            for (o, m) in w.iter_mut().zip(v) {
                if !m.is_zero() {
                    *o = &*o + &(&c * m);
                }
            }
        }
        if w.iter().all(Zero::is_zero) {
            return None;
        }
        Some(((i, j), p_inv.mul_vec(&w)))
    });
    Ok(ParamTensor { dim: n, products: rows.into_iter().flatten().collect() })
}

/// A concrete `A --E(t)--> B`.
#[derive(Debug, Clone)]
pub struct DegenerationCertificate {
    pub source: StructureTensor,
    pub target: StructureTensor,
    pub basis: ParameterizedBasis,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DegenerationFailure {
    Pole { i: usize, j: usize, k: usize, value: String },
    Mismatch { i: usize, j: usize, k: usize, got: String, expected: String },
    SingularBasis,
    DimensionMismatch { source: usize, target: usize, basis: usize },
}

impl fmt::Display for DegenerationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Pole { i, j, k, value } => write!(f, "pole at t=0 in nu_{{{i}{j}}}^{k} = {value}"),
            Self::Mismatch { i, j, k, got, expected } => {
                write!(f, "nu_{{{i}{j}}}^{k}(0) = {got}, target has {expected}")
            }
            Self::SingularBasis => f.write_str("basis determinant vanishes identically"),
            Self::DimensionMismatch { source, target, basis } => {
                write!(f, "dimensions differ: source {source}, target {target}, basis {basis}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DegenerationVerdict {
    Pass,
    Fail { reason: DegenerationFailure },
}

impl DegenerationVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, Self::Pass)
    }
}

pub fn verify_degeneration(cert: &DegenerationCertificate) -> DegenerationVerdict {
    let n = cert.source.dim();
    if cert.target.dim() != n || cert.basis.dim() != n {
        return DegenerationVerdict::Fail {
            reason: DegenerationFailure::DimensionMismatch { source: n, target: cert.target.dim(), basis: cert.basis.dim() },
        };
    }
    let nu = match apply_parameterized_basis(&cert.source, &cert.basis) {
        Ok(nu) => nu,
        Err(_) => return DegenerationVerdict::Fail { reason: DegenerationFailure::SingularBasis },
    };
    for (i, j) in (1..=n).tuple_combinations() {
        for k in 1..=n {
            let c = nu.constant(i, j, k);
            let want = cert.target.constant(i, j, k);
            match c.eval_at_zero() {
                Err(_) => {
                    return DegenerationVerdict::Fail {
                        reason: DegenerationFailure::Pole { i, j, k, value: c.to_string() },
                    }
                }
                Ok(v) if v != want => {
                    return DegenerationVerdict::Fail {
                        reason: DegenerationFailure::Mismatch { i, j, k, got: v.to_string(), expected: want.to_string() },
                    }
                }
                Ok(_) => {}
            }
        }
    }
    DegenerationVerdict::Pass
}

// ---------------------------------------------------------------------------
// Closed sets

/// Which subspace a flag condition targets. `Tail(k)` is
/// `V_k = ⟨e_k, …, e_n⟩` (with `V_{n+1} = 0`); `Head(k)` is `⟨e_1, …, e_k⟩`
/// and exists only to exercise the invariance probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FlagTarget {
    Tail(usize),
    Head(usize),
}

/// `λ(V_i, V_j) ⊆ target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct FlagCondition {
    pub i: usize,
    pub j: usize,
    pub target: FlagTarget,
}

impl FlagCondition {
    /// Whether the basis product `e_a e_b` may have an `e_c` component (1-based).
    fn allows(&self, a: usize, b: usize, c: usize) -> bool {
        let covered = (a >= self.i && b >= self.j) || (b >= self.i && a >= self.j);
        !covered
            || match self.target {
                FlagTarget::Tail(k) => c >= k,
                FlagTarget::Head(k) => c <= k,
            }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClosedSetSpec {
    pub n: usize,
    pub conditions: Vec<FlagCondition>,
}

impl ClosedSetSpec {
    /// Standard-flag triples `(i, j, k)`: `λ(V_i, V_j) ⊆ V_k`.
    pub fn flags(n: usize, triples: &[(usize, usize, usize)]) -> Result<Self, DegenerationError> {
        let conditions = triples
            .iter()
            .map(|&(i, j, k)| {
                if i == 0 || j == 0 || i > n || j > n || k == 0 || k > n + 1 {
                    return Err(DegenerationError::BadTriple(i, j, k));
                }
                Ok(FlagCondition { i, j, target: FlagTarget::Tail(k) })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { n, conditions })
    }

    pub fn triples(&self) -> Vec<(usize, usize, usize)> {
        self.conditions
            .iter()
            .filter_map(|c| match c.target {
                FlagTarget::Tail(k) => Some((c.i, c.j, k)),
                FlagTarget::Head(_) => None,
            })
            .collect()
    }

    fn allows(&self, a: usize, b: usize, c: usize) -> bool {
        self.conditions.iter().all(|cond| cond.allows(a, b, c))
    }

    /// A random structure satisfying every condition, entries in `[-3, 3]`.
    pub fn random_member(&self, rng: &mut impl Rng) -> StructureTensor {
        let n = self.n;
        let mut out = StructureTensor::zero(n);
        for (a, b) in (1..=n).tuple_combinations() {
            let v: Vec<Rational> = (1..=n)
                .map(|c| {
                    if self.allows(a, b, c) && rng.gen_bool(0.5) {
                        Rational::from_integer(rng.gen_range(-3i64..=3).into())
                    } else {
                        Rational::zero()
                    }
                })
                .collect();
            if v.iter().any(|x| !x.is_zero()) {
                out.add_product(a, b, &v).expect("valid indices");
            }
        }
        out
    }
}

impl fmt::Display for ClosedSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .conditions
            .iter()
            .map(|c| match c.target {
                FlagTarget::Tail(k) => format!("({},{},{k})", c.i, c.j),
                FlagTarget::Head(k) => format!("({},{},<e1..e{k}>)", c.i, c.j),
            })
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Whether `a` satisfies every condition of `spec` in the standard flag.
pub fn closed_set_member(a: &StructureTensor, spec: &ClosedSetSpec) -> bool {
    a.dim() == spec.n
        && a.nonzero_products().all(|((x, y), v)| {
            v.iter().enumerate().all(|(c, val)| val.is_zero() || spec.allows(x, y, c + 1))
        })
}

fn random_lower_triangular(n: usize, rng: &mut impl Rng) -> QMatrix {
    let mut g = QMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = if i == j {
                *[-2i64, -1, 1, 2].choose(rng).expect("nonempty")
            } else {
                rng.gen_range(-3i64..=3)
            };
            g.set(i, j, Rational::from_integer(v.into()));
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ProbeVerdict {
    Pass { samples: usize },
    Fail { member: String, g: Vec<Vec<String>>, image: String },
}

impl ProbeVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, Self::Pass { .. })
    }
}

fn matrix_strings(g: &QMatrix) -> Vec<Vec<String>> {
    g.to_rows().iter().map(|r| r.iter().map(ToString::to_string).collect()).collect()
}

/// Shared probe loop: sample `(member, g)` per index and check membership of
/// `g · member`; the first failing index wins.
fn probe(
    n: usize,
    samples: usize,
    seed: u64,
    sample: impl Fn(&mut rand_chacha::ChaCha8Rng) -> StructureTensor + Sync + Send,
    member: impl Fn(&StructureTensor) -> bool + Sync + Send,
) -> ProbeVerdict {
    let results = par::map_range(samples, |s| {
        let mut rng = par::trial_rng(seed, s as u64);
        let m = sample(&mut rng);
        if !member(&m) {
            return None;
        }
        let g = random_lower_triangular(n, &mut rng);
        let img = m.change_basis(&g).expect("lower triangular with nonzero diagonal");
        (!member(&img)).then(|| ProbeVerdict::Fail {
            member: m.table_string(),
            g: matrix_strings(&g),
            image: img.table_string(),
        })
    });
    results.into_iter().flatten().next().unwrap_or(ProbeVerdict::Pass { samples })
}

/// Sample random members of the set's linear locus and random lower
/// triangular `g`; report the first `g · λ` that leaves the set.
pub fn lower_triangular_invariance_probe(spec: &ClosedSetSpec, samples: usize, seed: u64) -> ProbeVerdict {
    probe(spec.n, samples, seed, |rng| spec.random_member(rng), |a| closed_set_member(a, spec))
}

// ---------------------------------------------------------------------------
// The bespoke seven-dimensional set R

/// Linear flag conditions of R.
pub const EX222_TRIPLES: [(usize, usize, usize); 7] =
    [(1, 7, 8), (2, 6, 8), (3, 5, 8), (1, 4, 7), (2, 3, 6), (1, 3, 5), (1, 1, 4)];

pub fn ex222_linear_spec() -> ClosedSetSpec {
    ClosedSetSpec::flags(7, &EX222_TRIPLES).expect("valid triples")
}

/// Membership in R: the linear flag conditions plus seven quadratic
/// relations among the surviving constants.
pub fn ex222_membership(a: &StructureTensor) -> Result<bool, DegenerationError> {
    if a.dim() != 7 {
        return Err(DegenerationError::DimensionMismatch { expected: 7, got: a.dim() });
    }
    if !closed_set_member(a, &ex222_linear_spec()) {
        return Ok(false);
    }
    let l = |i, j, k| a.constant(i, j, k);
    let quadratic = [
        &l(1, 2, 4) * &l(3, 4, 7) - &l(2, 3, 6) * &l(1, 6, 7),
        &l(1, 2, 4) * &l(3, 4, 7) + &l(1, 3, 5) * &l(2, 5, 7),
        &l(1, 2, 5) * &l(3, 4, 7) - &l(1, 3, 5) * &l(2, 4, 7),
        &l(1, 2, 5) * &l(2, 5, 7) + &l(1, 2, 4) * &l(2, 4, 7),
        &l(2, 3, 6) * &l(1, 5, 7) - &l(1, 3, 6) * &l(2, 5, 7),
        &l(1, 3, 6) * &l(1, 6, 7) + &l(1, 3, 5) * &l(1, 5, 7),
        &l(2, 3, 6) * &l(1, 4, 7) - &l(1, 3, 6) * &l(2, 4, 7) + &l(1, 2, 6) * &l(3, 4, 7),
    ];
    Ok(quadratic.iter().all(Zero::is_zero))
}

/// Constants entering the quadratic relations of R, 1-based.
const EX222_QUADRATIC_SUPPORT: [(usize, usize, usize); 12] = [
    (1, 2, 4), (3, 4, 7), (2, 3, 6), (1, 6, 7), (1, 3, 5), (2, 5, 7),
    (1, 2, 5), (2, 4, 7), (1, 5, 7), (1, 3, 6), (1, 4, 7), (1, 2, 6),
];

/// Probe lower-triangular stability of R. Samples alternate between random
/// images of `known` (a member) and random linear-locus members with the
/// quadratic support cleared.
pub fn ex222_invariance_probe(known: &StructureTensor, samples: usize, seed: u64) -> ProbeVerdict {
    let spec = ex222_linear_spec();
    let sample = |rng: &mut rand_chacha::ChaCha8Rng| {
        if rng.gen_bool(0.5) {
            let g = random_lower_triangular(7, rng);
            return known.change_basis(&g).expect("invertible");
        }
        let m = spec.random_member(rng);
        let mut out = StructureTensor::zero(7);
        for ((i, j), v) in m.nonzero_products() {
            let mut w = v.clone();
            for &(a, b, c) in &EX222_QUADRATIC_SUPPORT {
                if (a, b) == (i, j) {
                    w[c - 1] = Rational::zero();
                }
            }
            if w.iter().any(|x| !x.is_zero()) {
                out.add_product(i, j, &w).expect("valid");
            }
        }
        out
    };
    probe(7, samples, seed, sample, |a| ex222_membership(a).unwrap_or(false))
}

// ---------------------------------------------------------------------------
// Orbit sampling

/// Random element of `GL_n(Z)`-ish: even trials draw `w·U` (permutation
/// times upper unitriangular, which reaches every double coset of the lower
/// triangular group), odd trials draw dense integer matrices in `[-5, 5]`
/// resampled until invertible.
pub fn random_orbit_element(n: usize, seed: u64, trial: u64) -> QMatrix {
    let mut rng = par::trial_rng(seed, trial);
    if trial % 2 == 0 {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut g = QMatrix::zeros(n, n);
        for (i, &p) in perm.iter().enumerate() {
            for j in 0..n {
                // row p of w·U is row i of U
                let v = match j.cmp(&i) {
                    std::cmp::Ordering::Less => 0,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Greater => rng.gen_range(-2i64..=2),
                };
                g.set(p, j, Rational::from_integer(v.into()));
            }
        }
        g
    } else {
        loop {
            let rows: Vec<Vec<Rational>> = (0..n)
                .map(|_| (0..n).map(|_| Rational::from_integer(rng.gen_range(-5i64..=5).into())).collect())
                .collect();
            let g = QMatrix::from_rows(rows).expect("square");
            if !g.determinant().expect("square").is_zero() {
                return g;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OrbitVerdict {
    RefutationNotFound { trials: usize },
    Refuted { trial: usize, g: Vec<Vec<String>>, image: String },
}

/// Look for `g` with `member(g · b)`. Not finding one is evidence that the
/// orbit misses the set, never a proof.
pub fn randomized_orbit_refute(
    b: &StructureTensor,
    member: &(dyn Fn(&StructureTensor) -> bool + Sync),
    trials: usize,
    seed: u64,
) -> OrbitVerdict {
    let n = b.dim();
    let hits = par::map_range(trials, |t| {
        let g = random_orbit_element(n, seed, t as u64);
        let img = b.change_basis(&g).expect("invertible by construction");
        member(&img).then(|| OrbitVerdict::Refuted { trial: t, g: matrix_strings(&g), image: img.table_string() })
    });
    hits.into_iter().flatten().next().unwrap_or(OrbitVerdict::RefutationNotFound { trials })
}

// ---------------------------------------------------------------------------
// Non-degeneration witnesses

fn as_strings<S: serde::Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(ToString::to_string))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum WitnessKind {
    DimSquare,
    AnnDim,
    /// An element of the target whose rank sequence the source cannot reach;
    /// `exponent` is the first power where it exceeds the source maximum.
    IWDominance {
        #[serde(serialize_with = "as_strings")]
        element: Vec<Rational>,
        exponent: usize,
    },
    LieClosure,
    /// `source_basis` rows put the source into the set.
    ClosedSet { spec: ClosedSetSpec, #[serde(skip)] source_basis: QMatrix },
    BespokeR { #[serde(skip)] source_basis: QMatrix },
}

impl WitnessKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DimSquare => "DimSquare",
            Self::AnnDim => "AnnDim",
            Self::IWDominance { .. } => "IWDominance",
            Self::LieClosure => "LieClosure",
            Self::ClosedSet { .. } => "ClosedSet",
            Self::BespokeR { .. } => "BespokeR",
        }
    }

    /// Whether a passing check is a proof rather than failed falsification.
    pub fn is_proof_tier(&self) -> bool {
        !matches!(self, Self::ClosedSet { .. } | Self::BespokeR { .. })
    }
}

#[derive(Debug, Clone)]
pub struct NonDegenerationWitness {
    pub source: StructureTensor,
    pub target: StructureTensor,
    pub kind: WitnessKind,
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub trials: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { trials: 1000, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum WitnessVerdict {
    Proved { reason: String },
    RefutationNotFound { trials: usize, source_side: String },
    Refuted { reason: String },
    /// The claimed invariant comparison or source membership does not hold.
    InvariantFails { reason: String },
}

impl WitnessVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Proved { .. } => "proved",
            Self::RefutationNotFound { .. } => "refutation_not_found",
            Self::Refuted { .. } => "refuted",
            Self::InvariantFails { .. } => "invariant_fails",
        }
    }
}

fn orbit_side(
    w: &NonDegenerationWitness,
    source_basis: &QMatrix,
    member: &(dyn Fn(&StructureTensor) -> bool + Sync),
    budget: Budget,
) -> WitnessVerdict {
    let placed = match w.source.in_basis(source_basis) {
        Ok(p) => p,
        Err(e) => return WitnessVerdict::InvariantFails { reason: format!("source basis: {e}") },
    };
    if !member(&placed) {
        return WitnessVerdict::InvariantFails { reason: "source is not in the set in the stored basis".into() };
    }
    let side = format!("source in the set via basis, table {}", placed.table_string());
    match randomized_orbit_refute(&w.target, member, budget.trials, budget.seed) {
        OrbitVerdict::RefutationNotFound { trials } => WitnessVerdict::RefutationNotFound { trials, source_side: side },
        OrbitVerdict::Refuted { trial, image, .. } => {
            WitnessVerdict::Refuted { reason: format!("trial {trial}: target orbit meets the set at {image}") }
        }
    }
}

fn proved_if(ok: bool, reason: String) -> WitnessVerdict {
    if ok {
        WitnessVerdict::Proved { reason }
    } else {
        WitnessVerdict::InvariantFails { reason }
    }
}

pub fn verify_nondegeneration(w: &NonDegenerationWitness, budget: Budget) -> Result<WitnessVerdict, DegenerationError> {
    let (a, b) = (&w.source, &w.target);
    if a.dim() != b.dim() {
        return Err(DegenerationError::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(match &w.kind {
        WitnessKind::DimSquare => {
            let (da, db) = (a.square().dim(), b.square().dim());
            proved_if(da < db, format!("dim A^2 = {da}, dim B^2 = {db}"))
        }
        WitnessKind::AnnDim => {
            let (da, db) = (a.annihilator().dim(), b.annihilator().dim());
            proved_if(da > db, format!("dim Ann A = {da}, dim Ann B = {db}"))
        }
        WitnessKind::IWDominance { element, exponent } => {
            let src = iw_max(a, budget.seed, budget.trials.clamp(1, 64))?.sequence;
            let tgt: RankSequence = rank_sequence(b, element)?;
            let beaten = tgt.get(*exponent) > src.get(*exponent);
            proved_if(
                !dominates(&src, &tgt) && beaten,
                format!("max rank sequence of A {src}, target element gives {tgt} (power {exponent})"),
            )
        }
        WitnessKind::LieClosure => {
            let (ja, jb) = (a.is_jacobi(), b.is_jacobi());
            proved_if(ja && !jb, format!("A Lie: {ja}, B Lie: {jb}"))
        }
        WitnessKind::ClosedSet { spec, source_basis } => {
            if spec.n != a.dim() {
                return Err(DegenerationError::DimensionMismatch { expected: a.dim(), got: spec.n });
            }
            orbit_side(w, source_basis, &|x| closed_set_member(x, spec), budget)
        }
        WitnessKind::BespokeR { source_basis } => {
            if a.dim() != 7 {
                return Err(DegenerationError::DimensionMismatch { expected: 7, got: a.dim() });
            }
            orbit_side(w, source_basis, &|x| ex222_membership(x).unwrap_or(false), budget)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{instantiate, CatalogName};
    use crate::template;

    fn cat(s: &str, n: usize) -> StructureTensor {
        instantiate(&s.parse::<CatalogName>().unwrap(), n).unwrap()
    }

    fn basis(rows: &[&str], n: usize) -> ParameterizedBasis {
        let lines: Vec<String> = rows.iter().map(|s| s.to_string()).collect();
        ParameterizedBasis::parse(&lines, n, &template::vars(&[("n", n as i64)])).unwrap()
    }

    fn cert(src: StructureTensor, tgt: StructureTensor, e: ParameterizedBasis) -> DegenerationCertificate {
        DegenerationCertificate { source: src, target: tgt, basis: e, provenance: String::new() }
    }

    #[test]
    fn identity_and_scaling() {
        let n3 = cat("n3", 3);
        let nu = apply_parameterized_basis(&n3, &ParameterizedBasis::identity(3)).unwrap();
        assert_eq!(nu.limit().unwrap(), n3);
        let nu = apply_parameterized_basis(&n3, &basis(&["t*e1", "e2", "e3"], 3)).unwrap();
        assert_eq!(nu.constant(1, 2, 3), RationalFunction::t());
        assert!(nu.limit().unwrap().is_zero_algebra());
    }

    #[test]
    fn pole_is_reported() {
        let n3 = cat("n3", 3);
        let v = verify_degeneration(&cert(n3.clone(), n3, basis(&["(1/t)*e1", "e2", "e3"], 3)));
        assert!(matches!(v, DegenerationVerdict::Fail { reason: DegenerationFailure::Pole { i: 1, j: 2, k: 3, .. } }));
    }

    #[test]
    fn singular_rows_rejected() {
        let lines = vec!["e1".to_string(), "e1".to_string(), "e3".to_string()];
        assert_eq!(
            ParameterizedBasis::parse(&lines, 3, &template::vars(&[("n", 3)])),
            Err(DegenerationError::SingularFamily)
        );
    }

    #[test]
    fn t22_chain() {
        let e45 = cat("T22_e45", 7);
        let e34 = cat("T22_e34", 7);
        let e24 = cat("T22_e24", 7);
        let b1 = basis(&["e1", "e2", "e3+e4", "e5", "t*e4", "e{i} for i in 6..n"], 7);
        assert_eq!(verify_degeneration(&cert(e45, e34.clone(), b1)), DegenerationVerdict::Pass);
        let b2 = basis(&["e1", "e2+e3", "t*e3", "t*e4", "e{i} for i in 5..n-2", "e{n-1}+e{n}", "t*e{n}"], 7);
        assert_eq!(verify_degeneration(&cert(e34.clone(), e24, b2.clone())), DegenerationVerdict::Pass);
        // same basis does not land on the wrong target
        let wrong = verify_degeneration(&cert(e34, cat("T(2,2)", 7), b2));
        assert!(matches!(wrong, DegenerationVerdict::Fail { reason: DegenerationFailure::Mismatch { .. } }));
    }

    #[test]
    fn closed_set_membership() {
        let s = ClosedSetSpec::flags(5, &[(1, 1, 4)]).unwrap();
        assert!(closed_set_member(&StructureTensor::zero(5), &s));
        assert!(closed_set_member(&cat("T(2,2)", 5), &s));
        let s = ClosedSetSpec::flags(6, &[(1, 1, 5)]).unwrap();
        assert!(!closed_set_member(&cat("T22_e23", 6), &s));
        assert!(ClosedSetSpec::flags(4, &[(1, 1, 6)]).is_err());
    }

    #[test]
    fn invariance_probe() {
        let zero = ClosedSetSpec::flags(5, &[(1, 1, 6)]).unwrap();
        assert!(lower_triangular_invariance_probe(&zero, 50, 1).passed());
        let s = ClosedSetSpec::flags(7, &[(1, 3, 7), (3, 3, 8), (2, 2, 5)]).unwrap();
        assert!(lower_triangular_invariance_probe(&s, 100, 2).passed());
        let broken = ClosedSetSpec { n: 4, conditions: vec![FlagCondition { i: 1, j: 1, target: FlagTarget::Head(1) }] };
        assert!(!lower_triangular_invariance_probe(&broken, 100, 3).passed());
    }

    fn seven_special_in_r() -> StructureTensor {
        let rows = [1usize, 2, 3, 5, 6, 4, 7];
        let mut b = QMatrix::zeros(7, 7);
        for (i, &k) in rows.iter().enumerate() {
            b.set(i, k - 1, Rational::one());
        }
        cat("7special", 7).in_basis(&b).unwrap()
    }

    #[test]
    fn set_r() {
        assert!(ex222_membership(&seven_special_in_r()).unwrap());
        assert!(!ex222_membership(&cat("7special", 7)).unwrap());
        assert!(ex222_membership(&StructureTensor::zero(7)).unwrap());
        assert!(!ex222_membership(&cat("T22_e45", 7)).unwrap());
        assert!(ex222_membership(&StructureTensor::zero(6)).is_err());
        assert!(ex222_invariance_probe(&seven_special_in_r(), 100, 5).passed());
    }

    #[test]
    fn orbit_search() {
        let member = |x: &StructureTensor| ex222_membership(x).unwrap_or(false);
        let v = randomized_orbit_refute(&cat("T22_e45", 7), &member, 200, 42);
        assert_eq!(v, OrbitVerdict::RefutationNotFound { trials: 200 });
        // n3 moved so that its square lands in V_2
        let spec = ClosedSetSpec::flags(3, &[(1, 1, 2)]).unwrap();
        let in_spec = |x: &StructureTensor| closed_set_member(x, &spec);
        let v = randomized_orbit_refute(&cat("n3", 3).permute(&[2, 1, 0]), &in_spec, 100, 42);
        assert!(matches!(v, OrbitVerdict::Refuted { .. }), "{v:?}");
    }

    #[test]
    fn invariant_witnesses() {
        let w = |s: &str, t: &str, n, kind| NonDegenerationWitness {
            source: cat(s, n),
            target: cat(t, n),
            kind,
            provenance: String::new(),
        };
        let b = Budget::default();
        let v = verify_nondegeneration(&w("T22_e24", "T22_e23", 6, WitnessKind::DimSquare), b).unwrap();
        assert!(matches!(v, WitnessVerdict::Proved { .. }));
        let v = verify_nondegeneration(&w("T22_e23", "T22_e24", 6, WitnessKind::AnnDim), b).unwrap();
        assert!(matches!(v, WitnessVerdict::Proved { .. }));
        let v = verify_nondegeneration(&w("T32_e23", "T3_e34", 6, WitnessKind::LieClosure), b).unwrap();
        assert!(matches!(v, WitnessVerdict::Proved { .. }));
        // reversed comparison is not a proof
        let v = verify_nondegeneration(&w("T22_e23", "T22_e24", 6, WitnessKind::DimSquare), b).unwrap();
        assert!(matches!(v, WitnessVerdict::InvariantFails { .. }));
    }
}
