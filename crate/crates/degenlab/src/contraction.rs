//! Inönü–Wigner contractions and rank sequences `r_m(a) = rank (L_a)^m`.
//!
//! [`iw_max`] finds an element whose rank sequence dominates all others by
//! seeded sampling; the Jordan type of `L_c` on `A/⟨c⟩` names the maximal
//! one-dimensional contraction `T^λ`.

use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::StructureTensor;
use crate::exactnum::Rational;
use crate::linalg::{unit, Partition, Subspace};
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractionError {
    #[error("span of e1..e{0} is not a subalgebra")]
    NotASubalgebra(usize),
    #[error("subalgebra size {m} must satisfy 1 <= m < {n}")]
    BadSize { m: usize, n: usize },
    #[error("L_a is not nilpotent for a = {0:?}")]
    NotEngelAt(Vec<String>),
    #[error("sampled maximal rank sequences stay incomparable: {0} vs {1}")]
    IncomparableMaxima(RankSequence, RankSequence),
    #[error("vector length {got} differs from dimension {dim}")]
    DimensionMismatch { dim: usize, got: usize },
}

/// `r_1 ≥ r_2 ≥ … > 0`, truncated before the first zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankSequence(pub Vec<usize>);

impl RankSequence {
    pub fn get(&self, m: usize) -> usize {
        self.0.get(m.wrapping_sub(1)).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for RankSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
    }
}

/// `p_m ≥ q_m` for every m.
pub fn dominates(p: &RankSequence, q: &RankSequence) -> bool {
    let len = p.0.len().max(q.0.len());
    (1..=len).all(|m| p.get(m) >= q.get(m))
}

/// Contract along `⟨e_1..e_m⟩` with basis `(e_1,…,e_m, t e_{m+1},…, t e_n)`.
pub fn iw_contract(a: &StructureTensor, m: usize) -> Result<StructureTensor, ContractionError> {
    let n = a.dim();
    if m == 0 || m >= n {
        return Err(ContractionError::BadSize { m, n });
    }
    let mut out = StructureTensor::zero(n);
    for ((i, j), v) in a.nonzero_products() {
        match (i <= m, j <= m) {
            (true, true) => {
                if v[m..].iter().any(|x| !x.is_zero()) {
                    return Err(ContractionError::NotASubalgebra(m));
                }
                out.add_product(i, j, v).expect("valid indices");
            }
            // head·tail keeps its tail part; the head part carries a factor t
            (true, false) | (false, true) => {
                let mut w = v.clone();
                w[..m].iter_mut().for_each(|x| *x = Rational::zero());
                if w.iter().any(|x| !x.is_zero()) {
                    out.add_product(i, j, &w).expect("valid indices");
                }
            }
            (false, false) => {}
        }
    }
    Ok(out)
}

fn fmt_vec(a: &[Rational]) -> Vec<String> {
    a.iter().map(ToString::to_string).collect()
}

/// Ranks of `(L_a)^k`, k = 1.. until zero.
pub fn rank_sequence(alg: &StructureTensor, a: &[Rational]) -> Result<RankSequence, ContractionError> {
    let n = alg.dim();
    if a.len() != n {
        return Err(ContractionError::DimensionMismatch { dim: n, got: a.len() });
    }
    let l = alg.left_mult_matrix(a).expect("length checked");
    let mut p = l.clone();
    let mut ranks = Vec::new();
    for _ in 0..n {
        let r = p.rank();
        if r == 0 {
            return Ok(RankSequence(ranks));
        }
        ranks.push(r);
        p = l.mul(&p).expect("square");
    }
    Err(ContractionError::NotEngelAt(fmt_vec(a)))
}

/// Jordan type of the operator induced by `L_a` on `A/⟨a⟩`.
pub fn quotient_partition(alg: &StructureTensor, a: &[Rational]) -> Result<Partition, ContractionError> {
    let n = alg.dim();
    let l = alg.left_mult_matrix(a).map_err(|_| ContractionError::DimensionMismatch { dim: n, got: a.len() })?;
    let av = Subspace::span(n, vec![a.to_vec()]);
    let q = av.dim();
    let mut ranks = Vec::new();
    let mut p = l.clone();
    for _ in 0..n {
        let img = Subspace::span(n, p.transpose().to_rows()).sum(&av).expect("ambient");
        let r = img.dim() - q;
        if r == 0 {
            return Ok(Partition::from_ranks(n - q, &ranks));
        }
        ranks.push(r);
        p = l.mul(&p).expect("square");
    }
    Err(ContractionError::NotEngelAt(fmt_vec(a)))
}

/// Result of the maximal one-dimensional contraction search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IwMax {
    /// Jordan type on `A/⟨c⟩`, ones included.
    pub partition: Partition,
    pub sequence: RankSequence,
    pub witness: Vec<String>,
}

impl IwMax {
    /// Parts ≥ 2: the `λ` in `T^λ`.
    pub fn label(&self) -> Partition {
        self.partition.nontrivial()
    }
}

const RANDOM_CANDIDATES: u64 = 64;
const PERTURBATIONS: u64 = 20;

fn random_vector(n: usize, seed: u64, stream: u64) -> Vec<Rational> {
    let mut rng = par::trial_rng(seed, stream);
    (0..n).map(|_| Rational::from_integer(rng.gen_range(-9i64..=9).into())).collect()
}

fn candidate_pool(n: usize, seed: u64) -> Vec<Vec<Rational>> {
    let mut pool: Vec<Vec<Rational>> = (0..n).map(|i| unit(n, i)).collect();
    for i in 0..n {
        for j in i + 1..n {
            let mut v = unit(n, i);
            v[j] = Rational::one();
            pool.push(v);
        }
    }
    pool.extend((0..RANDOM_CANDIDATES).map(|k| random_vector(n, seed, k)));
    pool.retain(|v| v.iter().any(|x| !x.is_zero()));
    pool
}

/// Dominant rank sequence over a seeded candidate pool.
///
/// When two sampled maxima are incomparable, `c + αb` is tried for random
/// α, `trials` rounds at most.
pub fn iw_max(alg: &StructureTensor, seed: u64, trials: usize) -> Result<IwMax, ContractionError> {
    let n = alg.dim();
    if n == 0 {
        return Ok(IwMax { partition: Partition::new(vec![]), sequence: RankSequence(vec![]), witness: vec![] });
    }
    let mut pool = candidate_pool(n, seed);
    let seqs: Vec<Result<RankSequence, ContractionError>> = par::map_slice(&pool, |v| rank_sequence(alg, v));
    let mut seqs: Vec<RankSequence> = seqs.into_iter().collect::<Result<_, _>>()?;

    for round in 0..trials.max(1) as u64 {
        let best = maximal_indices(&seqs);
        if let [b] = best[..] {
            let c = &pool[b];
            return Ok(IwMax {
                partition: quotient_partition(alg, c)?,
                sequence: seqs[b].clone(),
                witness: fmt_vec(c),
            });
        }
        let (bi, ci) = (best[0], best[1]);
        let stream = RANDOM_CANDIDATES + round * PERTURBATIONS;
        let alphas: Vec<u64> = (0..PERTURBATIONS).collect();
        let found: Vec<_> = par::map_slice(&alphas, |&k| {
            let mut rng = par::trial_rng(seed, stream + k);
            let alpha = Rational::new(rng.gen_range(-50i64..=50).into(), rng.gen_range(1i64..=7).into());
            let v: Vec<Rational> = pool[ci].iter().zip(&pool[bi]).map(|(c, b)| c + &alpha * b).collect();
            rank_sequence(alg, &v).map(|s| (v, s))
        });
        for r in found {
            let (v, s) = r?;
            pool.push(v);
            seqs.push(s);
        }
    }
    let best = maximal_indices(&seqs);
    Err(ContractionError::IncomparableMaxima(seqs[best[0]].clone(), seqs[best[1]].clone()))
}

/// Indices of the first occurrence of each distinct maximal sequence.
fn maximal_indices(seqs: &[RankSequence]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for (i, s) in seqs.iter().enumerate() {
        let dominated = seqs.iter().any(|o| o != s && dominates(o, s));
        if !dominated && !out.iter().any(|&j| &seqs[j] == s) {
            out.push(i);
        }
    }
    out
}

/// Convenience: the rank sequence of a vector with integer entries.
pub fn rank_sequence_int(alg: &StructureTensor, a: &[i64]) -> Result<RankSequence, ContractionError> {
    let v: Vec<Rational> = a.iter().map(|&x| Rational::from_integer(x.into())).collect();
    rank_sequence(alg, &v)
}
