//! The claim ledger: degeneration certificates, non-degeneration witnesses,
//! composed edges and level chains, together with the driver that checks
//! all of them and renders a report.
//!
//! Ledger entries are templates in `n` (and optionally `m`); loading
//! instantiates every entry over its dimension set. Each concrete instance is
//! an independent claim, checked in parallel and reported in ledger order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::StructureTensor;
use crate::catalog::{self, level_lookup, CatalogName, LevelValue, MAX_TEST_DIM};
use crate::contraction::{dominates, iw_max};
use crate::degeneration::{
    ex222_invariance_probe, lower_triangular_invariance_probe, verify_degeneration, verify_nondegeneration,
    Budget, ClosedSetSpec, DegenerationCertificate, DegenerationVerdict, NonDegenerationWitness,
    ParameterizedBasis, WitnessKind, WitnessVerdict,
};
use crate::exactnum::{parse_linear_combination, Rational};
use crate::linalg::QMatrix;
use crate::par;
use crate::template::{self, eval_index, substitute, Vars};

/// The ledger shipped with the crate.
pub const SHIPPED_LEDGER: &str = include_str!("../../../data/ledger.json");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("ledger does not parse: {0}")]
    Parse(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("inconsistent ledger: both a certificate and a witness for {from} -> {to} at n = {n}")]
    InconsistentLedger { from: String, to: String, n: usize },
    #[error("ledger entry {entry}: {msg}")]
    BadEntry { entry: String, msg: String },
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LedgerFile {
    #[serde(default)]
    pub algebras: BTreeMap<String, InlineAlgebra>,
    #[serde(default)]
    pub certificates: Vec<CertEntry>,
    #[serde(default)]
    pub witnesses: Vec<WitnessEntry>,
    #[serde(default)]
    pub composed: Vec<ComposedEntry>,
    #[serde(default)]
    pub chains: Vec<ChainEntry>,
}

/// An algebra defined in the ledger itself (proof-internal structures that
/// are not catalog members).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InlineAlgebra {
    pub min_dim: String,
    #[serde(default)]
    pub max_dim: Option<String>,
    pub table: Vec<String>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertEntry {
    pub id: String,
    pub source: String,
    pub target: String,
    pub basis: Vec<String>,
    #[serde(default)]
    pub params: Vec<usize>,
    #[serde(default)]
    pub min_dim: Option<String>,
    #[serde(default)]
    pub max_dim: Option<String>,
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    /// False for isomorphisms recorded as certificates.
    #[serde(default = "yes")]
    pub nontrivial: bool,
    #[serde(default)]
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessKindTag {
    DimSquare,
    AnnDim,
    IWDominance,
    LieClosure,
    ClosedSet,
    BespokeR,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub source: String,
    pub target: String,
    pub kind: WitnessKindTag,
    /// `"i j k"` of the flag subscript, for DimSquare/AnnDim.
    #[serde(default)]
    pub subscript: Option<String>,
    #[serde(default)]
    pub flags: Vec<String>,
    /// Rows putting the source into the closed set; identity if absent.
    #[serde(default)]
    pub basis: Option<Vec<String>>,
    #[serde(default)]
    pub element: Option<String>,
    #[serde(default)]
    pub exponent: Option<usize>,
    #[serde(default)]
    pub params: Vec<usize>,
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    /// The source claims it, but only by an argument left unchecked there.
    #[serde(default)]
    pub asserted: bool,
    #[serde(default)]
    pub provenance: String,
}

/// `A -> C` obtained by chaining certificates; `via` entries are `id` or
/// `id:m`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComposedEntry {
    pub dim: usize,
    pub via: Vec<String>,
    #[serde(default)]
    pub provenance: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainEntry {
    pub algebra: String,
    pub dim: usize,
    pub edges: Vec<String>,
}

// ---------------------------------------------------------------------------
// Loaded ledger

#[derive(Debug, Clone)]
enum AlgebraRef {
    Catalog(CatalogName),
    Inline(String, InlineAlgebra),
}

impl AlgebraRef {
    fn name(&self) -> String {
        match self {
            AlgebraRef::Catalog(c) => c.to_string(),
            AlgebraRef::Inline(k, _) => k.clone(),
        }
    }

    fn range(&self) -> Result<(usize, Option<usize>), String> {
        match self {
            AlgebraRef::Catalog(c) => catalog::dim_range(c).map_err(|e| e.to_string()),
            AlgebraRef::Inline(_, a) => {
                let v = Vars::new();
                let lo = eval_index(&a.min_dim, &v).map_err(|e| e.to_string())?.max(1) as usize;
                let hi = a.max_dim.as_ref().map(|h| eval_index(h, &v)).transpose().map_err(|e| e.to_string())?;
                Ok((lo, hi.map(|h| h as usize)))
            }
        }
    }

    fn instantiate(&self, n: usize) -> Result<StructureTensor, String> {
        match self {
            AlgebraRef::Catalog(c) => catalog::instantiate(c, n).map_err(|e| e.to_string()),
            AlgebraRef::Inline(_, a) => {
                let (lo, hi) = self.range()?;
                if n < lo || hi.is_some_and(|h| n > h) {
                    return Err(format!("{} is not defined at n = {n}", self.name()));
                }
                catalog::table_from_template(&a.table, n, &template::vars(&[("n", n as i64)]))
                    .map_err(|e| e.to_string())
            }
        }
    }

    fn level(&self, n: usize) -> Option<LevelValue> {
        match self {
            AlgebraRef::Catalog(c) => level_lookup(c, n).ok().map(|r| r.level),
            AlgebraRef::Inline(..) => None,
        }
    }
}

/// A concrete algebra: display name plus table at one dimension.
#[derive(Debug, Clone)]
pub struct Named {
    pub name: String,
    pub tensor: StructureTensor,
    level: Option<LevelValue>,
}

#[derive(Debug, Clone)]
pub struct CertClaim {
    pub entry: usize,
    pub id: String,
    pub m: Option<usize>,
    pub n: usize,
    pub source: Named,
    pub target: Named,
    pub basis_rows: Vec<String>,
    pub vars: Vars,
    pub nontrivial: bool,
    pub provenance: String,
}

impl CertClaim {
    pub fn certificate(&self) -> Result<DegenerationCertificate, String> {
        let basis = ParameterizedBasis::parse(&self.basis_rows, self.n, &self.vars).map_err(|e| e.to_string())?;
        Ok(DegenerationCertificate {
            source: self.source.tensor.clone(),
            target: self.target.tensor.clone(),
            basis,
            provenance: self.provenance.clone(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct WitnessClaim {
    pub entry: usize,
    pub m: Option<usize>,
    pub n: usize,
    pub source: Named,
    pub target: Named,
    pub raw: WitnessEntry,
    pub vars: Vars,
}

fn triple(src: &str, vars: &Vars) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = src.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(format!("expected `i j k`, got {src:?}"));
    }
    let v = parts
        .iter()
        .map(|p| eval_index(p, vars).map_err(|e| e.to_string()).map(|x| x.max(0) as usize))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((v[0], v[1], v[2]))
}

impl WitnessClaim {
    fn constant_basis(&self) -> Result<QMatrix, String> {
        match &self.raw.basis {
            None => Ok(QMatrix::identity(self.n)),
            Some(rows) => ParameterizedBasis::parse(rows, self.n, &self.vars)
                .map_err(|e| e.to_string())?
                .at_zero()
                .ok_or_else(|| "witness basis must be constant".to_string()),
        }
    }

    /// The closed set of a ClosedSet witness at this dimension.
    pub fn closed_set(&self) -> Option<Result<ClosedSetSpec, String>> {
        (self.raw.kind == WitnessKindTag::ClosedSet).then(|| {
            let triples = self.raw.flags.iter().map(|f| triple(f, &self.vars)).collect::<Result<Vec<_>, _>>()?;
            ClosedSetSpec::flags(self.n, &triples).map_err(|e| e.to_string())
        })
    }

    pub fn subscript(&self) -> Option<Result<(usize, usize, usize), String>> {
        self.raw.subscript.as_ref().map(|s| triple(s, &self.vars))
    }

    pub fn witness(&self) -> Result<NonDegenerationWitness, String> {
        let kind = match self.raw.kind {
            WitnessKindTag::DimSquare => WitnessKind::DimSquare,
            WitnessKindTag::AnnDim => WitnessKind::AnnDim,
            WitnessKindTag::LieClosure => WitnessKind::LieClosure,
            WitnessKindTag::IWDominance => {
                let src = self.raw.element.as_deref().ok_or("IWDominance needs an element")?;
                let idx = |s: &str| eval_index(s, &self.vars).ok();
                let v = parse_linear_combination(src, self.n, &idx).map_err(|e| e.to_string())?;
                let element = v
                    .iter()
                    .map(|c| c.as_constant().ok_or_else(|| "element must be constant".to_string()))
                    .collect::<Result<Vec<Rational>, _>>()?;
                WitnessKind::IWDominance { element, exponent: self.raw.exponent.unwrap_or(1) }
            }
            WitnessKindTag::ClosedSet => WitnessKind::ClosedSet {
                spec: self.closed_set().expect("ClosedSet")?,
                source_basis: self.constant_basis()?,
            },
            WitnessKindTag::BespokeR => WitnessKind::BespokeR { source_basis: self.constant_basis()? },
        };
        Ok(NonDegenerationWitness {
            source: self.source.tensor.clone(),
            target: self.target.tensor.clone(),
            kind,
            provenance: self.raw.provenance.clone(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ComposedClaim {
    pub entry: usize,
    pub n: usize,
    /// Indices into `ClaimLedger::certificates`.
    pub via: Vec<usize>,
    pub provenance: String,
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub entry: usize,
    pub algebra: Named,
    pub n: usize,
    /// Indices into `ClaimLedger::certificates`.
    pub edges: Vec<usize>,
}

/// A ledger instantiated over its dimension matrix.
#[derive(Debug, Clone, Default)]
pub struct ClaimLedger {
    pub certificates: Vec<CertClaim>,
    pub witnesses: Vec<WitnessClaim>,
    pub composed: Vec<ComposedClaim>,
    pub chains: Vec<Chain>,
}

struct Resolver<'a> {
    inline: &'a BTreeMap<String, InlineAlgebra>,
}

impl Resolver<'_> {
    fn resolve(&self, template: &str, m: Option<usize>, entry: &str) -> Result<AlgebraRef, LedgerError> {
        let bad = |msg: String| LedgerError::BadEntry { entry: entry.to_string(), msg };
        let mut vars = Vars::new();
        if let Some(m) = m {
            vars.insert("m".into(), m as i64);
        }
        let name = substitute(template, &vars).map_err(|e| bad(e.to_string()))?;
        if let Some(a) = self.inline.get(&name) {
            return Ok(AlgebraRef::Inline(name, a.clone()));
        }
        name.parse::<CatalogName>().map(AlgebraRef::Catalog).map_err(|e| bad(e.to_string()))
    }
}

fn named(a: &AlgebraRef, n: usize, entry: &str) -> Result<Named, LedgerError> {
    let tensor = a.instantiate(n).map_err(|msg| LedgerError::BadEntry { entry: entry.to_string(), msg })?;
    Ok(Named { name: a.name(), tensor, level: a.level(n) })
}

fn entry_vars(m: Option<usize>) -> Vars {
    let mut v = Vars::new();
    if let Some(m) = m {
        v.insert("m".into(), m as i64);
    }
    v
}

/// Legal dimensions shared by both endpoints and the entry's own bounds.
fn legal_range(
    a: &AlgebraRef,
    b: &AlgebraRef,
    min: Option<&String>,
    max: Option<&String>,
    m: Option<usize>,
    entry: &str,
) -> Result<(usize, usize), LedgerError> {
    let bad = |msg: String| LedgerError::BadEntry { entry: entry.to_string(), msg };
    let (alo, ahi) = a.range().map_err(bad)?;
    let (blo, bhi) = b.range().map_err(bad)?;
    let v = entry_vars(m);
    let elo = min.map(|e| eval_index(e, &v)).transpose().map_err(|e| bad(e.to_string()))?;
    let ehi = max.map(|e| eval_index(e, &v)).transpose().map_err(|e| bad(e.to_string()))?;
    let lo = alo.max(blo).max(elo.unwrap_or(0).max(0) as usize);
    let hi = [ahi, bhi, ehi.map(|h| h.max(0) as usize)].into_iter().flatten().fold(MAX_TEST_DIM, usize::min);
    Ok((lo, hi))
}

fn default_dims(lo: usize, hi: usize) -> BTreeSet<usize> {
    [lo, lo + 1].into_iter().filter(|&n| n <= hi).collect()
}

fn parse_edge(s: &str) -> (String, Option<usize>) {
    match s.split_once(':') {
        Some((id, m)) => (id.trim().to_string(), m.trim().parse().ok()),
        None => (s.trim().to_string(), None),
    }
}

pub fn parse_ledger(src: &str) -> Result<ClaimLedger, LedgerError> {
    let file: LedgerFile = serde_json::from_str(src).map_err(|e| LedgerError::Parse(e.to_string()))?;
    build_ledger(&file)
}

pub fn load_ledger(path: &Path) -> Result<ClaimLedger, LedgerError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| LedgerError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    parse_ledger(&src)
}

/// The shipped ledger.
pub fn shipped_ledger() -> Result<ClaimLedger, LedgerError> {
    parse_ledger(SHIPPED_LEDGER)
}

pub fn build_ledger(file: &LedgerFile) -> Result<ClaimLedger, LedgerError> {
    let res = Resolver { inline: &file.algebras };
    let ids: BTreeMap<&str, usize> = file.certificates.iter().enumerate().map(|(k, c)| (c.id.as_str(), k)).collect();
    if ids.len() != file.certificates.len() {
        return Err(LedgerError::Parse("duplicate certificate id".into()));
    }

    // Extra dimensions requested by chains and composed edges, per (entry, m).
    let mut wanted: BTreeMap<(usize, Option<usize>), BTreeSet<usize>> = BTreeMap::new();
    let mut lookup_edge = |e: &str, n: usize, owner: &str| -> Result<(usize, Option<usize>), LedgerError> {
        let (id, m) = parse_edge(e);
        let k = *ids.get(id.as_str()).ok_or_else(|| LedgerError::BadEntry {
            entry: owner.to_string(),
            msg: format!("unknown certificate {id}"),
        })?;
        if !file.certificates[k].params.is_empty() && m.is_none_or(|m| !file.certificates[k].params.contains(&m)) {
            return Err(LedgerError::BadEntry { entry: owner.to_string(), msg: format!("{e}: parameter missing or not listed") });
        }
        wanted.entry((k, m)).or_default().insert(n);
        Ok((k, m))
    };
    let mut chain_edges = Vec::new();
    for (ci, c) in file.chains.iter().enumerate() {
        let owner = format!("chain {} at n = {}", c.algebra, c.dim);
        let edges = c.edges.iter().map(|e| lookup_edge(e, c.dim, &owner)).collect::<Result<Vec<_>, _>>()?;
        chain_edges.push((ci, edges));
    }
    let mut composed_edges = Vec::new();
    for (ci, c) in file.composed.iter().enumerate() {
        let owner = format!("composed #{ci}");
        let edges = c.via.iter().map(|e| lookup_edge(e, c.dim, &owner)).collect::<Result<Vec<_>, _>>()?;
        composed_edges.push((ci, edges));
    }

    let mut ledger = ClaimLedger::default();
    let mut cert_index: BTreeMap<(usize, Option<usize>, usize), usize> = BTreeMap::new();
    for (k, c) in file.certificates.iter().enumerate() {
        let ms: Vec<Option<usize>> = if c.params.is_empty() { vec![None] } else { c.params.iter().map(|&m| Some(m)).collect() };
        for m in ms {
            let src = res.resolve(&c.source, m, &c.id)?;
            let tgt = res.resolve(&c.target, m, &c.id)?;
            let (lo, hi) = legal_range(&src, &tgt, c.min_dim.as_ref(), c.max_dim.as_ref(), m, &c.id)?;
            let mut dims = match &c.dims {
                Some(d) => d.iter().copied().collect(),
                None => default_dims(lo, hi),
            };
            if let Some(extra) = wanted.get(&(k, m)) {
                dims.extend(extra);
            }
            for n in dims {
                if n < lo || n > hi {
                    return Err(LedgerError::BadEntry { entry: c.id.clone(), msg: format!("n = {n} outside {lo}..{hi}") });
                }
                let mut vars = template::vars(&[("n", n as i64)]);
                vars.extend(entry_vars(m));
                cert_index.insert((k, m, n), ledger.certificates.len());
                ledger.certificates.push(CertClaim {
                    entry: k,
                    id: c.id.clone(),
                    m,
                    n,
                    source: named(&src, n, &c.id)?,
                    target: named(&tgt, n, &c.id)?,
                    basis_rows: c.basis.clone(),
                    vars,
                    nontrivial: c.nontrivial,
                    provenance: c.provenance.clone(),
                });
            }
        }
    }

    for (k, w) in file.witnesses.iter().enumerate() {
        let label = format!("witness #{k} ({} -/-> {})", w.source, w.target);
        let ms: Vec<Option<usize>> = if w.params.is_empty() { vec![None] } else { w.params.iter().map(|&m| Some(m)).collect() };
        for m in ms {
            let src = res.resolve(&w.source, m, &label)?;
            let tgt = res.resolve(&w.target, m, &label)?;
            let (lo, hi) = legal_range(&src, &tgt, None, None, m, &label)?;
            let dims: BTreeSet<usize> = match &w.dims {
                Some(d) => d.iter().copied().collect(),
                None => default_dims(lo, hi),
            };
            if dims.is_empty() {
                return Err(LedgerError::BadEntry { entry: label, msg: "no legal dimension".into() });
            }
            for n in dims {
                let mut vars = template::vars(&[("n", n as i64)]);
                vars.extend(entry_vars(m));
                ledger.witnesses.push(WitnessClaim {
                    entry: k,
                    m,
                    n,
                    source: named(&src, n, &label)?,
                    target: named(&tgt, n, &label)?,
                    raw: w.clone(),
                    vars,
                });
            }
        }
    }

    let claimed: BTreeSet<(&str, &str, usize)> =
        ledger.certificates.iter().map(|c| (c.source.name.as_str(), c.target.name.as_str(), c.n)).collect();
    for w in &ledger.witnesses {
        if claimed.contains(&(w.source.name.as_str(), w.target.name.as_str(), w.n)) {
            return Err(LedgerError::InconsistentLedger {
                from: w.source.name.clone(),
                to: w.target.name.clone(),
                n: w.n,
            });
        }
    }

    let to_claims = |edges: &[(usize, Option<usize>)], n: usize| -> Vec<usize> {
        edges.iter().map(|&(k, m)| cert_index[&(k, m, n)]).collect()
    };
    for (ci, edges) in composed_edges {
        let c = &file.composed[ci];
        ledger.composed.push(ComposedClaim { entry: ci, n: c.dim, via: to_claims(&edges, c.dim), provenance: c.provenance.clone() });
    }
    for (ci, edges) in chain_edges {
        let c = &file.chains[ci];
        let owner = format!("chain {}", c.algebra);
        let a = res.resolve(&c.algebra, None, &owner)?;
        ledger.chains.push(Chain { entry: ci, algebra: named(&a, c.dim, &owner)?, n: c.dim, edges: to_claims(&edges, c.dim) });
    }
    Ok(ledger)
}

// ---------------------------------------------------------------------------
// Report

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Status {
    #[serde(rename = "PROVED")]
    Proved,
    #[serde(rename = "VERIFIED-CERTIFICATE")]
    VerifiedCertificate,
    #[serde(rename = "FALSIFICATION-ONLY")]
    FalsificationOnly,
    #[serde(rename = "ASSERTED")]
    Asserted,
    #[serde(rename = "COMPOSED")]
    Composed,
    #[serde(rename = "FAIL")]
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Proved => "PROVED",
            Status::VerifiedCertificate => "VERIFIED-CERTIFICATE",
            Status::FalsificationOnly => "FALSIFICATION-ONLY",
            Status::Asserted => "ASSERTED",
            Status::Composed => "COMPOSED",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    Certificate,
    Witness,
    Composed,
}

/// Invariants that every passing certificate must respect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Audit {
    pub square: [usize; 2],
    pub annihilator: [usize; 2],
    pub iw_max: [String; 2],
    pub derivations: [usize; 2],
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimResult {
    pub kind: ClaimKind,
    pub entry: String,
    pub source: String,
    pub target: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub n: usize,
    pub status: Status,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<Audit>,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainResult {
    pub algebra: String,
    pub n: usize,
    pub expected_level: String,
    pub length: usize,
    pub steps: Vec<String>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeResult {
    pub set: String,
    pub n: usize,
    pub samples: usize,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Expected {
    pub certificates: usize,
    pub proof_witnesses: usize,
    pub falsification_witnesses: usize,
    pub asserted_witnesses: usize,
    pub composed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub counts: BTreeMap<String, usize>,
    pub expected: Expected,
    pub chains_passed: usize,
    pub chains_total: usize,
    pub probes_passed: usize,
    pub probes_total: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    pub claims: Vec<ClaimResult>,
    pub chains: Vec<ChainResult>,
    pub probes: Vec<ProbeResult>,
    pub summary: Summary,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    /// Orbit samples per falsification-tier witness.
    pub trials: usize,
    /// Restrict to these dimensions.
    pub dims: Option<BTreeSet<usize>>,
    pub probe_samples: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: 42, trials: 200, dims: None, probe_samples: 100 }
    }
}

fn claim_seed(seed: u64, idx: usize) -> u64 {
    seed ^ (idx as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

const IW_TRIALS: usize = 32;

fn audit(c: &CertClaim, seed: u64) -> Result<Audit, String> {
    let (a, b) = (&c.source.tensor, &c.target.tensor);
    let square = [a.square().dim(), b.square().dim()];
    let annihilator = [a.annihilator().dim(), b.annihilator().dim()];
    let ia = iw_max(a, seed, IW_TRIALS).map_err(|e| e.to_string())?.sequence;
    let ib = iw_max(b, seed, IW_TRIALS).map_err(|e| e.to_string())?.sequence;
    let derivations = [a.derivation_dim(), b.derivation_dim()];
    let orbit_ok = if c.nontrivial { derivations[1] > derivations[0] } else { derivations[1] == derivations[0] };
    let ok = square[0] >= square[1] && annihilator[0] <= annihilator[1] && dominates(&ia, &ib) && orbit_ok;
    Ok(Audit { square, annihilator, iw_max: [ia.to_string(), ib.to_string()], derivations, ok })
}

fn check_certificate(c: &CertClaim, seed: u64) -> ClaimResult {
    let mut out = ClaimResult {
        kind: ClaimKind::Certificate,
        entry: c.id.clone(),
        source: c.source.name.clone(),
        target: c.target.name.clone(),
        m: c.m,
        n: c.n,
        status: Status::Fail,
        detail: String::new(),
        audit: None,
        provenance: c.provenance.clone(),
    };
    let cert = match c.certificate() {
        Ok(cert) => cert,
        Err(e) => {
            out.detail = format!("basis: {e}");
            return out;
        }
    };
    match verify_degeneration(&cert) {
        DegenerationVerdict::Fail { reason } => out.detail = reason.to_string(),
        DegenerationVerdict::Pass => match audit(c, seed) {
            Err(e) => out.detail = format!("audit: {e}"),
            Ok(a) => {
                out.detail = if a.ok {
                    "limit equals target".into()
                } else {
                    "limit equals target, but the invariant audit fails".into()
                };
                if a.ok {
                    out.status = Status::VerifiedCertificate;
                }
                out.audit = Some(a);
            }
        },
    }
    out
}

/// The reading of a flag subscript as a dimension bound.
fn subscript_check(w: &WitnessClaim) -> Result<Option<String>, String> {
    let Some(t) = w.subscript() else { return Ok(None) };
    let (i, j, k) = t?;
    let n = w.n;
    let (a, b) = (&w.source.tensor, &w.target.tensor);
    match w.raw.kind {
        // (1,1,k): A^2 inside V_k, i.e. dim A^2 <= n-k+1.
        WitnessKindTag::DimSquare if i == 1 && j == 1 => {
            let bound = (n + 1).checked_sub(k).ok_or("bad subscript")?;
            let (da, db) = (a.square().dim(), b.square().dim());
            if da <= bound && db > bound {
                Ok(Some(format!("subscript ({i},{j},{k}): dim A^2 = {da} <= {bound} < {db}")))
            } else {
                Err(format!("subscript ({i},{j},{k}) does not separate: dim A^2 {da}, dim B^2 {db}, bound {bound}"))
            }
        }
        // (1,k,n+1): V_k annihilates, i.e. dim Ann >= n-k+1.
        WitnessKindTag::AnnDim if i == 1 && k == n + 1 => {
            let bound = (n + 1).checked_sub(j).ok_or("bad subscript")?;
            let (da, db) = (a.annihilator().dim(), b.annihilator().dim());
            if da >= bound && db < bound {
                Ok(Some(format!("subscript ({i},{j},{k}): dim Ann A = {da} >= {bound} > {db}")))
            } else {
                Err(format!("subscript ({i},{j},{k}) does not separate: Ann {da} vs {db}, bound {bound}"))
            }
        }
        _ => Err(format!("subscript ({i},{j},{k}) has no dimension reading for {:?}", w.raw.kind)),
    }
}

fn check_witness(w: &WitnessClaim, opts: &RunOptions, seed: u64) -> ClaimResult {
    let mut out = ClaimResult {
        kind: ClaimKind::Witness,
        entry: format!("{:?}", w.raw.kind),
        source: w.source.name.clone(),
        target: w.target.name.clone(),
        m: w.m,
        n: w.n,
        status: Status::Fail,
        detail: String::new(),
        audit: None,
        provenance: w.raw.provenance.clone(),
    };
    let wit = match w.witness() {
        Ok(x) => x,
        Err(e) => {
            out.detail = e;
            return out;
        }
    };
    let budget = Budget { trials: opts.trials, seed };
    let verdict = match verify_nondegeneration(&wit, budget) {
        Ok(v) => v,
        Err(e) => {
            out.detail = e.to_string();
            return out;
        }
    };
    match verdict {
        WitnessVerdict::Proved { reason } => match subscript_check(w) {
            Ok(extra) => {
                out.status = Status::Proved;
                out.detail = match extra {
                    Some(s) => format!("{reason}; {s}"),
                    None => reason,
                };
            }
            Err(e) => out.detail = format!("{reason}; {e}"),
        },
        WitnessVerdict::RefutationNotFound { trials, source_side } => {
            out.status = if w.raw.asserted { Status::Asserted } else { Status::FalsificationOnly };
            out.detail = format!("{source_side}; no target orbit point in the set after {trials} samples");
        }
        WitnessVerdict::Refuted { reason } | WitnessVerdict::InvariantFails { reason } => out.detail = reason,
    }
    out
}

fn check_composed(c: &ComposedClaim, ledger: &ClaimLedger, certs: &[ClaimResult]) -> ClaimResult {
    let first = &ledger.certificates[c.via[0]];
    let last = &ledger.certificates[*c.via.last().expect("nonempty")];
    let mut out = ClaimResult {
        kind: ClaimKind::Composed,
        entry: c.via.iter().map(|&k| ledger.certificates[k].id.clone()).collect::<Vec<_>>().join(" + "),
        source: first.source.name.clone(),
        target: last.target.name.clone(),
        m: None,
        n: c.n,
        status: Status::Fail,
        detail: String::new(),
        audit: None,
        provenance: c.provenance.clone(),
    };
    if let Some(&bad) = c.via.iter().find(|&&k| certs[k].status != Status::VerifiedCertificate) {
        out.detail = format!("step {} does not verify", ledger.certificates[bad].id);
        return out;
    }
    for w in c.via.windows(2) {
        let (x, y) = (&ledger.certificates[w[0]], &ledger.certificates[w[1]]);
        if x.target.tensor != y.source.tensor {
            out.detail = format!("{} ends at {}, {} starts at {}", x.id, x.target.name, y.id, y.source.name);
            return out;
        }
    }
    out.status = Status::Composed;
    out.detail = format!("{} verified steps", c.via.len());
    out
}

fn check_chain(ch: &Chain, ledger: &ClaimLedger, certs: &[ClaimResult]) -> ChainResult {
    let expected = ch.algebra.level;
    let mut out = ChainResult {
        algebra: ch.algebra.name.clone(),
        n: ch.n,
        expected_level: expected.map_or("unknown".into(), |l| l.to_string()),
        length: ch.edges.len(),
        steps: ch.edges.iter().map(|&k| ledger.certificates[k].id.clone()).collect(),
        passed: false,
        detail: String::new(),
    };
    let fail = |mut o: ChainResult, msg: String| {
        o.detail = msg;
        o
    };
    match expected.and_then(|l| l.exact()) {
        Some(l) if l as usize == ch.edges.len() => {}
        _ => return fail(out, format!("length {} does not match level {}", ch.edges.len(), ch.algebra.name)),
    }
    let mut here = &ch.algebra.tensor;
    for &k in &ch.edges {
        let c = &ledger.certificates[k];
        if &c.source.tensor != here {
            return fail(out, format!("{} does not start where the previous step ended", c.id));
        }
        if certs[k].status != Status::VerifiedCertificate {
            return fail(out, format!("{} does not verify", c.id));
        }
        let (ds, dt) = (c.source.tensor.derivation_dim(), c.target.tensor.derivation_dim());
        if dt <= ds {
            return fail(out, format!("{} may be an isomorphism: dim Der {ds} -> {dt}", c.id));
        }
        here = &c.target.tensor;
    }
    if !here.is_zero_algebra() {
        return fail(out, "chain does not end at the zero algebra".into());
    }
    out.passed = true;
    out.detail = "non-trivial steps down to the zero algebra".into();
    out
}

/// Every distinct closed set used by a witness, plus the bespoke set R.
fn probe_targets(ledger: &ClaimLedger, dims: &Option<BTreeSet<usize>>) -> Vec<(String, usize, Option<ClosedSetSpec>)> {
    let keep = |n: usize| dims.as_ref().is_none_or(|d| d.contains(&n));
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for w in ledger.witnesses.iter().filter(|w| keep(w.n)) {
        match w.raw.kind {
            WitnessKindTag::ClosedSet => {
                if let Some(Ok(spec)) = w.closed_set() {
                    let key = format!("{spec}");
                    if seen.insert((key.clone(), w.n)) {
                        out.push((key, w.n, Some(spec)));
                    }
                }
            }
            WitnessKindTag::BespokeR => {
                if seen.insert(("R".into(), 7)) {
                    out.push(("R".into(), 7, None));
                }
            }
            _ => {}
        }
    }
    out
}

fn run_probe(name: &str, n: usize, spec: &Option<ClosedSetSpec>, samples: usize, seed: u64) -> ProbeResult {
    let verdict = match spec {
        Some(s) => lower_triangular_invariance_probe(s, samples, seed),
        None => {
            let special: CatalogName = "7special".parse().expect("catalog name");
            let a = catalog::instantiate(&special, 7).expect("seven-dimensional");
            let perm = [1, 2, 3, 5, 6, 4, 7];
            let mut b = QMatrix::zeros(7, 7);
            for (r, &c) in perm.iter().enumerate() {
                b.set(r, c - 1, Rational::from_integer(1.into()));
            }
            let known = a.in_basis(&b).expect("permutation");
            ex222_invariance_probe(&known, samples, seed)
        }
    };
    ProbeResult {
        set: name.to_string(),
        n,
        samples,
        passed: verdict.passed(),
        detail: serde_json::to_string(&verdict).unwrap_or_default(),
    }
}

pub fn run_ledger(ledger: &ClaimLedger, seed: u64) -> Report {
    run_ledger_with(ledger, &RunOptions { seed, ..RunOptions::default() })
}

pub fn run_ledger_with(ledger: &ClaimLedger, opts: &RunOptions) -> Report {
    let keep = |n: usize| opts.dims.as_ref().is_none_or(|d| d.contains(&n));
    let seed = opts.seed;

    let certs: Vec<ClaimResult> =
        par::map_range(ledger.certificates.len(), |k| check_certificate(&ledger.certificates[k], claim_seed(seed, k)));
    let base = ledger.certificates.len();
    let wits: Vec<Option<ClaimResult>> = par::map_range(ledger.witnesses.len(), |k| {
        let w = &ledger.witnesses[k];
        if keep(w.n) {
            Some(check_witness(w, opts, claim_seed(seed, base + k)))
        } else {
            None
        }
    });
    let composed: Vec<ClaimResult> = ledger
        .composed
        .iter()
        .filter(|c| keep(c.n))
        .map(|c| check_composed(c, ledger, &certs))
        .collect();
    let chains: Vec<ChainResult> =
        ledger.chains.iter().filter(|c| keep(c.n)).map(|c| check_chain(c, ledger, &certs)).collect();
    let targets = probe_targets(ledger, &opts.dims);
    let probes = par::map_range(targets.len(), |k| {
        let (name, n, spec) = &targets[k];
        run_probe(name, *n, spec, opts.probe_samples, claim_seed(seed, base + ledger.witnesses.len() + k))
    });

    let mut claims: Vec<ClaimResult> = certs.into_iter().filter(|c| keep(c.n)).collect();
    claims.extend(wits.into_iter().flatten());
    claims.extend(composed);

    let mut summary = Summary::default();
    for c in &claims {
        *summary.counts.entry(c.status.to_string()).or_default() += 1;
    }
    summary.expected = Expected {
        certificates: ledger.certificates.iter().filter(|c| keep(c.n)).count(),
        proof_witnesses: ledger
            .witnesses
            .iter()
            .filter(|w| keep(w.n) && !matches!(w.raw.kind, WitnessKindTag::ClosedSet | WitnessKindTag::BespokeR))
            .count(),
        falsification_witnesses: ledger
            .witnesses
            .iter()
            .filter(|w| keep(w.n) && !w.raw.asserted && matches!(w.raw.kind, WitnessKindTag::ClosedSet | WitnessKindTag::BespokeR))
            .count(),
        asserted_witnesses: ledger.witnesses.iter().filter(|w| keep(w.n) && w.raw.asserted).count(),
        composed: ledger.composed.iter().filter(|c| keep(c.n)).count(),
    };
    summary.chains_total = chains.len();
    summary.chains_passed = chains.iter().filter(|c| c.passed).count();
    summary.probes_total = probes.len();
    summary.probes_passed = probes.iter().filter(|p| p.passed).count();
    summary.failures = claims.iter().filter(|c| c.status == Status::Fail).count()
        + (summary.chains_total - summary.chains_passed)
        + (summary.probes_total - summary.probes_passed);

    Report {
        seed,
        trials: opts.trials,
        dims: opts.dims.as_ref().map(|d| d.iter().copied().collect()),
        claims,
        chains,
        probes,
        summary,
    }
}

impl Report {
    pub fn passed(&self) -> bool {
        self.summary.failures == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Dimensions that carry at least one certificate or composed edge.
    pub fn dimensions(&self) -> Vec<usize> {
        self.claims
            .iter()
            .filter(|c| c.kind != ClaimKind::Witness)
            .map(|c| c.n)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Degeneration graph at dimension `n`: solid edges are verified
    /// certificates, dashed ones composed edges.
    pub fn dot(&self, n: usize) -> String {
        let mut nodes = BTreeSet::new();
        let mut edges = BTreeSet::new();
        for c in self.claims.iter().filter(|c| c.n == n) {
            let style = match (c.kind, c.status) {
                (ClaimKind::Certificate, Status::VerifiedCertificate) => "solid",
                (ClaimKind::Composed, Status::Composed) => "dashed",
                _ => continue,
            };
            nodes.insert(c.source.clone());
            nodes.insert(c.target.clone());
            edges.insert((c.source.clone(), c.target.clone(), style));
        }
        let mut s = format!("digraph degenerations_{n} {{\n  rankdir=TB;\n");
        for v in &nodes {
            s.push_str(&format!("  \"{v}\";\n"));
        }
        for (a, b, style) in &edges {
            s.push_str(&format!("  \"{a}\" -> \"{b}\" [style={style}];\n"));
        }
        s.push_str("}\n");
        s
    }
}
