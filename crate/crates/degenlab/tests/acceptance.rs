//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::Rng;

use degenlab::algebra::StructureTensor;
use degenlab::catalog::{self, CatalogName, T22Class};
use degenlab::contraction::iw_max;
use degenlab::degeneration::{ex222_membership, randomized_orbit_refute, OrbitVerdict};
use degenlab::exactnum::Rational;
use degenlab::linalg::{nilpotent_partition, Partition, QMatrix};
use degenlab::par::{self, trial_rng};
use degenlab::verification_db::{self, ClaimKind, ClaimLedger, Report, Status, WitnessKindTag};

const SEED: u64 = 42;

type Outcome = Result<String, String>;

fn cat(name: &str, n: usize) -> StructureTensor {
    catalog::instantiate(&name.parse().expect("catalog name"), n).expect("legal dimension")
}

fn q(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

// ---------------------------------------------------------------------------
// brute-force oracle, deliberately not using linalg

fn rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let pivot = rows[r][c].clone();
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = &rows[i][c] / &pivot;
                for k in c..cols {
                    let d = &f * &rows[r][k];
                    rows[i][k] -= d;
                }
            }
        }
        r += 1;
    }
    r
}

/// dim of the span of all products `e_i e_j`.
fn oracle_square(a: &StructureTensor) -> usize {
    let n = a.dim();
    let mut rows = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            rows.push((1..=n).map(|k| a.constant(i, j, k)).collect());
        }
    }
    rank(rows)
}

/// `x` annihilates iff `sum_i x_i c_ij^k = 0` for all `j, k`.
fn oracle_ann(a: &StructureTensor) -> usize {
    let n = a.dim();
    let mut rows = Vec::new();
    for j in 1..=n {
        for k in 1..=n {
            rows.push((1..=n).map(|i| a.constant(i, j, k)).collect());
        }
    }
    n - rank(rows)
}

/// Hand-read (dim A², dim Ann) from the multiplication tables.
fn pinned(name: &str, n: usize) -> Option<(usize, usize)> {
    Some(match name {
        "eta(3)" => (1, n - 6),
        "eta(4)" => (1, n - 8),
        "eta(5)" => (1, n - 10),
        "T22_e23" => (3, n - 3),
        "T22_e24" | "T22_e34" => (2, n - 4),
        "T22_e45" => (2, n - 5),
        "T222_e23" | "T222_e24" => (3, n - 4),
        "T222_e7special" | "T2k2_special(3)" => (4, n - 6),
        "T3_e23" => (3, n - 3),
        "T3_e24" | "T3_e34" => (2, n - 4),
        "T3_e45" => (2, n - 5),
        "T32_e23" => (3, n - 4),
        _ => return None,
    })
}

// ---------------------------------------------------------------------------

fn c1(report: &Report, elapsed: Duration) -> Outcome {
    let certs: Vec<_> = report.claims.iter().filter(|c| c.kind == ClaimKind::Certificate).collect();
    let transcribed = certs.iter().filter(|c| c.provenance != "connective").count();
    let bad: Vec<_> = certs.iter().filter(|c| c.status != Status::VerifiedCertificate).collect();
    if let Some(b) = bad.first() {
        return Err(format!("{} certificate(s) fail, first {} -> {} at n={}: {}", bad.len(), b.source, b.target, b.n, b.detail));
    }
    if transcribed < 25 {
        return Err(format!("only {transcribed} transcribed certificate checks"));
    }
    if elapsed >= Duration::from_secs(30) {
        return Err(format!("ledger run took {elapsed:?}"));
    }
    Ok(format!("{} certificate checks ({transcribed} transcribed) verified in {:.1?}", certs.len(), elapsed))
}

const AUXILIARY: &[&str] = &["eta_eps15", "eta_eps_double", "T2k2_e23", "T2k2_special", "T2k2_e23_shift", "T2k2_e2m2"];

fn c2(ledger: &ClaimLedger, report: &Report) -> Outcome {
    let mut wanted = Vec::new();
    for name in catalog::manifest().names() {
        if AUXILIARY.contains(&name.family.key().as_str()) {
            continue;
        }
        let (lo, hi) = catalog::dim_range(&name).map_err(|e| e.to_string())?;
        let hi = hi.unwrap_or(catalog::MAX_TEST_DIM).min(catalog::MAX_TEST_DIM);
        let mut seen = BTreeSet::new();
        for n in lo..=hi {
            let lev = catalog::level_lookup(&name, n).map_err(|e| e.to_string())?.level.exact();
            if let Some(l) = lev.filter(|l| (3..=5).contains(l)) {
                if seen.insert(l) {
                    wanted.push((name.clone(), n, l as usize));
                }
            }
        }
    }
    let mut missing = Vec::new();
    for (name, n, l) in &wanted {
        let t = catalog::instantiate(name, *n).map_err(|e| e.to_string())?;
        let ok = ledger
            .chains
            .iter()
            .zip(&report.chains)
            .any(|(ch, res)| ch.n == *n && ch.algebra.tensor == t && res.passed && res.length == *l);
        if !ok {
            missing.push(format!("{name}@{n}"));
        }
    }
    for (alg, n, len) in [("T22_e45", 7, 5), ("T4_e23", 5, 5), ("eta(3)", 7, 3)] {
        let ok = report.chains.iter().any(|c| c.algebra == alg && c.n == n && c.length == len && c.passed);
        if !ok {
            missing.push(format!("{alg}@{n} length {len}"));
        }
    }
    if missing.is_empty() {
        Ok(format!("{} algebras of level 3-5 carry verified chains of exact length", wanted.len()))
    } else {
        Err(format!("no verified chain for {}", missing.join(", ")))
    }
}

fn c3(ledger: &ClaimLedger, report: &Report) -> Outcome {
    let mut checked = 0;
    let mut problems = Vec::new();
    for w in &ledger.witnesses {
        if !matches!(w.raw.kind, WitnessKindTag::DimSquare | WitnessKindTag::AnnDim) || w.raw.subscript.is_none() {
            continue;
        }
        for side in [&w.source, &w.target] {
            let t = &side.tensor;
            let oracle = (oracle_square(t), oracle_ann(t));
            let lib = (t.square().dim(), t.annihilator().dim());
            match pinned(&side.name, w.n) {
                Some(p) if p == oracle && p == lib => {}
                p => problems.push(format!("{}@{}: pinned {p:?} oracle {oracle:?} library {lib:?}", side.name, w.n)),
            }
        }
        let proved = report.claims.iter().any(|c| {
            c.kind == ClaimKind::Witness
                && c.source == w.source.name
                && c.target == w.target.name
                && c.n == w.n
                && c.status == Status::Proved
        });
        if !proved {
            problems.push(format!("{} -/-> {} at n={} not proved", w.source.name, w.target.name, w.n));
        }
        checked += 1;
    }
    if checked < 20 {
        problems.push(format!("only {checked} subscript witnesses"));
    }
    if problems.is_empty() {
        Ok(format!("{checked} subscript witnesses proved, dims agree with oracle and pinned values"))
    } else {
        Err(problems.join("; "))
    }
}

fn c4() -> Outcome {
    let matrix = catalog::manifest().test_matrix();
    let bad: Vec<String> = par::map_slice(&matrix, |(name, n)| {
        let t = catalog::instantiate(name, *n).ok()?;
        let want = catalog::expected_iw_max(name).ok()?;
        let got = iw_max(&t, SEED, 32).ok()?.label();
        (got != want).then(|| format!("{name}@{n}: {got} vs {want}"))
    })
    .into_iter()
    .flatten()
    .collect();
    if bad.is_empty() {
        Ok(format!("{}/{} catalog instances match their expected partition", matrix.len(), matrix.len()))
    } else {
        Err(bad.join(", "))
    }
}

fn c5() -> Outcome {
    let special = cat("7special", 7);
    let mut non_jacobi = BTreeSet::new();
    let mut problems = Vec::new();
    let mut count = 0;
    for (name, n) in catalog::manifest().test_matrix() {
        let lev = catalog::level_lookup(&name, n).map_err(|e| e.to_string())?.level.exact();
        if !lev.is_some_and(|l| l <= 5) {
            continue;
        }
        count += 1;
        let t = catalog::instantiate(&name, n).map_err(|e| e.to_string())?;
        let f = t.identity_flags();
        if !f.jacobi {
            let label = if t == special { "7special@7".to_string() } else { format!("{}", name.family.key()) };
            non_jacobi.insert(label);
        }
        if !f.malcev {
            problems.push(format!("{name}@{n} not Malcev"));
        }
        if t.nilpotency_index().is_none() {
            problems.push(format!("{name}@{n} not nilpotent"));
        }
    }
    let expected: BTreeSet<String> = ["T3_e34", "7special@7"].iter().map(|s| s.to_string()).collect();
    if non_jacobi != expected {
        problems.push(format!("non-Jacobi set {non_jacobi:?}"));
    }
    if problems.is_empty() {
        Ok(format!("{count} algebras: Malcev and nilpotent; Jacobi fails exactly for T3_e34 and 7special"))
    } else {
        Err(problems.join("; "))
    }
}

fn c6() -> Outcome {
    let start = Instant::now();
    let special = cat("7special", 7);
    let mut perm = QMatrix::zeros(7, 7);
    for (r, c) in [1, 2, 3, 5, 6, 4, 7].into_iter().enumerate() {
        perm.set(r, c - 1, q(1));
    }
    let inside = ex222_membership(&special.in_basis(&perm).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    if !inside {
        return Err("permuted special algebra is not in R".into());
    }
    let member = |x: &StructureTensor| ex222_membership(x).unwrap_or(false);
    for b in ["T22_e45", "T222_e24"] {
        match randomized_orbit_refute(&cat(b, 7), &member, 1000, SEED) {
            OrbitVerdict::RefutationNotFound { .. } => {}
            OrbitVerdict::Refuted { trial, .. } => return Err(format!("{b}: orbit point in R at trial {trial}")),
        }
    }
    let el = start.elapsed();
    if el >= Duration::from_secs(60) {
        return Err(format!("took {el:?}"));
    }
    Ok("special algebra in R; 0/1000 orbit hits for T22_e45 and T222_e24".into())
}

fn c7() -> Outcome {
    let mut cases: Vec<(String, usize, usize)> = Vec::new();
    for m in 1..=4 {
        cases.push((format!("eta({m})"), 2 * m + 1, 2));
        cases.push((format!("eta({m})"), 2 * m + 2, 2));
    }
    for name in ["T22", "T22_e23", "T22_e24", "T22_e34"] {
        cases.push((name.into(), 6, 2));
        cases.push((name.into(), 7, 2));
    }
    cases.push(("T22".into(), 5, 2));
    cases.push(("T22_e45".into(), 7, 2));
    cases.push(("T22_e45".into(), 8, 2));
    cases.push(("T4".into(), 5, 4));
    cases.push(("T4".into(), 6, 4));
    cases.push(("T4_e23".into(), 5, 4));
    let mut problems = Vec::new();
    for (k, (name, n, want)) in cases.iter().enumerate() {
        let t = cat(name, *n);
        let got = t.engel_degree(*n);
        if got != Some(*want) {
            problems.push(format!("{name}@{n}: {got:?}"));
            continue;
        }
        // spot checks: (L_a)^d = 0 always, (L_a)^{d-1} != 0 for some sample
        let mut rng = trial_rng(SEED, k as u64);
        let mut sharp = false;
        for _ in 0..200 {
            let a: Vec<Rational> = (0..*n).map(|_| q(rng.gen_range(-7..=7))).collect();
            let l = t.left_mult_matrix(&a).map_err(|e| e.to_string())?;
            if !l.pow(*want).is_zero() {
                problems.push(format!("{name}@{n}: (L_a)^{want} != 0 for a = {a:?}"));
                break;
            }
            sharp |= !l.pow(want - 1).is_zero();
        }
        if !sharp {
            problems.push(format!("{name}@{n}: degree {want} never attained in samples"));
        }
    }
    if problems.is_empty() {
        Ok(format!("{} algebras, 200 spot checks each, no counterexample", cases.len()))
    } else {
        Err(problems.join("; "))
    }
}

fn random_lower_triangular(n: usize, seed: u64, trial: u64) -> QMatrix {
    let mut rng = trial_rng(seed, trial);
    let mut g = QMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let num = if i == j {
                let v: i64 = rng.gen_range(1..=3);
                if rng.gen_bool(0.5) { -v } else { v }
            } else {
                rng.gen_range(-3..=3)
            };
            let den: i64 = rng.gen_range(1..=3);
            g.set(i, j, Rational::new(num.into(), den.into()));
        }
    }
    g
}

fn c8() -> Outcome {
    let mut jobs = Vec::new();
    for n in [6, 7] {
        for name in ["T22", "T22_e23", "T22_e24", "T22_e34"] {
            jobs.push((name, n));
        }
    }
    jobs.push(("T22_e45", 7));
    let mut trials = Vec::new();
    for (k, (name, n)) in jobs.iter().enumerate() {
        for t in 0..100u64 {
            trials.push((*name, *n, (k as u64) * 1000 + t));
        }
    }
    let results: Vec<Result<bool, String>> = par::map_slice(&trials, |(name, n, stream)| {
        let want: CatalogName = name.parse().map_err(|e: catalog::CatalogError| e.to_string())?;
        let g = random_lower_triangular(*n, SEED, *stream);
        let a = cat(name, *n).change_basis(&g).map_err(|e| e.to_string())?;
        match catalog::classify_t22(&a, SEED, 32).map_err(|e| e.to_string())? {
            T22Class::Name(got) if got == want => Ok(true),
            T22Class::NeedsExtension => Ok(false),
            other => Err(format!("{name}@{n} stream {stream}: got {other}")),
        }
    });
    let wrong: Vec<_> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let deferred = results.iter().filter(|r| matches!(r, Ok(false))).count();
    if wrong.is_empty() {
        Ok(format!("{} transforms classified, 0 wrong, {deferred} deferred to an extension", trials.len()))
    } else {
        Err(format!("{} misclassified, first: {}", wrong.len(), wrong[0]))
    }
}

fn random_partition(n: usize, rng: &mut impl Rng) -> Partition {
    let mut left = n;
    let mut parts = Vec::new();
    while left > 0 {
        let p = rng.gen_range(1..=left);
        parts.push(p);
        left -= p;
    }
    Partition::new(parts)
}

fn conjugated_jordan(p: &Partition, rng: &mut impl Rng) -> QMatrix {
    let n = p.size();
    let mut j = QMatrix::zeros(n, n);
    let mut start = 0;
    for &len in p.parts() {
        for r in start + 1..start + len {
            j.set(r, r - 1, Rational::one());
        }
        start += len;
    }
    let g = loop {
        let rows: Vec<Vec<Rational>> = (0..n).map(|_| (0..n).map(|_| q(rng.gen_range(-4..=4))).collect()).collect();
        let g = QMatrix::from_rows(rows).expect("square");
        if !g.determinant().expect("square").is_zero() {
            break g;
        }
    };
    let gi = g.invert().expect("invertible");
    g.mul(&j).and_then(|x| x.mul(&gi)).expect("sizes")
}

fn c9(report: &Report, ledger: &ClaimLedger) -> Outcome {
    let mut problems = Vec::new();
    let certs: Vec<_> = report.claims.iter().filter(|c| c.kind == ClaimKind::Certificate).collect();
    let audited = certs.iter().filter(|c| c.audit.as_ref().is_some_and(|a| a.ok)).count();
    if audited != certs.len() {
        problems.push(format!("audit passes for {audited}/{} certificates", certs.len()));
    }

    let bad: Vec<String> = par::map_range(500, |k| {
        let mut rng = trial_rng(SEED, 10_000 + k as u64);
        let n = rng.gen_range(1..=9);
        let p = random_partition(n, &mut rng);
        let m = conjugated_jordan(&p, &mut rng);
        match nilpotent_partition(&m) {
            Ok(got) if got == p => None,
            other => Some(format!("{p}: {other:?}")),
        }
    })
    .into_iter()
    .flatten()
    .collect();
    if !bad.is_empty() {
        problems.push(format!("{} conjugation failures, first {}", bad.len(), bad[0]));
    }

    let specs: BTreeSet<(String, usize)> = ledger
        .witnesses
        .iter()
        .filter_map(|w| match w.raw.kind {
            WitnessKindTag::ClosedSet => w.closed_set().and_then(Result::ok).map(|s| (s.to_string(), w.n)),
            WitnessKindTag::BespokeR => Some(("R".into(), 7)),
            _ => None,
        })
        .collect();
    let probed: BTreeSet<(String, usize)> =
        report.probes.iter().filter(|p| p.passed).map(|p| (p.set.clone(), p.n)).collect();
    if specs != probed || report.probes.len() != specs.len() {
        problems.push(format!("probes passed for {}/{} closed sets", probed.len(), specs.len()));
    }
    if problems.is_empty() {
        Ok(format!(
            "audit ok on {} certificates; 500 conjugations; {} closed-set probes",
            certs.len(),
            specs.len()
        ))
    } else {
        Err(problems.join("; "))
    }
}

fn main() -> ExitCode {
    let ledger = match verification_db::shipped_ledger() {
        Ok(l) => l,
        Err(e) => {
            println!("shipped ledger does not load: {e}");
            return ExitCode::FAILURE;
        }
    };
    let start = Instant::now();
    let report = verification_db::run_ledger(&ledger, SEED);
    let elapsed = start.elapsed();

    let checks: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("certificate suite", Box::new(|| c1(&report, elapsed))),
        ("level lower bounds", Box::new(|| c2(&ledger, &report))),
        ("invariant witnesses", Box::new(|| c3(&ledger, &report))),
        ("IW fidelity", Box::new(c4)),
        ("identity corollaries", Box::new(c5)),
        ("closed set R", Box::new(c6)),
        ("Engel degrees", Box::new(c7)),
        ("T(2,2) classifier round trip", Box::new(c8)),
        ("property suites", Box::new(|| c9(&report, &ledger))),
    ];
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let t = Instant::now();
        let (tag, msg) = match check() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {} [{tag}] {name}: {msg} ({:.1?})", k + 1, t.elapsed());
    }
    println!("acceptance: {}/{} criteria pass", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
