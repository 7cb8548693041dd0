//! `degenlab` command-line front end.
//!
//! Exit codes: 0 pass, 1 I/O or parse error, 2 failure or refutation,
//! 3 falsification-tier result with no refutation found.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use degenlab::algebra::StructureTensor;
use degenlab::catalog::{self, CatalogName};
use degenlab::contraction::iw_max;
use degenlab::verification_db::{
    self, build_ledger, load_ledger, run_ledger_with, LedgerFile, Report, RunOptions, Status,
};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(name = "degenlab", version, about = "Exact checks of degenerations between anticommutative algebras")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Invariants and level of a catalog algebra or an algebra JSON file.
    Info(AlgebraArgs),
    /// Check a certificate, a witness, or a small ledger file.
    Check(CheckArgs),
    /// Run the ledger across the dimension matrix.
    VerifyPaper(VerifyArgs),
    /// Browse the catalog.
    Catalog {
        #[command(subcommand)]
        cmd: CatalogCmd,
    },
    /// Maximal one-dimensional contraction.
    Iwmax(AlgebraArgs),
    /// Canonical name of an algebra whose maximal contraction is T(2,2).
    Classify(AlgebraArgs),
}

#[derive(Subcommand, Debug)]
enum CatalogCmd {
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
struct AlgebraArgs {
    /// Catalog name (e.g. T32_e23, eta(3)) or path to an algebra JSON file.
    algebra: String,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CheckArgs {
    path: PathBuf,
    /// Dimension for a bare entry; defaults to the entry's own dimension set.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Comma-separated dimensions, e.g. `5,6,7`.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Directory for report.json and one DOT file per dimension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "DEGENLAB_LEDGER")]
    ledger: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Info(a) => info(&a),
        Cmd::Check(a) => check(&a),
        Cmd::VerifyPaper(a) => verify_paper(&a),
        Cmd::Catalog { cmd: CatalogCmd::List { json } } => catalog_list(json),
        Cmd::Iwmax(a) => iwmax(&a),
        Cmd::Classify(a) => classify(&a),
    }
}

fn emit(json_out: bool, v: &Value, human: impl FnOnce() -> String) {
    if json_out {
        println!("{}", serde_json::to_string_pretty(v).expect("json"));
    } else {
        print!("{}", human());
    }
}

/// Resolves a catalog name or an algebra file. Catalog names need `--dim`.
fn load_algebra(a: &AlgebraArgs) -> Result<(String, StructureTensor, Option<CatalogName>)> {
    if Path::new(&a.algebra).is_file() {
        let src = fs::read_to_string(&a.algebra).with_context(|| format!("reading {}", a.algebra))?;
        let t = StructureTensor::parse_json(&src)?;
        if a.dim.is_some_and(|n| n != t.dim()) {
            bail!("{} has dimension {}, not {}", a.algebra, t.dim(), a.dim.unwrap_or_default());
        }
        return Ok((a.algebra.clone(), t, None));
    }
    let name: CatalogName = a.algebra.parse()?;
    let n = match a.dim {
        Some(n) => n,
        None => bail!("--dim is required for catalog algebra {name}"),
    };
    let t = catalog::instantiate(&name, n)?;
    Ok((name.to_string(), t, Some(name)))
}

fn info(a: &AlgebraArgs) -> Result<u8> {
    let (label, t, name) = load_algebra(a)?;
    let n = t.dim();
    let level = match &name {
        Some(c) => Some(catalog::level_lookup(c, n)?),
        None => None,
    };
    let iw = iw_max(&t, a.seed, a.trials as usize)?;
    let flags = t.identity_flags();
    let v = json!({
        "algebra": label,
        "dim": n,
        "square_dim": t.square().dim(),
        "annihilator_dim": t.annihilator().dim(),
        "derivation_dim": t.derivation_dim(),
        "nilpotency_index": t.nilpotency_index(),
        "engel_degree": t.engel_degree(n.max(1)),
        "jacobi": flags.jacobi,
        "malcev": flags.malcev,
        "iw_max": iw.label().to_string(),
        "iw_max_ranks": iw.sequence.to_string(),
        "level": level.map(|l| l.level.to_string()),
        "infinite_level": level.map(|l| l.infinite_level.to_string()),
    });
    emit(a.json, &v, || {
        let opt = |x: &Value| if x.is_null() { "-".to_string() } else { x.to_string().trim_matches('"').to_string() };
        let mut s = String::new();
        for key in [
            "algebra",
            "dim",
            "square_dim",
            "annihilator_dim",
            "derivation_dim",
            "nilpotency_index",
            "engel_degree",
            "jacobi",
            "malcev",
            "iw_max",
            "iw_max_ranks",
            "level",
            "infinite_level",
        ] {
            s.push_str(&format!("{key:<18} {}\n", opt(&v[key])));
        }
        if !t.is_zero_algebra() {
            s.push_str(&format!("table\n{}\n", t.table_string()));
        }
        s
    });
    Ok(0)
}

fn iwmax(a: &AlgebraArgs) -> Result<u8> {
    let (label, t, name) = load_algebra(a)?;
    let iw = iw_max(&t, a.seed, a.trials as usize)?;
    let expected = name.as_ref().and_then(|c| catalog::expected_iw_max(c).ok());
    let v = json!({
        "algebra": label,
        "dim": t.dim(),
        "label": iw.label().to_string(),
        "partition": iw.partition.to_string(),
        "ranks": iw.sequence.to_string(),
        "element": iw.witness,
        "expected": expected.as_ref().map(ToString::to_string),
    });
    emit(a.json, &v, || {
        let mut s = format!("{label} (n = {}): T{}  ranks {}  at ({})\n", t.dim(), iw.label(), iw.sequence, iw.witness.join(", "));
        if let Some(e) = &expected {
            s.push_str(&format!("catalog expects T{e}\n"));
        }
        s
    });
    let mismatch = expected.is_some_and(|e| e != iw.label());
    Ok(if mismatch { 2 } else { 0 })
}

fn classify(a: &AlgebraArgs) -> Result<u8> {
    let (label, t, _) = load_algebra(a)?;
    let class = catalog::classify_t22(&t, a.seed, a.trials as usize)?;
    let v = json!({ "algebra": label, "dim": t.dim(), "class": class.to_string() });
    emit(a.json, &v, || format!("{label}: {class}\n"));
    Ok(0)
}

fn catalog_list(json_out: bool) -> Result<u8> {
    let mut rows = Vec::new();
    for name in catalog::manifest().names() {
        let (lo, hi) = catalog::dim_range(&name)?;
        let iw = catalog::expected_iw_max(&name).map(|p| p.to_string()).unwrap_or_default();
        let level = catalog::level_lookup(&name, lo).map(|l| l.level.to_string()).unwrap_or_default();
        rows.push(json!({ "name": name.to_string(), "min_dim": lo, "max_dim": hi, "iw_max": iw, "level_at_min_dim": level }));
    }
    let v = Value::Array(rows);
    emit(json_out, &v, || {
        let mut s = format!("{:<28} {:>5} {:>5}  {:<12} {}\n", "name", "min", "max", "iw_max", "level");
        for r in v.as_array().into_iter().flatten() {
            let hi = r["max_dim"].as_u64().map_or("-".into(), |h| h.to_string());
            s.push_str(&format!(
                "{:<28} {:>5} {:>5}  {:<12} {}\n",
                r["name"].as_str().unwrap_or(""),
                r["min_dim"].to_string(),
                hi,
                r["iw_max"].as_str().unwrap_or(""),
                r["level_at_min_dim"].as_str().unwrap_or("")
            ));
        }
        s
    });
    Ok(0)
}

/// Accepts a ledger file, or a single certificate or witness object.
fn check_file(src: &str, dim: Option<usize>) -> Result<LedgerFile> {
    let mut v: Value = serde_json::from_str(src).context("parsing check input")?;
    let is_ledger = ["algebras", "certificates", "witnesses", "composed", "chains"]
        .iter()
        .any(|k| v.get(k).is_some());
    if !is_ledger {
        let obj = v.as_object_mut().context("expected a JSON object")?;
        if let Some(n) = dim {
            obj.insert("dims".into(), json!([n]));
        }
        v = if obj.contains_key("kind") {
            json!({ "witnesses": [v] })
        } else {
            obj.entry("id").or_insert_with(|| json!("check"));
            json!({ "certificates": [v] })
        };
    }
    Ok(serde_json::from_value(v).context("reading ledger entries")?)
}

fn exit_code(r: &Report) -> u8 {
    if !r.passed() {
        2
    } else if r.claims.iter().any(|c| matches!(c.status, Status::FalsificationOnly | Status::Asserted)) {
        3
    } else {
        0
    }
}

fn check(a: &CheckArgs) -> Result<u8> {
    let src = fs::read_to_string(&a.path).with_context(|| format!("reading {}", a.path.display()))?;
    let ledger = build_ledger(&check_file(&src, a.dim)?)?;
    let opts = RunOptions { seed: a.seed, trials: a.trials as usize, ..RunOptions::default() };
    let report = run_ledger_with(&ledger, &opts);
    if a.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", claims_table(&report));
    }
    Ok(exit_code(&report))
}

fn claims_table(r: &Report) -> String {
    let mut s = String::new();
    for c in &r.claims {
        s.push_str(&format!("{:<20} n={:<3} {} -> {}  [{}]  {}\n", c.status, c.n, c.source, c.target, c.entry, c.detail));
    }
    for c in r.chains.iter().filter(|c| !c.passed) {
        s.push_str(&format!("chain FAIL n={} {}: {}\n", c.n, c.algebra, c.detail));
    }
    for p in r.probes.iter().filter(|p| !p.passed) {
        s.push_str(&format!("probe FAIL n={} {}: {}\n", p.n, p.set, p.detail));
    }
    s
}

fn verify_paper(a: &VerifyArgs) -> Result<u8> {
    let ledger = match &a.ledger {
        Some(p) => load_ledger(p)?,
        None => verification_db::shipped_ledger()?,
    };
    let opts = RunOptions {
        seed: a.seed,
        trials: a.trials as usize,
        dims: a.dims.as_ref().map(|d| d.iter().copied().collect::<BTreeSet<_>>()),
        ..RunOptions::default()
    };
    let report = run_ledger_with(&ledger, &opts);
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("report.json"), report.to_json())?;
        for n in report.dimensions() {
            fs::write(dir.join(format!("degenerations_{n}.dot")), report.dot(n))?;
        }
    }
    if a.json {
        println!("{}", report.to_json());
    } else {
        let sm = &report.summary;
        let failing: Vec<_> = report.claims.iter().filter(|c| c.status == Status::Fail).collect();
        for c in failing {
            println!("FAIL n={} {} -> {} [{}]: {}", c.n, c.source, c.target, c.entry, c.detail);
        }
        for c in report.chains.iter().filter(|c| !c.passed) {
            println!("chain FAIL n={} {}: {}", c.n, c.algebra, c.detail);
        }
        for p in report.probes.iter().filter(|p| !p.passed) {
            println!("probe FAIL n={} {}: {}", p.n, p.set, p.detail);
        }
        for (k, v) in &sm.counts {
            println!("{k:<22} {v}");
        }
        println!("{:<22} {}/{}", "chains", sm.chains_passed, sm.chains_total);
        println!("{:<22} {}/{}", "probes", sm.probes_passed, sm.probes_total);
        println!("{:<22} {}", "failures", sm.failures);
    }
    Ok(if report.passed() { 0 } else { 2 })
}
