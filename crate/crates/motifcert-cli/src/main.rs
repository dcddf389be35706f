use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use motifcert::db::{db_merge, Database, Provenance};
use motifcert::design::{
    brute_force_decide, effective_positions, fast_motif, rival_search, verify_single_rival, BruteForce, MotifStores,
    SearchBudget, SearchOptions, StoredMotif, Verdict, VerdictKind, BRUTE_FORCE_CAP,
};
use motifcert::energy::{load_parameters, loop_energies, structure_energy, ParameterSet};
use motifcert::fold::{fold_constrained, FoldConstraint};
use motifcert::graph::{canonical_form, motif_subgraph, CanonicalForm};
use motifcert::motif::{differential_positions, embed_standalone, enumerate_shapes, Motif, MotifShape};
use motifcert::structure::{read_structure_records, Decomposition, SecondaryStructure, Sequence};
use rayon::prelude::*;
use serde_json::json;

#[derive(Parser)]
#[command(name = "motifcert", version, about = "Undesignable RNA motif finder and certificate checker")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Global {
    /// Turner 2004 parameter file in ViennaRNA format (bundled set when absent).
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    #[arg(long = "budget-m", global = true, default_value_t = 10_000_000_000)]
    budget_m: u128,
    #[arg(long = "budget-n", global = true, default_value_t = 100_000)]
    budget_n: usize,
    #[arg(long = "budget-k", global = true, default_value_t = 100)]
    budget_k: usize,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true, env = "MOTIFCERT_THREADS")]
    threads: Option<usize>,
    /// JSON-lines motif database read and updated by `scan` and `enum`.
    #[arg(long, global = true)]
    db: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write output here instead of standard out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Merge databases built with different parameter files.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Print the loop table of a dot-bracket structure.
    Decompose { structure: String },
    /// Total and per-loop free energy of a sequence folded into a structure.
    Energy { sequence: String, structure: String },
    /// Minimum free energy structure, optionally under a constraint (`.` free, `x` unpaired, brackets forced).
    Fold {
        sequence: String,
        #[arg(long)]
        constraint: Option<String>,
    },
    /// Canonical form of a motif (`structure|loops=..`) or a standalone shape.
    Canon { motif: String },
    /// Check whether a single rival motif proves the target undesignable.
    Verify { target: String, rival: String },
    /// Scan every structure of a file for minimal undesignable motifs.
    Scan {
        file: PathBuf,
        /// Dataset name recorded in the database (file stem by default).
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Enumerate and classify all standalone motifs up to a length.
    Enum {
        #[arg(long = "max-len", default_value_t = 10)]
        max_len: usize,
        /// Cross-check every motif against exhaustive enumeration.
        #[arg(long = "brute-force")]
        brute_force: bool,
    },
    /// Database maintenance.
    Db {
        #[command(subcommand)]
        cmd: DbCommand,
    },
}

#[derive(Subcommand)]
enum DbCommand {
    /// Union of two databases, written to --out or standard out.
    Merge { a: PathBuf, b: PathBuf },
    /// Per-dataset statistics.
    Stats { file: Option<PathBuf> },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(t) = g.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring thread pool")?;
    }
    let out = match &cli.cmd {
        Command::Decompose { structure } => decompose(g, structure)?,
        Command::Energy { sequence, structure } => energy(g, sequence, structure)?,
        Command::Fold { sequence, constraint } => fold(g, sequence, constraint.as_deref())?,
        Command::Canon { motif } => canon(g, motif)?,
        Command::Verify { target, rival } => verify(g, target, rival)?,
        Command::Scan { file, dataset } => scan(g, file, dataset.as_deref())?,
        Command::Enum { max_len, brute_force } => enumerate(g, *max_len, *brute_force)?,
        Command::Db { cmd: DbCommand::Merge { a, b } } => {
            let merged = db_merge(&read_db(a)?, &read_db(b)?, g.force)?;
            merged.save()
        }
        Command::Db { cmd: DbCommand::Stats { file } } => {
            let path = file.as_ref().or(g.db.as_ref()).context("no database given (pass a file or --db)")?;
            let stats = read_db(path)?.stats();
            match g.format {
                Format::Json => serde_json::to_string_pretty(&stats)? + "\n",
                _ => stats.to_string(),
            }
        }
    };
    emit(g, &out)
}

fn emit(g: &Global, text: &str) -> Result<()> {
    match &g.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn params(g: &Global) -> Result<ParameterSet> {
    match &g.params {
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            load_parameters(&bytes).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(ParameterSet::turner2004()),
    }
}

fn budget(g: &Global) -> SearchBudget {
    SearchBudget { m: g.budget_m, n: g.budget_n, k: g.budget_k }
}

fn read_db(p: &Path) -> Result<Database> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    Database::load(&text).with_context(|| format!("loading {}", p.display()))
}

fn existing_db(g: &Global) -> Result<Database> {
    match &g.db {
        Some(p) if p.exists() => read_db(p),
        _ => Ok(Database::new()),
    }
}

fn store_db(g: &Global, db: &Database) -> Result<()> {
    if let Some(p) = &g.db {
        fs::write(p, db.save()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn check_digest(g: &Global, db: &Database, digest: &str) -> Result<()> {
    let ds = db.digests();
    if !g.force && !ds.is_empty() && ds.iter().any(|d| *d != digest) {
        bail!("database was built with a different parameter file; use --force to update it anyway");
    }
    Ok(())
}

/// Motif given as `structure|loops=..` or as a standalone shape.
fn parse_motif(s: &str) -> Result<Motif> {
    if s.contains('|') {
        Ok(s.parse()?)
    } else {
        Ok(embed_standalone(&s.parse::<MotifShape>()?)?.motif)
    }
}

fn decompose(g: &Global, structure: &str) -> Result<String> {
    let y: SecondaryStructure = structure.parse()?;
    let d = Decomposition::new(y);
    let rows: Vec<_> = d
        .loops
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let cp = l.critical_positions();
            (k, l, cp)
        })
        .collect();
    Ok(match g.format {
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|(k, l, cp)| {
                    json!({
                        "id": k,
                        "kind": l.kind.to_string(),
                        "pairs": l.closing_pairs,
                        "unpaired": l.unpaired_counts,
                        "pair_positions": cp.pair_positions(),
                        "mismatch_positions": cp.mismatch_positions(),
                        "sequence_positions": cp.sequence_positions(),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Dot => motifcert::graph::build_graph(&d.structure).to_dot(),
        Format::Text => {
            let mut s = format!(
                "{:>3}  {:<9} {:<28} {:<28} {}\n",
                "id", "kind", "pairs", "pair positions", "mismatch positions"
            );
            for (k, l, cp) in &rows {
                let pairs = l.closing_pairs.iter().map(|(i, j)| format!("({i},{j})")).collect::<Vec<_>>().join(" ");
                s += &format!(
                    "{k:>3}  {:<9} {pairs:<28} {:<28} {}\n",
                    l.kind.to_string(),
                    join(cp.pair_positions()),
                    join(cp.mismatch_positions())
                );
            }
            s
        }
    })
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn energy(g: &Global, sequence: &str, structure: &str) -> Result<String> {
    let p = params(g)?;
    let x: Sequence = sequence.parse()?;
    let y: SecondaryStructure = structure.parse()?;
    let total = structure_energy(&p, &x, &y)?;
    let loops = loop_energies(&p, &x, &y)?;
    Ok(match g.format {
        Format::Json => {
            let rows: Vec<_> = loops
                .iter()
                .map(|(l, e)| json!({"kind": l.kind.to_string(), "pairs": l.closing_pairs, "energy": e.kcal()}))
                .collect();
            serde_json::to_string_pretty(&json!({"total": total.kcal(), "loops": rows}))? + "\n"
        }
        _ => {
            let mut s = String::new();
            for (l, e) in &loops {
                let pairs = l.closing_pairs.iter().map(|(i, j)| format!("({i},{j})")).collect::<Vec<_>>().join(" ");
                s += &format!("{:<9} {pairs:<28} {e:>8}\n", l.kind.to_string());
            }
            s + &format!("total {total} kcal/mol\n")
        }
    })
}

fn fold(g: &Global, sequence: &str, constraint: Option<&str>) -> Result<String> {
    let p = params(g)?;
    let x: Sequence = sequence.parse()?;
    let c = match constraint {
        Some(c) => c.parse()?,
        None => FoldConstraint::unconstrained(x.len()),
    };
    let r = fold_constrained(&p, &x, &c)?;
    Ok(match g.format {
        Format::Json => {
            serde_json::to_string_pretty(
                &json!({"structure": r.structure.to_string(), "mfe": r.mfe.kcal(), "cooptimal": r.cooptimal}),
            )? + "\n"
        }
        _ => format!("{}\n{} ({}){}\n", x, r.structure, r.mfe, if r.cooptimal { " cooptimal" } else { "" }),
    })
}

fn canon(g: &Global, motif: &str) -> Result<String> {
    let m = parse_motif(motif)?;
    let graph = motif_subgraph(&m);
    let form = canonical_form(&graph);
    Ok(match g.format {
        Format::Json => serde_json::to_string(&form)? + "\n",
        Format::Dot => graph.to_dot(),
        Format::Text => format!("{}\n", form.canonical),
    })
}

fn verify(g: &Global, target: &str, rival: &str) -> Result<String> {
    let p = params(g)?;
    let t: Motif = target.parse()?;
    let r: Motif = rival.parse()?;
    let proven = verify_single_rival(&p, &t, &r, g.budget_m)?;
    let diff = differential_positions(&r, &t)?;
    let eff = effective_positions(&r, &t)?;
    Ok(match g.format {
        Format::Json => {
            serde_json::to_string_pretty(&json!({
                "target": t.text_form(),
                "rival": r.text_form(),
                "differential_positions": diff.positions(),
                "effective_positions": eff,
                "undesignable": proven,
            }))? + "\n"
        }
        _ => format!(
            "differential positions: {}\neffective positions: {}\n{}\n",
            join(diff.positions()),
            join(&eff),
            if proven { "rival proves the target undesignable" } else { "rival does not cover every assignment" }
        ),
    })
}

fn scan(g: &Global, file: &Path, dataset: Option<&str>) -> Result<String> {
    let p = params(g)?;
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let records = read_structure_records(&text).with_context(|| format!("parsing {}", file.display()))?;
    let dataset = dataset
        .map(str::to_string)
        .unwrap_or_else(|| file.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned()));
    let mut db = existing_db(g)?;
    check_digest(g, &db, &p.digest)?;
    let stores = MotifStores::default();
    for r in db.records() {
        let form = CanonicalForm { canonical: r.canonical.clone(), length: r.length, cardinality: r.cardinality };
        let entry = StoredMotif { form, motif: String::new(), rivals: r.rivals.clone() };
        match r.verdict {
            motifcert::db::VerdictSummary::Designable { .. } => stores.insert_designable(entry),
            motifcert::db::VerdictSummary::Undesignable => stores.insert_minimal(entry),
            motifcert::db::VerdictSummary::Unknown { .. } => false,
        };
    }
    let mut out = String::new();
    for rec in &records {
        let report = fast_motif(&p, &rec.structure, budget(g), g.seed, &stores, &rec.id)?;
        db.add_report(&report, &dataset)?;
        match g.format {
            Format::Json => out += &(serde_json::to_string(&report)? + "\n"),
            _ => {
                let c = report.counts;
                out += &format!(
                    "{}\t{} nt\tcandidates {} evaluated {} known {} superset {}\tminimal undesignable {}\t{:.3} s\n",
                    report.structure_id,
                    report.structure.len(),
                    c.candidates,
                    c.evaluated,
                    c.skipped_known,
                    c.skipped_superset,
                    report.minimal.len(),
                    report.elapsed.as_secs_f64()
                );
                for m in &report.minimal {
                    out += &format!("  loops {:?}\t{}\t{}\n", m.loops, m.form.canonical, m.rivals.join(" "));
                }
            }
        }
    }
    store_db(g, &db)?;
    Ok(out)
}

fn enumerate(g: &Global, max_len: usize, brute_force: bool) -> Result<String> {
    let p = params(g)?;
    let mut db = existing_db(g)?;
    check_digest(g, &db, &p.digest)?;
    let start = Instant::now();
    let shapes = enumerate_shapes(max_len);
    let opts = SearchOptions { budget: budget(g), seed: g.seed, ..SearchOptions::default() };
    type Row = (MotifShape, Motif, CanonicalForm, Verdict, Option<BruteForce>);
    let rows: Vec<Row> = shapes
        .par_iter()
        .map(|s| -> Result<Row> {
            let e = embed_standalone(s)?;
            let v = rival_search(&p, &e.motif, &opts)?;
            let bf = if brute_force { Some(brute_force_decide(&p, &e.motif, BRUTE_FORCE_CAP)?) } else { None };
            let form = canonical_form(&motif_subgraph(&e.motif));
            Ok((s.clone(), e.motif, form, v, bf))
        })
        .collect::<Result<_>>()?;
    let prov = Provenance::new(g.seed, budget(g), &p.digest);
    let (mut und, mut des, mut unk, mut disagree) = (0usize, 0usize, 0usize, 0usize);
    let mut lines = String::new();
    for (shape, m, form, v, bf) in &rows {
        db.add_verdict(m, form, v, "enum", shape.as_str(), &prov)?;
        let tag = match &v.kind {
            VerdictKind::Designable(_) => {
                des += 1;
                "designable"
            }
            VerdictKind::Undesignable(_) => {
                und += 1;
                "undesignable"
            }
            VerdictKind::Unknown(_) => {
                unk += 1;
                "unknown"
            }
        };
        let agrees = matches!(
            (bf, &v.kind),
            (None, _)
                | (_, VerdictKind::Unknown(_))
                | (Some(BruteForce::Designable(_)), VerdictKind::Designable(_))
                | (Some(BruteForce::Undesignable), VerdictKind::Undesignable(_))
        );
        if !agrees {
            disagree += 1;
        }
        if g.format == Format::Json {
            lines += &(serde_json::to_string(&json!({
                "shape": shape.as_str(),
                "canonical": form.canonical,
                "verdict": tag,
                "brute_force_agrees": bf.as_ref().map(|_| agrees),
            }))? + "\n");
        }
    }
    store_db(g, &db)?;
    if g.format == Format::Json {
        return Ok(lines);
    }
    let uniq = rows
        .iter()
        .filter(|r| matches!(r.3.kind, VerdictKind::Undesignable(_)))
        .map(|r| r.2.canonical.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let mut s = format!(
        "motifs up to {max_len} nt: {}\ndesignable {des}\nundesignable {und} (unique {uniq})\nunknown {unk}\n",
        rows.len()
    );
    if brute_force {
        s += &format!("brute-force disagreements {disagree}\n");
    }
    s += &format!("elapsed {:.2} s\n", start.elapsed().as_secs_f64());
    if disagree > 0 {
        emit(g, &s)?;
        bail!("{disagree} motifs disagree with exhaustive enumeration");
    }
    Ok(s)
}
