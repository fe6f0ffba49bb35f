//! One entry point per CLI verb. Every function resolves its inputs,
//! computes, renders in the selected format, writes to `--out` or stdout,
//! and returns the process exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bellgap::ga::{self, GaConfig, SearchConstraint, SearchSpace};
use bellgap::hvmodel;
use bellgap::weights::{
    bell_quantum_bound, bounds, grothendieck_constant, histogram_counts, quantum_gap,
    BellMatrix, GapDistribution, GapSampler, SignaturePair, SpectralBox, WeightMatrix,
};
use bellgap::{Error, Result};
use clap::Args;
use serde::Serialize;

use crate::record::{config_hash, now_timestamp, parse_record, SearchRecord, VERIFY_TOL};
use crate::render::{
    csv_line, kv_line, provenance_lines, real17, to_json, write_output, OutputFormat,
};
use crate::run_config::{constraint_spec, RunConfig};
use crate::weight_source::{matrix_rows, matrix_spec, WeightArgs};

const TOOL: &str = "bellgap";
const VERSION: &str = env!("CARGO_PKG_VERSION");

/// JSON wrapper attaching provenance to a command report.
#[derive(Serialize)]
struct Provenanced<T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<String>,
    report: T,
}

fn provenanced<T: Serialize>(
    command: &'static str,
    seed: Option<u64>,
    hash: &str,
    report: T,
) -> Provenanced<T> {
    Provenanced {
        tool: TOOL,
        version: VERSION,
        command,
        seed,
        config_hash: hash.to_string(),
        timestamp: None,
        report,
    }
}

/// Markdown provenance block shared by `md` outputs.
fn md_provenance(command: &str, seed: Option<u64>, hash: &str) -> String {
    let mut s = String::from("\nProvenance:\n");
    s.push_str(&kv_line("tool", format!("{TOOL} {VERSION}")));
    s.push_str(&kv_line("command", command));
    if let Some(seed) = seed {
        s.push_str(&kv_line("seed", seed.to_string()));
    }
    s.push_str(&kv_line("config_hash", hash));
    s
}

fn signs_string(signs: &[i8]) -> String {
    signs.iter().map(|&s| if s < 0 { '-' } else { '+' }).collect()
}

// ---------------------------------------------------------------------------
// norms

#[derive(Debug, Args)]
pub struct NormsArgs {
    #[command(flatten)]
    pub weight: WeightArgs,

    /// Tolerance for the gap computation and certificate search.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,

    /// Write here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Md)]
    pub format: OutputFormat,
}

/// Every norm and bound of one weight matrix, plus its gap data.
#[derive(Debug, Serialize)]
struct NormsReport {
    n_a: usize,
    n_b: usize,
    /// Largest singular value `||W||`.
    operator_norm: f64,
    /// Hidden-variable threshold `||W||*`.
    hv_norm: f64,
    /// Frobenius norm `||W||_sigma`.
    schmidt_norm: f64,
    /// `sqrt(N_a N_b) ||W||`.
    norm_bound: f64,
    /// `K_G(order) ||W||*`.
    grothendieck_bound: f64,
    grothendieck_order: usize,
    /// `sqrt(N_a N_b) ||W|| - ||W||*`.
    gap: f64,
    /// `sqrt(N_a N_b) - ||W||* / ||W||`.
    scaled_gap: f64,
    certificate: Option<SignaturePair>,
}

pub fn cmd_norms(args: &NormsArgs) -> Result<i32> {
    let w = args.weight.resolve()?;
    let gap = quantum_gap(&w, args.tol)?;
    let bound = bounds(&w)?;
    let report = NormsReport {
        n_a: w.n_a(),
        n_b: w.n_b(),
        operator_norm: gap.operator_norm,
        hv_norm: gap.hv_norm,
        schmidt_norm: w.schmidt_norm(),
        norm_bound: bound.norm_bound,
        grothendieck_bound: bound.grothendieck_bound,
        grothendieck_order: bound.grothendieck_order,
        gap: gap.gap,
        scaled_gap: gap.scaled_gap,
        certificate: gap.certificate,
    };
    let hash = config_hash(&format!(
        "command = norms\nweight = {}\ntol = {}\n",
        args.weight.describe()?,
        args.tol
    ));

    let text = match args.format {
        OutputFormat::Json => to_json(&provenanced("norms", None, &hash, &report))?,
        OutputFormat::Csv => {
            let mut s = provenance_lines("norms", None, &hash);
            s.push_str(&csv_line(&[
                "n_a",
                "n_b",
                "operator_norm",
                "hv_norm",
                "schmidt_norm",
                "norm_bound",
                "grothendieck_bound",
                "grothendieck_order",
                "gap",
                "scaled_gap",
                "certificate_d1",
                "certificate_d2",
            ]));
            let (d1, d2) = report
                .certificate
                .as_ref()
                .map(|c| (signs_string(&c.d1), signs_string(&c.d2)))
                .unwrap_or_default();
            s.push_str(&csv_line(&[
                report.n_a.to_string(),
                report.n_b.to_string(),
                real17(report.operator_norm),
                real17(report.hv_norm),
                real17(report.schmidt_norm),
                real17(report.norm_bound),
                real17(report.grothendieck_bound),
                report.grothendieck_order.to_string(),
                real17(report.gap),
                real17(report.scaled_gap),
                d1,
                d2,
            ]));
            s
        }
        OutputFormat::Md => {
            let mut s = format!("Norms of the {} x {} weight matrix\n\n", report.n_a, report.n_b);
            s.push_str(&kv_line("operator norm ||W||", report.operator_norm.to_string()));
            s.push_str(&kv_line("hv norm ||W||*", report.hv_norm.to_string()));
            s.push_str(&kv_line("schmidt norm", report.schmidt_norm.to_string()));
            s.push_str(&kv_line(
                "norm bound sqrt(Na Nb) ||W||",
                report.norm_bound.to_string(),
            ));
            s.push_str(&kv_line(
                format!("grothendieck bound K_G({}) ||W||*", report.grothendieck_order).as_str(),
                report.grothendieck_bound.to_string(),
            ));
            s.push_str(&kv_line("gap G", report.gap.to_string()));
            s.push_str(&kv_line("scaled gap g", report.scaled_gap.to_string()));
            match &report.certificate {
                Some(c) => {
                    s.push_str(&kv_line(
                        "zero-gap certificate",
                        format!("d1 = {}, d2 = {}", signs_string(&c.d1), signs_string(&c.d2)),
                    ));
                }
                None => s.push_str(&kv_line("zero-gap certificate", "none")),
            }
            s.push_str(&md_provenance("norms", None, &hash));
            s
        }
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// bellmat

#[derive(Debug, Args)]
pub struct BellmatGenArgs {
    /// Matrix size N.
    #[arg(long)]
    pub n: usize,

    /// Seed of the first matrix; matrix i uses seed + i.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// How many matrices to draw.
    #[arg(long, default_value_t = 1)]
    pub count: usize,

    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Md)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct BellmatValidateArgs {
    /// Matrix file: first line "N N", then N rows of N entries in {-1,0,1}.
    #[arg(long, value_name = "PATH")]
    pub file: String,
}

#[derive(Debug, Args)]
pub struct BellmatReduceArgs {
    /// Matrix file to reduce (same format as validate).
    #[arg(long, value_name = "PATH", conflicts_with = "bell")]
    pub file: Option<String>,

    /// Reduce a freshly drawn random Bell matrix of this size instead.
    #[arg(long, value_name = "N")]
    pub bell: Option<usize>,

    /// Seed for --bell.
    #[arg(long, default_value_t = 1, requires = "bell")]
    pub seed: u64,

    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Md)]
    pub format: OutputFormat,
}

fn int_rows(w: &WeightMatrix<f64>) -> Vec<Vec<i8>> {
    let (n_a, n_b) = w.dims();
    (0..n_a)
        .map(|j| (0..n_b).map(|k| w.entry(j, k) as i8).collect())
        .collect()
}

fn int_rows_md(rows: &[Vec<i8>]) -> String {
    let mut s = String::new();
    for row in rows {
        s.push_str("   ");
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{v:>2}");
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct GeneratedBellMatrix {
    seed: u64,
    minus_count: usize,
    rows: Vec<Vec<i8>>,
}

pub fn cmd_bellmat_gen(args: &BellmatGenArgs) -> Result<i32> {
    if args.count == 0 {
        return Err(Error::InvalidInput("--count must be positive".into()));
    }
    let mut matrices = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let seed = args.seed + i as u64;
        let x = BellMatrix::generate(args.n, seed)?;
        matrices.push(GeneratedBellMatrix {
            seed,
            minus_count: x.minus_count(),
            rows: int_rows(x.weight()),
        });
    }
    let hash = config_hash(&format!(
        "command = bellmat-gen\nn = {}\nseed = {}\ncount = {}\n",
        args.n, args.seed, args.count
    ));

    let text = match args.format {
        OutputFormat::Json => {
            to_json(&provenanced("bellmat gen", Some(args.seed), &hash, &matrices))?
        }
        OutputFormat::Csv => {
            let mut s = provenance_lines("bellmat gen", Some(args.seed), &hash);
            s.push_str(&csv_line(&["matrix", "seed", "row", "entries..."]));
            for (i, m) in matrices.iter().enumerate() {
                for (j, row) in m.rows.iter().enumerate() {
                    let mut fields = vec![i.to_string(), m.seed.to_string(), j.to_string()];
                    fields.extend(row.iter().map(|v| v.to_string()));
                    s.push_str(&csv_line(&fields));
                }
            }
            s
        }
        OutputFormat::Md => {
            let mut s = String::new();
            for m in &matrices {
                let _ = writeln!(
                    s,
                    "Bell matrix, size {}, seed {}, {} minus entries:",
                    args.n, m.seed, m.minus_count
                );
                s.push_str(&int_rows_md(&m.rows));
                s.push('\n');
            }
            s.push_str(&md_provenance("bellmat gen", Some(args.seed), &hash));
            s
        }
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(0)
}

pub fn cmd_bellmat_validate(args: &BellmatValidateArgs) -> Result<i32> {
    let w = crate::weight_source::parse_weight_file(Path::new(&args.file))?;
    let x = BellMatrix::new(w)?;
    println!(
        "{}: valid Bell matrix of size {}, {} minus entries",
        args.file,
        x.size(),
        x.minus_count()
    );
    Ok(0)
}

#[derive(Serialize)]
struct ReduceReport {
    n: usize,
    rows: Vec<Vec<i8>>,
    row_perm: Vec<usize>,
    row_signs: Vec<i8>,
    col_perm: Vec<usize>,
    col_signs: Vec<i8>,
    canonical_rows: Vec<Vec<i8>>,
}

pub fn cmd_bellmat_reduce(args: &BellmatReduceArgs) -> Result<i32> {
    let (x, described) = if let Some(path) = &args.file {
        let w = crate::weight_source::parse_weight_file(Path::new(path))?;
        let spec = matrix_spec(&w);
        (BellMatrix::new(w)?, format!("matrix:{spec}"))
    } else if let Some(n) = args.bell {
        (
            BellMatrix::generate(n, args.seed)?,
            format!("bell:{n}:{}", args.seed),
        )
    } else {
        return Err(Error::InvalidInput(
            "select a matrix with --file or --bell".into(),
        ));
    };
    let (p_rows, p_cols) = x.reduce()?;
    let canonical = BellMatrix::<f64>::canonical(x.size())?;
    let report = ReduceReport {
        n: x.size(),
        rows: int_rows(x.weight()),
        row_perm: p_rows.perm().to_vec(),
        row_signs: p_rows.signs().to_vec(),
        col_perm: p_cols.perm().to_vec(),
        col_signs: p_cols.signs().to_vec(),
        canonical_rows: int_rows(canonical.weight()),
    };
    let hash = config_hash(&format!("command = bellmat-reduce\nweight = {described}\n"));

    let text = match args.format {
        OutputFormat::Json => to_json(&provenanced("bellmat reduce", None, &hash, &report))?,
        OutputFormat::Csv => {
            let mut s = provenance_lines("bellmat reduce", None, &hash);
            s.push_str(&csv_line(&["field", "values..."]));
            let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
            let joins = |v: &[i8]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
            let mut row = vec!["row_perm".to_string()];
            row.extend(join(&report.row_perm));
            s.push_str(&csv_line(&row));
            let mut row = vec!["row_signs".to_string()];
            row.extend(joins(&report.row_signs));
            s.push_str(&csv_line(&row));
            let mut row = vec!["col_perm".to_string()];
            row.extend(join(&report.col_perm));
            s.push_str(&csv_line(&row));
            let mut row = vec!["col_signs".to_string()];
            row.extend(joins(&report.col_signs));
            s.push_str(&csv_line(&row));
            s
        }
        OutputFormat::Md => {
            let mut s = format!("Reduction of a size-{} Bell matrix\n\n", report.n);
            s.push_str("Input:\n");
            s.push_str(&int_rows_md(&report.rows));
            s.push_str(&kv_line("row permutation", format!("{:?}", report.row_perm)));
            s.push_str(&kv_line("row signs", signs_string(&report.row_signs)));
            s.push_str(&kv_line("column permutation", format!("{:?}", report.col_perm)));
            s.push_str(&kv_line("column signs", signs_string(&report.col_signs)));
            s.push_str("\nCanonical form (signed row permutation applied first, then columns):\n");
            s.push_str(&int_rows_md(&report.canonical_rows));
            s.push_str(&md_provenance("bellmat reduce", None, &hash));
            s
        }
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// search

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Run configuration file (key = value lines; see the crate README).
    #[arg(
        long,
        value_name = "PATH",
        required_unless_present = "verify",
        conflicts_with = "verify"
    )]
    pub config: Option<PathBuf>,

    /// Verify a previously written JSON record instead of searching:
    /// recompute the fitness from the stored configuration.
    #[arg(long, value_name = "RECORD")]
    pub verify: Option<PathBuf>,

    /// Override the config file's seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Override the config file's output path.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Override the config file's output format.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,

    /// Stamp the record with the wall-clock time. Off by default so that
    /// reruns are byte-identical.
    #[arg(long)]
    pub timestamp: bool,
}

/// Renders a search record in the requested format.
pub fn render_search_record(record: &SearchRecord, format: OutputFormat) -> Result<String> {
    Ok(match format {
        OutputFormat::Json => to_json(record)?,
        OutputFormat::Csv => {
            let mut s = provenance_lines(&record.command, Some(record.seed), &record.config_hash);
            s.push_str(&csv_line(&[
                "seed",
                "n_a",
                "n_b",
                "dim_a",
                "dim_b",
                "constraint",
                "best_fitness",
                "norm_bound_deviation",
                "sum_rule_deviation",
                "generations_run",
                "top_bell_expectation",
                "top_trace_norm",
                "top_entropy",
                "top_is_extreme",
                "target",
                "target_met",
            ]));
            let top = &record.result.reports[0];
            s.push_str(&csv_line(&[
                record.seed.to_string(),
                record.space.n_a.to_string(),
                record.space.n_b.to_string(),
                record.space.dim_a.to_string(),
                record.space.dim_b.to_string(),
                constraint_spec(&record.constraint),
                real17(record.result.best_fitness),
                real17(record.result.norm_bound_deviation),
                real17(record.result.sum_rule_deviation),
                record.result.generations_run.to_string(),
                real17(top.bell_expectation),
                real17(top.trace_norm),
                top.entropy.map(real17).unwrap_or_default(),
                top.is_extreme.to_string(),
                record.target.map(real17).unwrap_or_default(),
                record.target_met.to_string(),
            ]));
            s
        }
        OutputFormat::Md => {
            let r = &record.result;
            let mut s = format!(
                "Search over ({}, {}) observables on dimensions ({}, {})\n\n",
                record.space.n_a, record.space.n_b, record.space.dim_a, record.space.dim_b
            );
            s.push_str(&kv_line("constraint", constraint_spec(&record.constraint)));
            s.push_str(&kv_line("best fitness", r.best_fitness.to_string()));
            s.push_str(&kv_line(
                "norm-bound deviation",
                r.norm_bound_deviation.to_string(),
            ));
            s.push_str(&kv_line(
                "trace-norm sum-rule deviation",
                r.sum_rule_deviation.to_string(),
            ));
            s.push_str(&kv_line("generations run", r.generations_run.to_string()));
            s.push_str(&kv_line(
                "eigenvalue pairing deviation",
                r.spectral.pairing_deviation().to_string(),
            ));
            if let Some(target) = record.target {
                s.push_str(&kv_line("target", target.to_string()));
                s.push_str(&kv_line("target met", record.target_met.to_string()));
            }
            let shown = r.spectral.eigenvalues.len().min(6);
            let eigs: Vec<String> = r.spectral.eigenvalues[..shown]
                .iter()
                .map(|x| x.to_string())
                .collect();
            s.push_str(&kv_line(
                format!("leading eigenvalues ({} of {})", shown, r.spectral.dim()).as_str(),
                eigs.join(", "),
            ));
            for (i, (&t, rep)) in r
                .spectral
                .max_index_set
                .iter()
                .zip(r.reports.iter())
                .enumerate()
            {
                let _ = writeln!(
                    s,
                    "\nExtremal eigenstate {} (eigenvalue {}):",
                    i, r.spectral.eigenvalues[t]
                );
                s.push_str(&kv_line("  bell expectation", rep.bell_expectation.to_string()));
                s.push_str(&kv_line("  trace norm", rep.trace_norm.to_string()));
                s.push_str(&kv_line("  schmidt rank", rep.schmidt_rank.to_string()));
                if let Some(e) = rep.entropy {
                    s.push_str(&kv_line("  entanglement entropy", e.to_string()));
                }
                s.push_str(&kv_line("  opening angle (deg)", rep.opening_angle_deg.to_string()));
                s.push_str(&kv_line("  extremal correlation", rep.is_extreme.to_string()));
            }
            s.push_str(&md_provenance(
                &record.command,
                Some(record.seed),
                &record.config_hash,
            ));
            s
        }
    })
}

pub fn cmd_search(args: &SearchArgs) -> Result<i32> {
    if let Some(record_path) = &args.verify {
        return cmd_search_verify(record_path, args);
    }
    let config_path = args.config.as_ref().expect("clap enforces --config");
    let text = fs::read_to_string(config_path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", config_path.display())))?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        config.ga.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.display().to_string());
    }
    if let Some(format) = args.format {
        config.format = format;
    }

    let w = config.weight.resolve()?;
    for (label, expected, actual) in [
        ("n_a", config.n_a, w.n_a()),
        ("n_b", config.n_b, w.n_b()),
    ] {
        if let Some(expected) = expected {
            if expected != actual {
                return Err(Error::InvalidInput(format!(
                    "config {label} = {expected} but the weight matrix has {label} = {actual}"
                )));
            }
        }
    }
    let space = SearchSpace::new(w.n_a(), w.n_b(), config.dim_a, config.dim_b)?;
    let hash = config_hash(&config.canonical_text()?);

    let result = ga::evolve(&w, &space, &config.ga, &config.constraint)?;
    let target_met = config
        .target
        .is_none_or(|t| result.norm_bound_deviation <= t);
    let record = SearchRecord {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: "search".into(),
        seed: config.ga.seed,
        config_hash: hash,
        timestamp: args.timestamp.then(now_timestamp),
        weight_rows: matrix_rows(&w),
        space,
        constraint: config.constraint,
        ga: config.ga.clone(),
        target: config.target,
        target_met,
        result,
    };

    let rendered = render_search_record(&record, config.format)?;
    write_output(config.out.as_deref().map(Path::new), &rendered)?;
    Ok(if target_met { 0 } else { 1 })
}

fn cmd_search_verify(record_path: &Path, args: &SearchArgs) -> Result<i32> {
    let text = fs::read_to_string(record_path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", record_path.display())))?;
    let record = parse_record(&text, &record_path.display().to_string())?;
    let report = record.verify(VERIFY_TOL)?;

    let format = args.format.unwrap_or(OutputFormat::Md);
    let rendered = match format {
        OutputFormat::Json => to_json(&provenanced(
            "search --verify",
            Some(record.seed),
            &record.config_hash,
            &report,
        ))?,
        OutputFormat::Csv => {
            let mut s = provenance_lines("search --verify", Some(record.seed), &record.config_hash);
            s.push_str(&csv_line(&[
                "stored_fitness",
                "recomputed_fitness",
                "deviation",
                "tolerance",
                "ok",
            ]));
            s.push_str(&csv_line(&[
                real17(report.stored_fitness),
                real17(report.recomputed_fitness),
                real17(report.deviation),
                real17(report.tolerance),
                report.ok.to_string(),
            ]));
            s
        }
        OutputFormat::Md => {
            let mut s = String::from("Record verification\n\n");
            s.push_str(&kv_line("stored fitness", report.stored_fitness.to_string()));
            s.push_str(&kv_line(
                "recomputed fitness",
                report.recomputed_fitness.to_string(),
            ));
            s.push_str(&kv_line("deviation", report.deviation.to_string()));
            s.push_str(&kv_line("tolerance", report.tolerance.to_string()));
            s.push_str(&kv_line("ok", report.ok.to_string()));
            s.push_str(&md_provenance(
                "search --verify",
                Some(record.seed),
                &record.config_hash,
            ));
            s
        }
    };
    write_output(args.out.as_deref(), &rendered)?;
    Ok(if report.ok { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// bounds-plot

#[derive(Debug, Args)]
pub struct BoundsPlotArgs {
    /// Smallest Bell-matrix size.
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,

    /// Largest Bell-matrix size.
    #[arg(long, default_value_t = 10)]
    pub n_max: usize,

    /// Also run the genetic search per size and report the achieved value
    /// (slower; deterministic for a fixed seed).
    #[arg(long)]
    pub ga: bool,

    /// Seed base for --ga (size N uses seed + N).
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Serialize)]
struct BoundsRow {
    n: usize,
    /// `2 N cos(pi / 2N)`, the exact quantum value of the class.
    quantum_bound: f64,
    /// `2 (N - 1)`, the hidden-variable threshold of the class.
    hv_threshold: f64,
    /// `K_G(N) 2 (N - 1)`.
    grothendieck_bound: f64,
    /// `grothendieck_bound / quantum_bound`; about 1.7 for large N.
    ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ga_achieved: Option<f64>,
}

pub fn cmd_bounds_plot(args: &BoundsPlotArgs) -> Result<i32> {
    if args.n_min < 2 || args.n_min > args.n_max {
        return Err(Error::InvalidInput(format!(
            "need 2 <= n_min <= n_max, got {} and {}",
            args.n_min, args.n_max
        )));
    }
    let mut rows = Vec::new();
    for n in args.n_min..=args.n_max {
        let quantum_bound = bell_quantum_bound::<f64>(n);
        let hv_threshold = 2.0 * (n as f64 - 1.0);
        let grothendieck_bound = grothendieck_constant::<f64>(n) * hv_threshold;
        let ga_achieved = if args.ga {
            let x = BellMatrix::<f64>::generate(n, args.seed + n as u64)?;
            let space = SearchSpace::new(n, n, 2, 2)?;
            let config = GaConfig {
                seed: args.seed + n as u64,
                stall_generations: GaConfig::default().generations,
                mutation_rate: 0.12,
                mutation_sigma: 0.3,
                ..GaConfig::default()
            };
            let result = ga::evolve(x.weight(), &space, &config, &SearchConstraint::None)?;
            Some(result.best_fitness)
        } else {
            None
        };
        rows.push(BoundsRow {
            n,
            quantum_bound,
            hv_threshold,
            grothendieck_bound,
            ratio: grothendieck_bound / quantum_bound,
            ga_achieved,
        });
    }
    let hash = config_hash(&format!(
        "command = bounds-plot\nn_min = {}\nn_max = {}\nga = {}\nseed = {}\n",
        args.n_min, args.n_max, args.ga, args.seed
    ));
    let seed = args.ga.then_some(args.seed);

    let text = match args.format {
        OutputFormat::Json => to_json(&provenanced("bounds-plot", seed, &hash, &rows))?,
        OutputFormat::Csv => {
            let mut s = provenance_lines("bounds-plot", seed, &hash);
            let mut header = vec![
                "n",
                "quantum_bound",
                "hv_threshold",
                "grothendieck_bound",
                "ratio",
            ];
            if args.ga {
                header.push("ga_achieved");
            }
            s.push_str(&csv_line(&header));
            for row in &rows {
                let mut fields = vec![
                    row.n.to_string(),
                    real17(row.quantum_bound),
                    real17(row.hv_threshold),
                    real17(row.grothendieck_bound),
                    real17(row.ratio),
                ];
                if let Some(a) = row.ga_achieved {
                    fields.push(real17(a));
                }
                s.push_str(&csv_line(&fields));
            }
            s
        }
        OutputFormat::Md => {
            let mut s = String::from("Bounds by Bell-matrix size\n\n");
            s.push_str("| N | quantum bound | HV threshold | grothendieck bound | ratio |");
            if args.ga {
                s.push_str(" GA achieved |");
            }
            s.push('\n');
            s.push_str("|---|---|---|---|---|");
            if args.ga {
                s.push_str("---|");
            }
            s.push('\n');
            for row in &rows {
                let _ = write!(
                    s,
                    "| {} | {:.6} | {} | {:.6} | {:.6} |",
                    row.n, row.quantum_bound, row.hv_threshold, row.grothendieck_bound, row.ratio
                );
                if let Some(a) = row.ga_achieved {
                    let _ = write!(s, " {a:.6} |");
                }
                s.push('\n');
            }
            s.push_str(&md_provenance("bounds-plot", seed, &hash));
            s
        }
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// gap-sample

#[derive(Debug, Args)]
pub struct GapSampleArgs {
    /// Row count of the sampled weight matrices.
    #[arg(long)]
    pub na: usize,

    /// Column count of the sampled weight matrices.
    #[arg(long)]
    pub nb: usize,

    /// Number of matrices to sample.
    #[arg(long, default_value_t = 1000)]
    pub count: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Entry distribution: uniform on [-1,1] or standard normal.
    #[arg(long, default_value = "uniform")]
    pub dist: String,

    /// Histogram bin count over the full scaled-gap range.
    #[arg(long, default_value_t = 40)]
    pub bins: usize,

    /// Numerical tolerance of the per-sample gap computation.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,

    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Serialize)]
struct GapSampleReport {
    n_a: usize,
    n_b: usize,
    count: usize,
    dist: GapDistribution,
    /// Scaled gaps range over `[0, sqrt(N_a N_b) - 1]`.
    range_lo: f64,
    range_hi: f64,
    min: f64,
    max: f64,
    mean: f64,
    histogram: Vec<usize>,
    samples: Vec<GapSampleRow>,
}

#[derive(Serialize)]
struct GapSampleRow {
    operator_norm: f64,
    hv_norm: f64,
    gap: f64,
    scaled_gap: f64,
}

pub fn cmd_gap_sample(args: &GapSampleArgs) -> Result<i32> {
    if args.count == 0 {
        return Err(Error::InvalidInput("--count must be positive".into()));
    }
    let dist: GapDistribution = args.dist.parse()?;
    let mut sampler = GapSampler::<f64>::new(args.na, args.nb, dist, args.seed, args.tol)?;
    let mut samples = Vec::with_capacity(args.count);
    for _ in 0..args.count {
        let r = sampler.sample()?;
        samples.push(GapSampleRow {
            operator_norm: r.operator_norm,
            hv_norm: r.hv_norm,
            gap: r.gap,
            scaled_gap: r.scaled_gap,
        });
    }
    let scaled: Vec<f64> = samples.iter().map(|s| s.scaled_gap).collect();
    let range_hi = ((args.na * args.nb) as f64).sqrt() - 1.0;
    let histogram = histogram_counts(&scaled, args.bins, 0.0, range_hi)?;
    let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
    let report = GapSampleReport {
        n_a: args.na,
        n_b: args.nb,
        count: args.count,
        dist,
        range_lo: 0.0,
        range_hi,
        min,
        max,
        mean,
        histogram,
        samples,
    };
    let hash = config_hash(&format!(
        "command = gap-sample\nna = {}\nnb = {}\ncount = {}\nseed = {}\ndist = {}\nbins = {}\ntol = {}\n",
        args.na, args.nb, args.count, args.seed, args.dist, args.bins, args.tol
    ));

    let text = match args.format {
        OutputFormat::Json => to_json(&provenanced("gap-sample", Some(args.seed), &hash, &report))?,
        OutputFormat::Csv => {
            let mut s = provenance_lines("gap-sample", Some(args.seed), &hash);
            s.push_str(&csv_line(&[
                "sample",
                "operator_norm",
                "hv_norm",
                "gap",
                "scaled_gap",
            ]));
            for (i, row) in report.samples.iter().enumerate() {
                s.push_str(&csv_line(&[
                    i.to_string(),
                    real17(row.operator_norm),
                    real17(row.hv_norm),
                    real17(row.gap),
                    real17(row.scaled_gap),
                ]));
            }
            s.push('\n');
            s.push_str(&csv_line(&["bin_lo", "bin_hi", "count"]));
            let width = (report.range_hi - report.range_lo) / report.histogram.len() as f64;
            for (b, count) in report.histogram.iter().enumerate() {
                s.push_str(&csv_line(&[
                    real17(report.range_lo + width * b as f64),
                    real17(report.range_lo + width * (b + 1) as f64),
                    count.to_string(),
                ]));
            }
            s
        }
        OutputFormat::Md => {
            let mut s = format!(
                "Scaled quantum gap of {} random {} x {} weight matrices\n\n",
                report.count, report.n_a, report.n_b
            );
            s.push_str(&kv_line(
                "range",
                format!("[{}, {}]", report.range_lo, report.range_hi),
            ));
            s.push_str(&kv_line("min", report.min.to_string()));
            s.push_str(&kv_line("max", report.max.to_string()));
            s.push_str(&kv_line("mean", report.mean.to_string()));
            s.push_str("\nHistogram:\n");
            let width = (report.range_hi - report.range_lo) / report.histogram.len() as f64;
            let peak = report.histogram.iter().copied().max().unwrap_or(1).max(1);
            for (b, count) in report.histogram.iter().enumerate() {
                let bar = "#".repeat(count * 50 / peak);
                let _ = writeln!(
                    s,
                    "  [{:.3}, {:.3}) {:>7} {}",
                    report.range_lo + width * b as f64,
                    report.range_lo + width * (b + 1) as f64,
                    count,
                    bar
                );
            }
            s.push_str(&md_provenance("gap-sample", Some(args.seed), &hash));
            s
        }
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// hv-verify

#[derive(Debug, Args)]
pub struct HvVerifyArgs {
    #[command(flatten)]
    pub weight: WeightArgs,

    /// Number of random hidden-variable models to draw.
    #[arg(long, default_value_t = 10000)]
    pub count: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Slack for the violation comparison and the classification.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,

    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Md)]
    pub format: OutputFormat,
}

#[derive(Serialize)]
struct HvVerifyReport {
    n_a: usize,
    n_b: usize,
    count: usize,
    hv_norm: f64,
    norm_bound: f64,
    max_abs_expectation: f64,
    /// Samples whose |expectation| exceeded the HV norm plus slack.
    violations: usize,
    local: usize,
    bell_violating: usize,
    at_quantum_bound: usize,
    /// Expectation of the deterministic maximizing corner strategy.
    corner_value: f64,
    /// Whether the corner expectation equals the HV norm bit for bit.
    corner_attains_exactly: bool,
}

pub fn cmd_hv_verify(args: &HvVerifyArgs) -> Result<i32> {
    let w = args.weight.resolve()?;
    let (n_a, n_b) = w.dims();
    let a_box = SpectralBox::unit(n_a);
    let b_box = SpectralBox::unit(n_b);
    let hv_norm = w.hv_norm()?;
    let norm_bound = w.dim_factor() * w.operator_norm()?;

    let models = hvmodel::random_hv_models(&a_box, &b_box, args.count, args.seed)?;
    let mut max_abs: f64 = 0.0;
    let mut violations = 0usize;
    let mut local = 0usize;
    let mut bell_violating = 0usize;
    let mut at_quantum_bound = 0usize;
    for model in &models {
        let v = hvmodel::hv_expectation(&w, model)?;
        max_abs = max_abs.max(v.abs());
        if v.abs() > hv_norm + args.tol {
            violations += 1;
        }
        match hvmodel::classify(v, &w, &a_box, &b_box, args.tol)? {
            hvmodel::Classification::Local => local += 1,
            hvmodel::Classification::BellViolating => bell_violating += 1,
            hvmodel::Classification::AtQuantumBound => at_quantum_bound += 1,
        }
    }
    let corner = hvmodel::maximizing_model(&w)?;
    let corner_value = hvmodel::hv_expectation(&w, &corner)?;
    let report = HvVerifyReport {
        n_a,
        n_b,
        count: args.count,
        hv_norm,
        norm_bound,
        max_abs_expectation: max_abs,
        violations,
        local,
        bell_violating,
        at_quantum_bound,
        corner_value,
        corner_attains_exactly: corner_value == hv_norm,
    };
    let hash = config_hash(&format!(
        "command = hv-verify\nweight = {}\ncount = {}\nseed = {}\ntol = {}\n",
        args.weight.describe()?,
        args.count,
        args.seed,
        args.tol
    ));

    let text = match args.format {
        OutputFormat::Json => to_json(&provenanced("hv-verify", Some(args.seed), &hash, &report))?,
        OutputFormat::Csv => {
            let mut s = provenance_lines("hv-verify", Some(args.seed), &hash);
            s.push_str(&csv_line(&[
                "n_a",
                "n_b",
                "count",
                "hv_norm",
                "norm_bound",
                "max_abs_expectation",
                "violations",
                "local",
                "bell_violating",
                "at_quantum_bound",
                "corner_value",
                "corner_attains_exactly",
            ]));
            s.push_str(&csv_line(&[
                report.n_a.to_string(),
                report.n_b.to_string(),
                report.count.to_string(),
                real17(report.hv_norm),
                real17(report.norm_bound),
                real17(report.max_abs_expectation),
                report.violations.to_string(),
                report.local.to_string(),
                report.bell_violating.to_string(),
                report.at_quantum_bound.to_string(),
                real17(report.corner_value),
                report.corner_attains_exactly.to_string(),
            ]));
            s
        }
        OutputFormat::Md => {
            let mut s = format!(
                "Hidden-variable sweep over {} random models, {} x {} weight\n\n",
                report.count, report.n_a, report.n_b
            );
            s.push_str(&kv_line("hv norm ||W||*", report.hv_norm.to_string()));
            s.push_str(&kv_line("quantum norm bound", report.norm_bound.to_string()));
            s.push_str(&kv_line(
                "max |expectation|",
                report.max_abs_expectation.to_string(),
            ));
            s.push_str(&kv_line("violations", report.violations.to_string()));
            s.push_str(&kv_line(
                "classification",
                format!(
                    "{} local, {} bell-violating, {} at the quantum bound",
                    report.local, report.bell_violating, report.at_quantum_bound
                ),
            ));
            s.push_str(&kv_line("corner expectation", report.corner_value.to_string()));
            s.push_str(&kv_line(
                "corner attains ||W||* exactly",
                report.corner_attains_exactly.to_string(),
            ));
            s.push_str(&md_provenance("hv-verify", Some(args.seed), &hash));
            s
        }
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(if report.violations == 0 { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// report

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A JSON record written by `search`.
    #[arg(long, value_name = "PATH")]
    pub record: PathBuf,

    #[arg(long, value_enum, default_value_t = OutputFormat::Md)]
    pub format: OutputFormat,

    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

pub fn cmd_report(args: &ReportArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.record)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", args.record.display())))?;
    let record = parse_record(&text, &args.record.display().to_string())?;
    let rendered = render_search_record(&record, args.format)?;
    write_output(args.out.as_deref(), &rendered)?;
    Ok(0)
}
