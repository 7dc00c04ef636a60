//! stratimpact: model-free feature impact and importance from the command
//! line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (loading/validation),
//! 3 numeric failure (no signal, rank deficiency, degenerate columns).
//! Outputs are written atomically — a failed run never leaves a partial
//! file — and identical command lines on identical inputs produce
//! byte-identical output.

use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use stratimpact::dataset::{histogram, load_csv, Dataset, FeatureKind};
use stratimpact::error::Error;
use stratimpact::evaluate::{compare_rankings, RankMethod};
use stratimpact::export;
use stratimpact::forest::TreeParams;
use stratimpact::impact::{compute_all, stability_trials, RunMode};
use stratimpact::par;
use stratimpact::pd::{catstratpd, stratpd_numeric, StratParams};
use stratimpact::synth::{gen_linear, gen_quadratic, LinearSpec};

#[derive(Parser)]
#[command(name = "stratimpact", version, about = "Feature impact and importance, straight from data")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Score every feature and write an impact/importance report
    Importance(ImportanceArgs),
    /// Export one feature's partial-dependence curve
    Pd(PdArgs),
    /// Compare ranking methods by top-k cross-validated MAE
    Topk(TopkArgs),
    /// Generate a synthetic dataset with known impacts
    Synth(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column
    #[arg(long)]
    target: String,
    /// Columns to treat as categorical (comma separated)
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    categorical: Vec<String>,
}

#[derive(Args)]
struct JobsArg {
    /// Worker threads for parallel sections (default: all cores; falls back
    /// to STRATIMPACT_JOBS). Results do not depend on this.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ImportanceArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Smallest stratum the stratifying tree may produce
    #[arg(long, default_value_t = 20)]
    min_samples_leaf: usize,
    /// Resampling trials; 1 scores the full dataset once
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Fraction of rows per trial (default 0.75 when trials > 1, else 1.0)
    #[arg(long)]
    sample_frac: Option<f64>,
    /// Resampling mode for trials: bootstrap or subsample
    #[arg(long, default_value = "subsample")]
    mode: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file (stdout when absent)
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or json
    #[arg(long, default_value = "csv")]
    format: String,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Args)]
struct PdArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Feature to export, by column name
    #[arg(long)]
    feature: String,
    #[arg(long, default_value_t = 20)]
    min_samples_leaf: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Args)]
struct TopkArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Ranking methods to compare (default: all)
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    rankers: Vec<String>,
    /// Largest k to evaluate (default: all features)
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Trees in the evaluation forest
    #[arg(long, default_value_t = 40)]
    n_trees: usize,
    #[arg(long, default_value_t = 20)]
    min_samples_leaf: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Error-curve CSV (stdout when absent)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the rankings themselves to this CSV
    #[arg(long)]
    rankings_out: Option<PathBuf>,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Args)]
struct SynthArgs {
    #[command(subcommand)]
    kind: SynthKind,
}

#[derive(Subcommand)]
enum SynthKind {
    /// y = x1^2 + x2 + 100 with x1, x2 ~ U(0,3)
    Quadratic {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Add an x3 ~ U(0,3) that never enters y
        #[arg(long)]
        with_noise: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// y = sum of beta_j x_j plus Gaussian noise
    Linear {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Coefficients, e.g. 1,2,4
        #[arg(long)]
        betas: String,
        /// Per-feature lo:hi ranges, e.g. 0:1,0:1,0:1 (default 0:1 each)
        #[arg(long)]
        ranges: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        noise_sd: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArg(_) | Error::UnknownMethod(_) => 1,
        Error::Io { .. }
        | Error::Csv(_)
        | Error::MissingTarget(_)
        | Error::UnknownColumn(_)
        | Error::UnknownFeature(_)
        | Error::BadCell { .. }
        | Error::MissingValue { .. }
        | Error::EmptyData
        | Error::TooFewRows { .. } => 2,
        Error::NotNumeric(_)
        | Error::NotCategorical(_)
        | Error::ConstantColumn(_)
        | Error::ConstantResponse
        | Error::NoSignal
        | Error::RankDeficient { .. } => 3,
    }
}

/// Write through a temp file in the destination directory so the target
/// either keeps its old content or gets the complete new content.
fn write_output(path: Option<&Path>, content: &str) -> Result<(), Error> {
    let Some(path) = path else {
        print!("{content}");
        return Ok(());
    };
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(content.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn set_jobs(jobs: &JobsArg) {
    let n = jobs.jobs.or_else(|| {
        std::env::var("STRATIMPACT_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        par::set_jobs(n);
    }
}

fn load(args: &DataArgs) -> Result<Dataset, Error> {
    load_csv(&args.data, &args.target, &args.categorical)
}

fn run_importance(args: &ImportanceArgs) -> Result<(), Error> {
    set_jobs(&args.jobs);
    let started = Instant::now();
    let ds = load(&args.data)?;
    let params = StratParams {
        min_samples_leaf: args.min_samples_leaf,
        n_strat_trees: 1,
        bootstrap_strata: false,
        seed: args.seed,
    };
    let report = if args.trials == 1 {
        compute_all(&ds, &params)?
    } else {
        let frac = args.sample_frac.unwrap_or(0.75);
        let mode: RunMode = args.mode.parse()?;
        stability_trials(&ds, &params, args.trials, frac, mode, args.seed)?
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let out = match args.format.as_str() {
        "csv" => export::report_csv(&report)?,
        "json" => export::report_json(&report, started.elapsed().as_secs_f64())?,
        other => {
            return Err(Error::InvalidArg(format!(
                "unknown format '{other}' (expected csv or json)"
            )))
        }
    };
    write_output(args.output.as_deref(), &out)
}

fn run_pd(args: &PdArgs) -> Result<(), Error> {
    set_jobs(&args.jobs);
    let ds = load(&args.data)?;
    let j = ds
        .feature_index(&args.feature)
        .ok_or_else(|| Error::UnknownFeature(args.feature.clone()))?;
    let params = StratParams {
        min_samples_leaf: args.min_samples_leaf,
        n_strat_trees: 1,
        bootstrap_strata: false,
        seed: args.seed,
    };
    let h = histogram(&ds, j);
    let out = match ds.kind(j) {
        FeatureKind::Numeric => {
            let curve = stratpd_numeric(&ds, j, &params)?;
            export::pd_curve_csv(&curve, &h)?
        }
        FeatureKind::Categorical => {
            let cat = catstratpd(&ds, j, &params)?;
            if cat.dropped_levels > 0 {
                eprintln!(
                    "warning: feature {}: {} level(s) covering {} row(s) are disconnected and exported as unobserved",
                    ds.name(j),
                    cat.dropped_levels,
                    cat.dropped_samples
                );
            }
            export::cat_pd_csv(&ds, &cat, &h)?
        }
    };
    write_output(args.output.as_deref(), &out)
}

fn run_topk(args: &TopkArgs) -> Result<(), Error> {
    set_jobs(&args.jobs);
    let ds = load(&args.data)?;
    let methods: Vec<RankMethod> = if args.rankers.is_empty() {
        RankMethod::ALL.to_vec()
    } else {
        args.rankers
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()?
    };
    let k_max = args.kmax.unwrap_or(ds.p());
    let params = TreeParams {
        min_samples_leaf: args.min_samples_leaf,
        max_features: 1.0,
        seed: args.seed,
    };
    let cmp = compare_rankings(&ds, &methods, k_max, args.folds, &params, args.n_trees, args.seed)?;
    if let Some(rpath) = &args.rankings_out {
        write_output(Some(rpath), &export::rankings_csv(&ds, &cmp.rankings)?)?;
    }
    write_output(args.output.as_deref(), &export::curves_csv(&cmp.curves)?)
}

fn parse_betas(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArg(format!("bad coefficient '{t}'")))
        })
        .collect()
}

fn parse_ranges(s: &str) -> Result<Vec<(f64, f64)>, Error> {
    s.split(',')
        .map(|t| {
            let bad = || Error::InvalidArg(format!("bad range '{t}', expected lo:hi"));
            let (lo, hi) = t.trim().split_once(':').ok_or_else(bad)?;
            Ok((
                lo.parse::<f64>().map_err(|_| bad())?,
                hi.parse::<f64>().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn run_synth(args: &SynthArgs) -> Result<(), Error> {
    let (ds, output) = match &args.kind {
        SynthKind::Quadratic { n, seed, with_noise, output } => {
            (gen_quadratic(*n, *seed, *with_noise)?, output.clone())
        }
        SynthKind::Linear { n, seed, betas, ranges, noise_sd, output } => {
            let betas = parse_betas(betas)?;
            let ranges = match ranges {
                Some(r) => parse_ranges(r)?,
                None => vec![(0.0, 1.0); betas.len()],
            };
            let spec = LinearSpec {
                n: *n,
                seed: *seed,
                betas,
                ranges,
                noise_sd: *noise_sd,
            };
            (gen_linear(&spec)?, output.clone())
        }
    };
    write_output(output.as_deref(), &export::dataset_csv(&ds, "y")?)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match &cli.cmd {
        Cmd::Importance(a) => run_importance(a),
        Cmd::Pd(a) => run_pd(a),
        Cmd::Topk(a) => run_topk(a),
        Cmd::Synth(a) => run_synth(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
