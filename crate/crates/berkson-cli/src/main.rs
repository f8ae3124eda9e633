//! Command-line front end: reproduces the study tables, computes
//! bandwidths and ratio curves, draws quantile bands, evaluates density
//! estimates for ingested samples, and runs the NO₂ pipeline and the
//! built-in acceptance suite.

mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use berkson::bandwidth::rule_of_thumb_hy_gaussian;
use berkson::bandwidth::{optimal_scalar_bandwidth, silverman_hx, BandwidthTarget};
use berkson::estimator::{default_grid, evaluate_estimator, DEFAULT_GRID_POINTS};
use berkson::experiments::{log_spaced_sizes, no2_pipeline, ratio_curve, ratio_table};
use berkson::mise_exact::BandwidthSpec;
use berkson::montecarlo::{quantile_bands, BandwidthRule};
use berkson::report;
use berkson::spectral::BerksonModel;
use berkson::BerksonError;
use clap::{Args, Parser, Subcommand};

use config::{lookup_density, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config files, or input data. Exit code 1.
    Config(String),
    /// A numeric operation failed. Exit code 2.
    Numeric(BerksonError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numeric(e) => write!(f, "numeric failure: {e}"),
        }
    }
}

impl From<BerksonError> for CliError {
    fn from(e: BerksonError) -> Self {
        CliError::Numeric(e)
    }
}

#[derive(Parser)]
#[command(
    name = "berkson",
    about = "Kernel density estimation with Berkson error: MISE tables, bandwidths, bands, and the NO2 pipeline",
    version
)]
struct Cli {
    /// Worker threads (overrides BERKSON_THREADS and config; 0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// MISE-ratio tables over a (density, error-variance, n) grid.
    Tables(TablesArgs),
    /// Exact optimal scalar bandwidth for one model.
    Bandwidth(BandwidthArgs),
    /// Exact-to-asymptotic bandwidth ratio over an n grid.
    RatioCurve(RatioCurveArgs),
    /// Pointwise quantile bands over replicated estimates.
    Bands(BandsArgs),
    /// Density estimate for an ingested sample.
    Estimate(EstimateArgs),
    /// NO2 exposure pipeline: three smoothing approaches on (wk, wb) data.
    No2(No2Args),
    /// Run the acceptance suite and report pass/fail per criterion.
    Selftest,
}

#[derive(Args)]
struct TablesArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's sample sizes.
    #[arg(long)]
    n: Option<usize>,
    /// Override the config's error variances (comma separated).
    #[arg(long, value_delimiter = ',')]
    sigma_eps2: Option<Vec<f64>>,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BandwidthArgs {
    #[arg(long)]
    density: String,
    #[arg(long)]
    sigma_eps2: f64,
    #[arg(long)]
    n: usize,
    /// y = optimal for f_Y, x = optimal for f_X, both = the pair.
    #[arg(long, default_value = "both")]
    target: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatioCurveArgs {
    #[arg(long)]
    density: String,
    #[arg(long, value_delimiter = ',')]
    sigma_eps2: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    n_min: usize,
    #[arg(long, default_value_t = 100_000)]
    n_max: usize,
    #[arg(long, default_value_t = 25)]
    n_points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BandsArgs {
    /// JSON run configuration supplying defaults; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    density: Option<String>,
    #[arg(long)]
    sigma_eps2: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// hy, hx, zero, or h=<value>.
    #[arg(long, default_value = "hy")]
    rule: String,
    #[arg(long)]
    qlo: Option<f64>,
    #[arg(long)]
    qhi: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Keep the first K replicate curves in <out>_curves.csv.
    #[arg(long, default_value_t = 0)]
    retain: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Sample CSV with header x1.
    #[arg(long)]
    sample: PathBuf,
    #[arg(long)]
    sigma_eps2: f64,
    /// hy-rot, hx-silverman, zero, or h=<value>.
    #[arg(long, default_value = "hy-rot")]
    rule: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct No2Args {
    /// Concentration CSV with header wk,wb.
    #[arg(long)]
    sample: PathBuf,
    #[arg(long, default_value_t = 0.06)]
    sigma_eps2: f64,
    /// Output stem; writes <stem>_zero.csv, <stem>_silverman.csv, <stem>_rot.csv.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are success; anything else is a usage
            // error reported on stderr with exit 1.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    init_threads(cli.threads);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Config(_) => ExitCode::from(1),
                CliError::Numeric(_) => ExitCode::from(2),
            }
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let env = std::env::var("BERKSON_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    let threads = flag.or(env).unwrap_or(0);
    if threads > 0 {
        // The global pool can only be set once; later calls are no-ops.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Tables(args) => tables(args),
        Command::Bandwidth(args) => bandwidth(args),
        Command::RatioCurve(args) => ratio_curve_cmd(args),
        Command::Bands(args) => bands(args),
        Command::Estimate(args) => estimate(args),
        Command::No2(args) => no2(args),
        Command::Selftest => selftest(),
    }
}

fn tables(args: TablesArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    if cfg.threads > 0 {
        init_threads(Some(cfg.threads));
    }
    let densities = cfg.resolve_densities()?;
    let variances = args.sigma_eps2.unwrap_or(cfg.error_variances.clone());
    if variances.iter().any(|&v| v.is_nan() || v <= 0.0) {
        return Err(CliError::Config("error variances must be > 0".into()));
    }
    let sizes = match args.n {
        Some(n) => vec![n],
        None => cfg.sample_sizes.clone(),
    };
    let mut cells = Vec::new();
    for n in sizes {
        cells.extend(ratio_table(&densities, &variances, n)?);
    }
    io::emit(args.out.as_deref(), &report::ratio_table_csv(&cells))
}

fn model_for(density: &str, sigma_eps2: f64) -> Result<BerksonModel, CliError> {
    if sigma_eps2.is_nan() || sigma_eps2 <= 0.0 {
        return Err(CliError::Config(format!("error variance {sigma_eps2} must be > 0")));
    }
    let entry = lookup_density(density)?;
    BerksonModel::isotropic(entry.mixture, sigma_eps2).map_err(CliError::Numeric)
}

fn bandwidth(args: BandwidthArgs) -> Result<(), CliError> {
    let model = model_for(&args.density, args.sigma_eps2)?;
    let targets: Vec<(&str, BandwidthTarget)> = match args.target.as_str() {
        "y" => vec![("y", BandwidthTarget::Fy)],
        "x" => vec![("x", BandwidthTarget::Fx)],
        "both" => vec![("y", BandwidthTarget::Fy), ("x", BandwidthTarget::Fx)],
        other => {
            return Err(CliError::Config(format!(
                "unknown target '{other}' (expected y, x, or both)"
            )))
        }
    };
    let rows = targets
        .into_iter()
        .map(|(name, t)| Ok((name.to_string(), optimal_scalar_bandwidth(&model, args.n, t)?)))
        .collect::<Result<Vec<_>, BerksonError>>()?;
    io::emit(args.out.as_deref(), &report::bandwidth_csv(&rows))
}

fn ratio_curve_cmd(args: RatioCurveArgs) -> Result<(), CliError> {
    if args.sigma_eps2.is_empty() {
        return Err(CliError::Config("need at least one --sigma-eps2 value".into()));
    }
    if args.n_points < 2 || args.n_min < 2 || args.n_max <= args.n_min {
        return Err(CliError::Config("need n_max > n_min ≥ 2 and n_points ≥ 2".into()));
    }
    let entry = lookup_density(&args.density)?;
    let sizes = log_spaced_sizes(args.n_min, args.n_max, args.n_points);
    let points = ratio_curve(&entry, &args.sigma_eps2, &sizes)?;
    io::emit(args.out.as_deref(), &report::ratio_curve_csv(entry.name, &points))
}

fn parse_band_rule(rule: &str) -> Result<BandwidthRule, CliError> {
    match rule {
        "hy" => Ok(BandwidthRule::OptimalFy),
        "hx" => Ok(BandwidthRule::OptimalFx),
        "zero" => Ok(BandwidthRule::Zero),
        other => match other.strip_prefix("h=") {
            Some(v) => {
                let h: f64 = v
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad bandwidth value '{v}'")))?;
                Ok(BandwidthRule::Fixed(h))
            }
            None => Err(CliError::Config(format!(
                "unknown rule '{other}' (expected hy, hx, zero, or h=<value>)"
            ))),
        },
    }
}

fn bands(args: BandsArgs) -> Result<(), CliError> {
    let cfg = args.config.as_deref().map(RunConfig::load).transpose()?;
    let missing = |what: &str| CliError::Config(format!("--{what} required (flag or config)"));
    let entry = match (&args.density, &cfg) {
        (Some(name), _) => lookup_density(name)?,
        (None, Some(cfg)) => {
            let all = cfg.resolve_densities()?;
            all.into_iter().next().ok_or_else(|| missing("density"))?
        }
        (None, None) => return Err(missing("density")),
    };
    let from_cfg = |f: fn(&RunConfig) -> Option<f64>| cfg.as_ref().and_then(f);
    let sigma_eps2 = args
        .sigma_eps2
        .or_else(|| from_cfg(|c| c.error_variances.first().copied()))
        .ok_or_else(|| missing("sigma-eps2"))?;
    if sigma_eps2.is_nan() || sigma_eps2 <= 0.0 {
        return Err(CliError::Config(format!("error variance {sigma_eps2} must be > 0")));
    }
    let n = args
        .n
        .or_else(|| cfg.as_ref().and_then(|c| c.sample_sizes.first().copied()))
        .ok_or_else(|| missing("n"))?;
    let replicates =
        args.replicates.or_else(|| cfg.as_ref().map(|c| c.replicates)).unwrap_or(100);
    let qlo = args.qlo.or_else(|| from_cfg(|c| Some(c.quantiles.0))).unwrap_or(0.1);
    let qhi = args.qhi.or_else(|| from_cfg(|c| Some(c.quantiles.1))).unwrap_or(0.9);
    let seed = args.seed.or_else(|| cfg.as_ref().map(|c| c.seed)).unwrap_or(20260810);

    let model = BerksonModel::isotropic(entry.mixture, sigma_eps2).map_err(CliError::Numeric)?;
    let rule = parse_band_rule(&args.rule)?;
    let band = quantile_bands(&model, n, replicates, rule, qlo, qhi, seed, args.retain)?;
    eprintln!("bandwidth: {}", band.bandwidth);
    if let (Some(out), Some(curves)) = (args.out.as_ref(), band.replicate_curves.as_ref()) {
        let mut text = String::from("y");
        for r in 0..curves.len() {
            text.push_str(&format!(",replicate{r}"));
        }
        text.push('\n');
        for (g, &y) in band.grid.iter().enumerate() {
            text.push_str(&report::fmt17(y));
            for c in curves {
                text.push(',');
                text.push_str(&report::fmt17(c[g]));
            }
            text.push('\n');
        }
        let path = out.with_file_name(format!(
            "{}_curves.csv",
            out.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default()
        ));
        io::emit(Some(&path), &text)?;
    }
    io::emit(args.out.as_deref(), &report::band_csv(&band))
}

fn estimate(args: EstimateArgs) -> Result<(), CliError> {
    let sample = io::read_sample_csv(&args.sample)?;
    if sample.dim() != 1 {
        return Err(CliError::Config("estimate handles 1-D samples (header x1)".into()));
    }
    if args.sigma_eps2.is_nan() || args.sigma_eps2 <= 0.0 {
        return Err(CliError::Config(format!("error variance {} must be > 0", args.sigma_eps2)));
    }
    let h = match args.rule.as_str() {
        "hy-rot" => rule_of_thumb_hy_gaussian(sample.variance1(), args.sigma_eps2, sample.n())?,
        "hx-silverman" => silverman_hx(sample.variance1().sqrt(), sample.iqr1(), sample.n())?,
        "zero" => 0.0,
        other => match other.strip_prefix("h=") {
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Config(format!("bad bandwidth value '{v}'")))?,
            None => {
                return Err(CliError::Config(format!(
                    "unknown rule '{other}' (expected hy-rot, hx-silverman, zero, or h=<value>)"
                )))
            }
        },
    };
    let grid = default_grid(&sample, args.sigma_eps2, h, DEFAULT_GRID_POINTS);
    let curve = evaluate_estimator(&sample, args.sigma_eps2, &BandwidthSpec::Scalar(h), &grid)?;
    eprintln!("bandwidth: {h}");
    io::emit(args.out.as_deref(), &report::curve_csv(&curve))
}

fn no2(args: No2Args) -> Result<(), CliError> {
    let records = io::read_concentration_csv(&args.sample)?;
    let result = no2_pipeline(&records, args.sigma_eps2)?;
    eprintln!(
        "n = {}, h_silverman = {}, h_rot = {}",
        result.sample.n(),
        result.h_silverman,
        result.h_rot
    );
    let stem = args.out.to_string_lossy();
    for (suffix, curve) in [
        ("zero", &result.curve_zero),
        ("silverman", &result.curve_silverman),
        ("rot", &result.curve_rot),
    ] {
        let path = PathBuf::from(format!("{stem}_{suffix}.csv"));
        io::emit(Some(&path), &report::curve_csv(curve))?;
    }
    Ok(())
}

fn selftest() -> Result<(), CliError> {
    let reports = berkson::selftest::run_all();
    let mut all = true;
    for r in &reports {
        println!("{r}");
        all &= r.passed;
    }
    if all {
        Ok(())
    } else {
        Err(CliError::Numeric(BerksonError::Domain(
            "one or more acceptance criteria failed".into(),
        )))
    }
}
