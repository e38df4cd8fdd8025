//! Command-line driver for isotonic review-score calibration.
//!
//! Subcommands cover the full pipeline: `simulate` writes a synthetic
//! review world, `calibrate` runs the mechanism on a CSV dataset,
//! `evaluate` scores both mechanism variants against ground truth (on a
//! fixed dataset or over replicated synthetic worlds), `verify-truthfulness`
//! brute-forces the strategyproofness property on a small instance, and
//! `report` pretty-prints a saved evaluation report.
//!
//! Every run that writes files also writes `manifest.json` recording the
//! tool version, resolved configuration, seed, SHA-256 digests of the
//! inputs, the output list, and wall-clock duration. Outputs are never
//! overwritten unless `--force` is given. Exit codes: 0 success, 1 invalid
//! input or configuration, 2 I/O failure, 3 internal error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use isomech::data::{load_dataset, save_dataset, DataPaths};
use isomech::error::{Error, Result};
use isomech::eval::{evaluate_static, run_paired_experiment, CombinedReport};
use isomech::io::{
    read_theta_csv, write_calibration_csv, write_figure_csv, write_json_pretty,
    write_residuals_csv, write_theta_csv,
};
use isomech::isotonic::TieMode;
use isomech::mechanism::{residual_report, run_mechanism, MechanismOptions, Variant, WeightMode};
use isomech::sim::{collect_reports, gen_world, PolicyAssignment, ReportPolicy, WorldConfig};
use isomech::truthful::{verify_truthful, UtilitySpec};

#[derive(Parser)]
#[command(
    name = "isomech",
    version,
    about = "Isotonic calibration of peer-review scores from author rankings",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic review world and write it as CSV data.
    Simulate(SimulateArgs),
    /// Run the calibration mechanism on a CSV dataset.
    Calibrate(CalibrateArgs),
    /// Evaluate both mechanism variants against ground truth.
    Evaluate(EvaluateArgs),
    /// Brute-force check that truthful ranking maximizes expected utility.
    VerifyTruthfulness(VerifyArgs),
    /// Pretty-print a saved evaluation report.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// World configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the generated CSVs.
    #[arg(long)]
    out: PathBuf,
    /// Root seed; overrides the seed in the config file.
    #[arg(long)]
    seed: u64,
    /// Reporting policy for every eligible author:
    /// truthful | noisy-swap:<p> | threshold-gaming:<t>.
    #[arg(long, default_value = "truthful")]
    policy: String,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
}

#[derive(Copy, Clone, ValueEnum)]
enum VariantArg {
    Full,
    Partition,
}

#[derive(Copy, Clone, ValueEnum)]
enum TiesArg {
    Equality,
    Dominance,
}

#[derive(Copy, Clone, ValueEnum)]
enum WeightsArg {
    Unit,
    Reviews,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Directory holding submissions/reviews/authorships/rankings CSVs.
    #[arg(long)]
    data: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Full)]
    variant: VariantArg,
    #[arg(long, value_enum, default_value_t = TiesArg::Equality)]
    ties: TiesArg,
    #[arg(long, value_enum, default_value_t = WeightsArg::Unit)]
    weights: WeightsArg,
    /// Absolute-residual threshold for flagging papers.
    #[arg(long, default_value_t = 1.0)]
    flag_threshold: f64,
    /// Review-scale minimum.
    #[arg(long, default_value_t = 1.0)]
    scale_min: f64,
    /// Review-scale maximum.
    #[arg(long, default_value_t = 10.0)]
    scale_max: f64,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Fixed dataset directory (requires ground truth; see --theta).
    #[arg(long, conflicts_with = "config")]
    data: Option<PathBuf>,
    /// Ground-truth CSV for --data mode (default: <data>/theta.csv).
    #[arg(long, requires = "data")]
    theta: Option<PathBuf>,
    /// World configuration (JSON) for replicated synthetic evaluation.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Number of synthetic replications (config mode only).
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Worker threads for replications.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Root seed; required in config mode, overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Reporting policy in config mode:
    /// truthful | noisy-swap:<p> | threshold-gaming:<t>.
    #[arg(long, default_value = "truthful")]
    policy: String,
    #[arg(long, value_enum, default_value_t = TiesArg::Equality)]
    ties: TiesArg,
    #[arg(long, value_enum, default_value_t = WeightsArg::Unit)]
    weights: WeightsArg,
    #[arg(long, default_value_t = 1.0)]
    flag_threshold: f64,
    /// Review-scale minimum (data mode).
    #[arg(long, default_value_t = 1.0)]
    scale_min: f64,
    /// Review-scale maximum (data mode).
    #[arg(long, default_value_t = 10.0)]
    scale_max: f64,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Latent qualities, comma-separated (at most 7).
    #[arg(long)]
    theta: String,
    /// Utility: power:<exponent> (convex power) or accept:<threshold>.
    #[arg(long)]
    utility: String,
    /// Review-noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Monte Carlo draws (shared across reports).
    #[arg(long, default_value_t = 20_000)]
    draws: usize,
    /// Root seed for the noise draws.
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Path to a report.json written by `evaluate`.
    path: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    let started = Instant::now();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args, started),
        Command::Calibrate(args) => cmd_calibrate(args, started),
        Command::Evaluate(args) => cmd_evaluate(args, started),
        Command::VerifyTruthfulness(args) => cmd_verify(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Invalid(_) => 1,
                Error::Io { .. } => 2,
                Error::Internal(_) => 3,
            };
            std::process::exit(code);
        }
    }
}

/// Reproducibility record written alongside every file-producing run.
#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// SHA-256 digests of the input files, keyed by path.
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    duration_ms: u64,
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn digest_inputs(paths: &[&Path]) -> Result<BTreeMap<String, String>> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), sha256_hex(p)?)))
        .collect()
}

/// Refuses to clobber any planned output unless `--force` was given; the
/// check runs before any work so failed runs leave no partial artifacts.
fn preflight(paths: &[PathBuf], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    for path in paths {
        if path.exists() {
            return Err(Error::io(
                path,
                std::io::Error::new(
                    std::io::ErrorKind::AlreadyExists,
                    "output already exists (pass --force to overwrite)",
                ),
            ));
        }
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes to standard output, treating a closed pipe (e.g. `| head`) as
/// success rather than an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(Error::io("stdout", e)),
    }
}

/// Byte offset of a 1-based (line, column) position reported by the JSON
/// parser.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    text.split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum::<usize>()
        + column.saturating_sub(1)
}

fn read_config(path: &Path) -> Result<WorldConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::invalid(format!("missing file: {}", path.display()))
        } else {
            Error::io(path, e)
        }
    })?;
    let config: WorldConfig = serde_json::from_str(&text).map_err(|e| {
        let offset = byte_offset(&text, e.line(), e.column());
        Error::invalid(format!("{}: {e} (byte offset {offset})", path.display()))
    })?;
    config.validate()?;
    Ok(config)
}

fn parse_policy(spec: &str) -> Result<ReportPolicy> {
    if spec == "truthful" {
        return Ok(ReportPolicy::Truthful);
    }
    if let Some(p) = spec.strip_prefix("noisy-swap:") {
        let p: f64 =
            p.parse().map_err(|_| Error::invalid(format!("bad swap probability in {spec:?}")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("swap probability {p} outside [0, 1]")));
        }
        return Ok(ReportPolicy::NoisySwap { p });
    }
    if let Some(t) = spec.strip_prefix("threshold-gaming:") {
        let threshold: f64 =
            t.parse().map_err(|_| Error::invalid(format!("bad threshold in {spec:?}")))?;
        return Ok(ReportPolicy::ThresholdGaming { threshold });
    }
    Err(Error::invalid(format!(
        "unknown policy {spec:?}; expected truthful, noisy-swap:<p>, or threshold-gaming:<t>"
    )))
}

fn parse_utility(spec: &str) -> Result<UtilitySpec> {
    if let Some(p) = spec.strip_prefix("power:") {
        let p: f64 =
            p.parse().map_err(|_| Error::invalid(format!("bad exponent in {spec:?}")))?;
        let u = UtilitySpec::ConvexPower(p);
        u.validate()?;
        return Ok(u);
    }
    if let Some(t) = spec.strip_prefix("accept:") {
        let t: f64 =
            t.parse().map_err(|_| Error::invalid(format!("bad threshold in {spec:?}")))?;
        let u = UtilitySpec::AcceptCount(t);
        u.validate()?;
        return Ok(u);
    }
    Err(Error::invalid(format!(
        "unknown utility {spec:?}; expected power:<exponent> or accept:<threshold>"
    )))
}

fn parse_theta(spec: &str) -> Result<Vec<f64>> {
    let theta: Vec<f64> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad theta value {:?}", s.trim())))
        })
        .collect::<Result<_>>()?;
    Ok(theta)
}

fn mechanism_options(
    variant: Variant,
    ties: TiesArg,
    weights: WeightsArg,
    flag_threshold: f64,
) -> MechanismOptions {
    MechanismOptions {
        variant,
        tie_mode: match ties {
            TiesArg::Equality => TieMode::Equality,
            TiesArg::Dominance => TieMode::Dominance,
        },
        weight_mode: match weights {
            WeightsArg::Unit => WeightMode::Unit,
            WeightsArg::Reviews => WeightMode::ReviewCount,
        },
        flag_threshold,
    }
}

fn write_manifest(
    out_dir: &Path,
    command: &str,
    config: serde_json::Value,
    seed: Option<u64>,
    inputs: BTreeMap<String, String>,
    outputs: &[PathBuf],
    started: Instant,
) -> Result<()> {
    let manifest = RunManifest {
        tool: "isomech",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config,
        seed,
        inputs,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        duration_ms: started.elapsed().as_millis() as u64,
    };
    write_json_pretty(&out_dir.join("manifest.json"), &manifest, true)
}

fn cmd_simulate(args: SimulateArgs, started: Instant) -> Result<()> {
    let mut config = read_config(&args.config)?;
    config.seed = args.seed;
    let policy = parse_policy(&args.policy)?;
    let assignment = PolicyAssignment::uniform(policy.clone());

    ensure_dir(&args.out)?;
    let paths = DataPaths::from_dir(&args.out);
    let theta_path = args.out.join("theta.csv");
    let outputs = vec![
        paths.submissions.clone(),
        paths.reviews.clone(),
        paths.authorships.clone(),
        paths.rankings.clone(),
        theta_path.clone(),
        args.out.join("manifest.json"),
    ];
    preflight(&outputs, args.force)?;

    let mut world = gen_world(&config)?;
    collect_reports(&mut world, &assignment)?;
    save_dataset(&world.dataset, &paths)?;
    write_theta_csv(&theta_path, &world.theta, true)?;

    let config_json = serde_json::json!({
        "world": config,
        "policy": policy.to_string(),
    });
    write_manifest(
        &args.out,
        "simulate",
        config_json,
        Some(args.seed),
        digest_inputs(&[&args.config])?,
        &outputs,
        started,
    )
}

fn cmd_calibrate(args: CalibrateArgs, started: Instant) -> Result<()> {
    let variant = match args.variant {
        VariantArg::Full => Variant::Full,
        VariantArg::Partition => Variant::TopicPartition,
    };
    let options = mechanism_options(variant, args.ties, args.weights, args.flag_threshold);
    options.validate()?;

    let paths = DataPaths::from_dir(&args.data);
    let dataset = load_dataset(&paths, (args.scale_min, args.scale_max))?;

    ensure_dir(&args.out)?;
    let calibration_path = args.out.join("calibration.csv");
    let residuals_path = args.out.join("residuals.csv");
    let outputs =
        vec![calibration_path.clone(), residuals_path.clone(), args.out.join("manifest.json")];
    preflight(&outputs, args.force)?;

    let result = run_mechanism(&dataset, &options)?;
    write_calibration_csv(&calibration_path, &dataset, &result, true)?;
    write_residuals_csv(&residuals_path, &residual_report(&result, &dataset), true)?;

    let config_json = serde_json::json!({
        "options": options,
        "scale": [args.scale_min, args.scale_max],
        "data_dir": args.data.display().to_string(),
    });
    write_manifest(
        &args.out,
        "calibrate",
        config_json,
        None,
        digest_inputs(&[
            &paths.submissions,
            &paths.reviews,
            &paths.authorships,
            &paths.rankings,
        ])?,
        &outputs,
        started,
    )
}

fn cmd_evaluate(args: EvaluateArgs, started: Instant) -> Result<()> {
    let options =
        mechanism_options(Variant::Full, args.ties, args.weights, args.flag_threshold);
    options.validate()?;
    if args.jobs == 0 {
        return Err(Error::invalid("--jobs must be at least 1"));
    }

    ensure_dir(&args.out)?;
    let report_path = args.out.join("report.json");
    let figure_path = args.out.join("figure1.csv");
    let outputs = vec![report_path.clone(), figure_path.clone(), args.out.join("manifest.json")];
    preflight(&outputs, args.force)?;

    let (report, config_json, seed, inputs): (
        CombinedReport,
        serde_json::Value,
        Option<u64>,
        BTreeMap<String, String>,
    ) = match (&args.data, &args.config) {
        (Some(data_dir), None) => {
            if args.reps != 1 {
                return Err(Error::invalid("--reps requires --config (synthetic mode)"));
            }
            let paths = DataPaths::from_dir(data_dir);
            let dataset = load_dataset(&paths, (args.scale_min, args.scale_max))?;
            let theta_path =
                args.theta.clone().unwrap_or_else(|| data_dir.join("theta.csv"));
            let theta = read_theta_csv(&theta_path)?;
            let report = evaluate_static(&dataset, &theta, &options)?;
            let config_json = serde_json::json!({
                "options": options,
                "scale": [args.scale_min, args.scale_max],
                "data_dir": data_dir.display().to_string(),
            });
            let inputs = digest_inputs(&[
                &paths.submissions,
                &paths.reviews,
                &paths.authorships,
                &paths.rankings,
                &theta_path,
            ])?;
            (report, config_json, None, inputs)
        }
        (None, Some(config_path)) => {
            let seed = args.seed.ok_or_else(|| {
                Error::invalid("--seed is required when evaluating a synthetic config")
            })?;
            let mut config = read_config(config_path)?;
            config.seed = seed;
            let policy = parse_policy(&args.policy)?;
            let assignment = PolicyAssignment::uniform(policy.clone());
            if args.reps == 0 {
                return Err(Error::invalid("--reps must be at least 1"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(args.jobs)
                .build()
                .map_err(|e| Error::internal(format!("thread pool: {e}")))?;
            let report = pool
                .install(|| run_paired_experiment(&config, &assignment, &options, args.reps))?;
            let config_json = serde_json::json!({
                "world": config,
                "policy": policy.to_string(),
                "options": options,
                "reps": args.reps,
            });
            let inputs = digest_inputs(&[config_path.as_path()])?;
            (report, config_json, Some(seed), inputs)
        }
        _ => {
            return Err(Error::invalid(
                "evaluate needs exactly one of --data <dir> or --config <file>",
            ));
        }
    };

    write_json_pretty(&report_path, &report, true)?;
    write_figure_csv(&figure_path, &report.figure, true)?;
    write_manifest(&args.out, "evaluate", config_json, seed, inputs, &outputs, started)
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let theta = parse_theta(&args.theta)?;
    let utility = parse_utility(&args.utility)?;
    let verdict = verify_truthful(&theta, &utility, args.noise, args.draws, args.seed)?;

    #[derive(Serialize)]
    struct VerifyConfig {
        theta: Vec<f64>,
        utility: UtilitySpec,
        noise_stddev: f64,
        n_draws: usize,
        seed: u64,
    }
    #[derive(Serialize)]
    struct VerifyOutput {
        truthful_optimal: bool,
        truthful_report: Vec<usize>,
        best_report: Vec<usize>,
        truthful_utility: f64,
        best_utility: f64,
        margin: f64,
        tolerance: f64,
        config: VerifyConfig,
    }
    let output = VerifyOutput {
        truthful_optimal: verdict.truthful_optimal,
        truthful_report: verdict.truthful_report,
        best_report: verdict.best_report,
        truthful_utility: verdict.truthful_utility,
        best_utility: verdict.best_utility,
        margin: verdict.margin,
        tolerance: verdict.tolerance,
        config: VerifyConfig {
            theta,
            utility,
            noise_stddev: args.noise,
            n_draws: args.draws,
            seed: args.seed,
        },
    };
    let mut text = serde_json::to_string_pretty(&output)
        .map_err(|e| Error::internal(format!("JSON serialization failed: {e}")))?;
    text.push('\n');
    emit(&text)
}

fn get<'a>(value: &'a serde_json::Value, path: &[&str]) -> Option<&'a serde_json::Value> {
    let mut v = value;
    for key in path {
        v = v.get(key)?;
    }
    Some(v)
}

fn fnum(value: &serde_json::Value, path: &[&str]) -> Option<f64> {
    get(value, path)?.as_f64()
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::invalid(format!("missing file: {}", args.path.display()))
        } else {
            Error::io(&args.path, e)
        }
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
        let offset = byte_offset(&text, e.line(), e.column());
        Error::invalid(format!("{}: {e} (byte offset {offset})", args.path.display()))
    })?;

    match summarize_report(&value) {
        Some(s) => emit(&s),
        None => {
            // Not an evaluation report; show it verbatim.
            let mut pretty = serde_json::to_string_pretty(&value)
                .map_err(|e| Error::internal(format!("JSON serialization failed: {e}")))?;
            pretty.push('\n');
            emit(&pretty)
        }
    }
}

fn summarize_report(v: &serde_json::Value) -> Option<String> {
    use std::fmt::Write;
    let mut out = String::new();
    let reps = get(v, &["replications"])?.as_u64()?;
    write!(out, "replications {reps}").ok()?;
    if let Some(seed) = get(v, &["seed"]).and_then(|s| s.as_u64()) {
        write!(out, "  seed {seed}").ok()?;
    }
    if let Some(policy) = get(v, &["policy"]).and_then(|s| s.as_str()) {
        write!(out, "  policy {policy}").ok()?;
    }
    out.push('\n');

    for (label, key) in [("full", "full"), ("partition", "partition")] {
        let mse_raw = fnum(v, &[key, "overall", "mse_raw"])?;
        let mse_mod = fnum(v, &[key, "overall", "mse_modified"])?;
        let mae_raw = fnum(v, &[key, "overall", "mae_raw"])?;
        let mae_mod = fnum(v, &[key, "overall", "mae_modified"])?;
        let imp_mse = fnum(v, &[key, "improvement", "mse_pct"])?;
        let imp_mae = fnum(v, &[key, "improvement", "mae_pct"])?;
        writeln!(
            out,
            "{label:9} MSE {mse_raw:.4} -> {mse_mod:.4} ({imp_mse:+.2}%)   MAE {mae_raw:.4} -> {mae_mod:.4} ({imp_mae:+.2}%)"
        )
        .ok()?;
        let reg = get(v, &[key, "regression_mse"])?;
        match reg.get("status").and_then(|s| s.as_str()) {
            Some("ok") => {
                writeln!(
                    out,
                    "{:9} MSE-improvement slope {:.4} (intercept {:.4}, p {:.3e}, {} authors)",
                    "",
                    fnum(reg, &["slope"])?,
                    fnum(reg, &["intercept"])?,
                    fnum(reg, &["p_value"])?,
                    get(reg, &["n_points"])?.as_u64()?
                )
                .ok()?;
            }
            Some("undefined") => {
                writeln!(
                    out,
                    "{:9} MSE-improvement regression undefined: {}",
                    "",
                    get(reg, &["reason"])?.as_str().unwrap_or("?")
                )
                .ok()?;
            }
            _ => return None,
        }
    }

    let paired = get(v, &["paired"])?;
    writeln!(
        out,
        "paired    full slope positive {}/{}  partition slope smaller {}/{}  both {}/{}",
        get(paired, &["full_slope_positive"])?.as_u64()?,
        get(paired, &["replications"])?.as_u64()?,
        get(paired, &["partition_slope_smaller"])?.as_u64()?,
        get(paired, &["replications"])?.as_u64()?,
        get(paired, &["both"])?.as_u64()?,
        get(paired, &["replications"])?.as_u64()?,
    )
    .ok()?;

    let figure = get(v, &["figure"])?.as_array()?;
    writeln!(
        out,
        "{:>6} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "length", "authors", "mse_raw", "mse_full", "mse_part", "mae_raw", "mae_full", "mae_part"
    )
    .ok()?;
    for row in figure {
        writeln!(
            out,
            "{:>6} {:>9} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            get(row, &["ranking_length"])?.as_u64()?,
            get(row, &["n_authors"])?.as_u64()?,
            fnum(row, &["mse_raw"])?,
            fnum(row, &["mse_full"])?,
            fnum(row, &["mse_partition"])?,
            fnum(row, &["mae_raw"])?,
            fnum(row, &["mae_full"])?,
            fnum(row, &["mae_partition"])?,
        )
        .ok()?;
    }
    Some(out)
}
