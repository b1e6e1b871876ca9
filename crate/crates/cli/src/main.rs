//! `renyi-quant`: run high-rate quantization experiments from a JSON config.
//!
//! Exit status is 0 when every check passes, 2 when a run completes but some
//! check misses its tolerance, and 1 on config or hypothesis errors.

mod format;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use renyi_quant::experiments::{self, Check, Experiment, ExperimentConfig};
use renyi_quant::theory;
use renyi_quant::{Density, Error};

use format::sig9;

const CONFIG_HELP: &str = "\
CONFIG FILE (JSON)
  source            density to quantize (for mismatch: the design density g)
  mismatch_source   density actually quantized in mismatch runs (f)
  alpha             Renyi order; 0 <= alpha < 1, sweeps need alpha > 0
  r                 distortion power, > 1                    [default: 2]
  moment_slack      delta in the moment condition E|X|^(r+delta) [default: 1]
  interval          {\"lo\": c, \"hi\": d}, the set A1 = (c, d]
                                                [default: interquartile range]
  n_grid            strictly increasing cell counts  [default: 4, 8, ..., 4096]
  refine_codepoints move codepoints to cell centroids       [default: false]
  eval_points       cells tracked by `sanity`           [default: median, mode]
  name              output file stem               [default: config file stem]
  tolerances        ratio 0.05, entropy_density 0.02, normalization 0.02,
                    restricted_distortion 0.05, distortion_share 0.02,
                    coincidence 0.05, distortion_measure 0.05,
                    mismatch_shift 0.02, mismatch_distortion 0.05,
                    single_cell 0.05, restricted_entropy 3.0,
                    identity 1e-9, trend_floor 1e-9

DENSITIES
  {\"family\": \"gaussian\", \"mean\": 0, \"sigma\": 1}
  {\"family\": \"uniform\", \"a\": 0, \"b\": 1}
  {\"family\": \"laplacian\", \"mean\": 0, \"scale\": 1}
  {\"family\": \"exponential\", \"rate\": 1, \"shift\": 0}
  {\"family\": \"piecewise_linear\", \"knots\": [[0, 0], [1, 2], [2, 0]]}
  {\"family\": \"mixture\", \"components\": [{\"weight\": 0.5, \"density\": {..}}]}
  {\"family\": \"restricted\", \"base\": {..}, \"interval\": {\"lo\": 0, \"hi\": null}}
  {\"family\": \"tilted\", \"base\": {..}, \"beta\": 0.6}
  {\"family\": \"point_density\", \"base\": {..}, \"alpha\": 0.5, \"r\": 2}

OVERRIDES
  Trailing KEY=VALUE pairs edit the config before validation. Keys are
  dotted paths (source.sigma=2, n_grid.0=8, tolerances.ratio=0.1); values
  are JSON, or plain strings when they do not parse.

OUTPUT
  <name>_<experiment>.csv and <name>_<experiment>_summary.json in
  --output-dir. RENYI_QUANT_THREADS caps sweep threads (0 or unset: all cores).

EXIT STATUS
  0 all checks pass, 2 a check missed its tolerance, 1 config or hypothesis error";

#[derive(Parser)]
#[command(name = "renyi-quant", version, about = "Renyi-entropy-constrained scalar quantization experiments", after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep n and compare e^{rH}D with the quantization coefficient Q
    Asymptotics(RunArgs),
    /// Per-cell entropy ratios on A1 and its complement
    EntropyDensity(RunArgs),
    /// Share of distortion falling in A1 against the tilted measure
    DistortionDensity(RunArgs),
    /// Quantize mismatch_source with companders designed for source
    Mismatch(RunArgs),
    /// Cell probabilities shrink and restricted entropies grow
    Sanity(RunArgs),
    /// Print limit values without running a sweep
    Predict(ConfigArgs),
    /// Split-bound and point-density optimality checks
    LemmaCheck(ConfigArgs),
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// JSON experiment config
    #[arg(long, short)]
    config: PathBuf,
    /// Config overrides
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(clap::Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory for the CSV and summary files (created if missing)
    #[arg(long, short, default_value = ".")]
    output_dir: PathBuf,
}

enum Failure {
    Error(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<bool, Failure> {
    let (experiment, args) = match command {
        Command::Asymptotics(a) => (Experiment::Asymptotics, a),
        Command::EntropyDensity(a) => (Experiment::EntropyDensity, a),
        Command::DistortionDensity(a) => (Experiment::DistortionDensity, a),
        Command::Mismatch(a) => (Experiment::Mismatch, a),
        Command::Sanity(a) => (Experiment::Sanity, a),
        Command::Predict(a) => {
            let cfg = load(&a)?;
            predict(&cfg)?;
            return Ok(true);
        }
        Command::LemmaCheck(a) => {
            let cfg = load(&a)?;
            let report = experiments::run_lemma_check(&cfg)?;
            print_checks(&report.checks);
            return Ok(report.passed);
        }
    };
    let cfg = load(&args.config)?;
    let report = experiments::run(experiment, &cfg)?;

    let stem = cfg.name.clone().unwrap_or_else(|| file_stem(&args.config.config));
    let base = format!("{stem}_{}", experiment.slug());
    fs::create_dir_all(&args.output_dir)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", args.output_dir.display())))?;
    let csv = args.output_dir.join(format!("{base}.csv"));
    let summary = args.output_dir.join(format!("{base}_summary.json"));
    write(&csv, &report.to_csv())?;
    write(&summary, &report.summary_json())?;

    print_checks(&report.checks);
    println!("wrote {} and {}", csv.display(), summary.display());
    Ok(report.passed)
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(&args.config).map_err(|e| Error::Config {
        field: "config".into(),
        message: format!("cannot read {}: {e}", args.config.display()),
    })?;
    Ok(ExperimentConfig::from_json_with_overrides(&text, &args.overrides)?)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        println!("{mark} {:<28} value={} target={} tol={}", c.name, sig9(c.value), sig9(c.target), sig9(c.tolerance));
    }
}

fn predict(cfg: &ExperimentConfig) -> Result<(), Error> {
    let (alpha, r) = (cfg.alpha, cfg.r);
    let g = cfg.build_source()?;
    let p = theory::rate_params(alpha, r)?;
    println!("alpha={}", sig9(alpha));
    println!("r={}", sig9(r));
    println!("beta1={}", sig9(p.beta1));
    println!("beta2={}", sig9(p.beta2));
    println!("C={}", sig9(p.c_r));
    line("Q", theory::quantization_coefficient(&g, alpha, r))?;
    if let Some(f) = cfg.build_mismatch_source()? {
        mismatch_lines(&g, &f, alpha, r)?;
    }
    Ok(())
}

fn mismatch_lines(g: &Density, f: &Density, alpha: f64, r: f64) -> Result<(), Error> {
    if alpha > 0.0 {
        line("renyi_divergence", theory::renyi_divergence(f, g, alpha))?;
    }
    line("kl_divergence", theory::kullback_leibler(f, g))?;
    line("Q_mismatch", theory::quantization_coefficient(f, alpha, r))?;
    line("entropy_shift", theory::mismatch_entropy_shift(g, f, alpha, r))?;
    line("distortion_limit", theory::mismatch_distortion_limit(g, f, alpha, r))?;
    line("mismatch_loss", theory::mismatch_loss(g, f, alpha, r))?;
    line("mismatch_loss_fixed_rate", theory::mismatch_loss_fixed_rate(g, f, r))?;
    line("mismatch_loss_shannon", theory::mismatch_loss_shannon(g, f, r))?;
    Ok(())
}

/// Divergent integrals print as `inf`; other errors abort.
fn line(name: &str, value: renyi_quant::Result<f64>) -> Result<(), Error> {
    match value {
        Ok(v) => println!("{name}={}", sig9(v)),
        Err(Error::InfiniteIntegral(_)) => println!("{name}=inf"),
        Err(e) => return Err(e),
    }
    Ok(())
}
