use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use pnu_core::datasets::LabelColumn;
use pnu_core::harness::{
    advise, default_n_unl_grid, default_pi_grid, run_sweep, verify, DataSource, ExperimentGrid,
    Format, Scale, Sweep, TrainingPlan, VerifyConfig,
};
use pnu_core::training::{CvConfig, TrainConfig};

/// Unbiased PN / PU / NU risk minimisation experiments and bound comparisons.
#[derive(Parser)]
#[command(name = "pnu", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vary the amount of unlabeled data at a fixed class prior.
    SweepNu(SweepNuArgs),
    /// Vary the class prior at a fixed amount of unlabeled data.
    SweepPi(SweepPiArgs),
    /// Compare the three estimation-error bounds for a data budget.
    Advise(AdviseArgs),
    /// Run the built-in self-checks; exits nonzero if any fails.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CommonSweep {
    #[arg(long, default_value_t = 45)]
    n_pos: u64,
    #[arg(long, default_value_t = 5)]
    n_neg: u64,
    /// Trials per sweep point [default: 50, or 100 with --paper-scale].
    #[arg(long)]
    trials: Option<usize>,
    /// Size of the fresh test draw for artificial data [default: 100000,
    /// or 1000000 with --paper-scale].
    #[arg(long)]
    test_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Labelled CSV pool to sample from instead of the artificial Gaussians.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Label column of --data, by header name or zero-based index.
    #[arg(long, default_value = "label")]
    label_col: LabelColumn,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Use 100 trials and 10^6 test points.
    #[arg(long)]
    paper_scale: bool,
    /// JSON file with training settings (lambda, restarts, tolerances, ...).
    #[arg(long)]
    train_config: Option<PathBuf>,
    /// JSON file with the CV folds and absolute width / lambda grids.
    #[arg(long)]
    cv_config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepNuArgs {
    #[arg(long, default_value_t = 0.5)]
    pi: f64,
    /// Comma-separated unlabeled sizes [default: 5,10,...,200].
    #[arg(long, value_delimiter = ',')]
    n_unl: Vec<u64>,
    #[command(flatten)]
    common: CommonSweep,
}

#[derive(Args)]
struct SweepPiArgs {
    /// Comma-separated class priors [default: 0.05,0.10,...,0.95].
    #[arg(long, value_delimiter = ',')]
    pi: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    n_unl: u64,
    #[command(flatten)]
    common: CommonSweep,
}

#[derive(Args)]
struct AdviseArgs {
    #[arg(long)]
    pi: f64,
    #[arg(long)]
    n_pos: u64,
    #[arg(long)]
    n_neg: u64,
    #[arg(long)]
    n_unl: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Resamples for the unbiasedness check.
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_config(path: &PathBuf) -> Result<(String, &PathBuf)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((text, path))
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn sweep(sweep: Sweep, pi: f64, n_unl: u64, c: CommonSweep) -> Result<()> {
    let scale = if c.paper_scale {
        Scale::Paper
    } else {
        Scale::Desk
    };
    let source = match &c.data {
        None => DataSource::Artificial,
        Some(path) => DataSource::Csv {
            path: path.clone(),
            label_column: c.label_col.clone(),
        },
    };
    let train = match c.train_config.as_ref().map(read_config).transpose()? {
        Some((text, path)) => Some(
            serde_json::from_str::<TrainConfig>(&text)
                .with_context(|| format!("parsing {}", path.display()))?,
        ),
        None => None,
    };
    let cv = match c.cv_config.as_ref().map(read_config).transpose()? {
        Some((text, path)) => Some(
            serde_json::from_str::<CvConfig>(&text)
                .with_context(|| format!("parsing {}", path.display()))?,
        ),
        None => None,
    };
    let plan = match (&source, train, cv) {
        (DataSource::Artificial, None, None) => TrainingPlan::default_for(&source),
        (DataSource::Artificial, Some(t), None) => TrainingPlan::Fixed(t),
        (_, t, cv) => TrainingPlan::CrossValidated {
            train: t.unwrap_or_default(),
            cv,
        },
    };
    let grid = ExperimentGrid {
        sweep,
        pi,
        n_unl,
        n_pos: c.n_pos,
        n_neg: c.n_neg,
        trials: c.trials.unwrap_or(scale.trials()),
        source,
        test_size: c.test_size.unwrap_or(scale.test_size()),
        seed: c.seed,
    };
    let report = run_sweep(&grid, &plan)?;
    info!(
        "{} CCCP runs, largest objective increase {:e}",
        report.cccp_runs, report.max_objective_increase
    );
    match &c.out {
        Some(path) => report.table.emit(c.format, path)?,
        None => report.table.write_to(io::stdout().lock(), c.format)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SweepNu(a) => {
            let grid = if a.n_unl.is_empty() {
                default_n_unl_grid()
            } else {
                a.n_unl
            };
            sweep(Sweep::NUnl(grid), a.pi, 0, a.common)?;
        }
        Command::SweepPi(a) => {
            let grid = if a.pi.is_empty() {
                default_pi_grid()
            } else {
                a.pi
            };
            sweep(Sweep::Pi(grid), 0.5, a.n_unl, a.common)?;
        }
        Command::Advise(a) => {
            let advice = advise(a.pi, a.n_pos, a.n_neg, a.n_unl)?;
            write_output(
                a.out.as_ref(),
                &(serde_json::to_string_pretty(&advice)? + "\n"),
            )?;
        }
        Command::Verify(a) => {
            if a.reps < 2 {
                bail!("--reps must be at least 2");
            }
            let cfg = VerifyConfig {
                unbiased_reps: a.reps,
                seed: a.seed,
                ..VerifyConfig::default()
            };
            let report = verify(&cfg)?;
            for c in &report.checks {
                eprintln!(
                    "{} {}: {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            write_output(
                a.out.as_ref(),
                &(serde_json::to_string_pretty(&report)? + "\n"),
            )?;
            return Ok(report.all_pass());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
