//! Experiment sweeps over the amount of unlabeled data or the class prior,
//! table output, the bound-based advisor, and a self-check suite.
//!
//! Every trial of a sweep draws one [`SampleTriple`] and trains all three
//! learners on it, so differences between modes are never due to different
//! training data. Trials run on the rayon pool; their seeds depend only on
//! `(master seed, sweep value, trial)`, so results do not depend on the
//! number of worker threads.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    alpha_nu_pn, alpha_pu_pn, alpha_star, bound_values, crossing_n_unl, rademacher_mc_check,
    AsymptoticCase, BoundParams, BoundValues, ComparatorInput, Verdict,
};
use crate::datasets::{
    gen_gaussian_artificial, gen_gaussian_labeled, load_csv, sample_triple_from_pool, LabelColumn,
    LabeledPool, SampleTriple,
};
use crate::losses::{uniform_grid, verify_calibration, LossDescriptor};
use crate::models::DecisionModel;
use crate::numeric::mean_and_std;
use crate::risk::{risk_for_mode, risk_true_mc, risk_true_mc_with_stderr};
use crate::training::{cross_validate, train, CvConfig, ModelTemplate, TrainConfig};
use crate::{derive_seed, Error, Mode, Result};

/// The quantity varied along a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "vary", content = "values", rename_all = "snake_case")]
pub enum Sweep {
    NUnl(Vec<u64>),
    Pi(Vec<f64>),
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::NUnl(v) => v.iter().map(|&n| n as f64).collect(),
            Sweep::Pi(v) => v.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::NUnl(v) => v.len(),
            Sweep::Pi(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Two unit-covariance Gaussians with a fresh labelled test draw per trial.
    Artificial,
    /// A labelled CSV pool; each trial is evaluated on its own holdout.
    Csv {
        path: PathBuf,
        label_column: LabelColumn,
    },
}

/// Problem sizes used by default and by `--paper-scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

impl Scale {
    pub fn trials(self) -> usize {
        match self {
            Scale::Desk => 50,
            Scale::Paper => 100,
        }
    }

    pub fn test_size(self) -> usize {
        match self {
            Scale::Desk => 100_000,
            Scale::Paper => 1_000_000,
        }
    }
}

/// Unlabeled sample sizes of the default `n_u` sweep.
pub fn default_n_unl_grid() -> Vec<u64> {
    vec![
        5, 10, 15, 20, 25, 30, 40, 50, 60, 80, 100, 125, 150, 175, 200,
    ]
}

/// Class priors 0.05, 0.10, ..., 0.95.
pub fn default_pi_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub sweep: Sweep,
    /// Class prior when the sweep does not vary it.
    pub pi: f64,
    /// Unlabeled size when the sweep does not vary it.
    pub n_unl: u64,
    pub n_pos: u64,
    pub n_neg: u64,
    pub trials: usize,
    pub source: DataSource,
    pub test_size: usize,
    pub seed: u64,
}

impl ExperimentGrid {
    /// `n+ = 45`, `n- = 5`, `pi = 0.5` with `n_u` varied over [`default_n_unl_grid`].
    pub fn n_unl_sweep(scale: Scale, seed: u64) -> Self {
        Self {
            sweep: Sweep::NUnl(default_n_unl_grid()),
            pi: 0.5,
            n_unl: 100,
            n_pos: 45,
            n_neg: 5,
            trials: scale.trials(),
            source: DataSource::Artificial,
            test_size: scale.test_size(),
            seed,
        }
    }

    /// `n+ = 45`, `n- = 5`, `n_u = 100` with `pi` varied over [`default_pi_grid`].
    pub fn pi_sweep(scale: Scale, seed: u64) -> Self {
        Self {
            sweep: Sweep::Pi(default_pi_grid()),
            ..Self::n_unl_sweep(scale, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        let values = self.sweep.values();
        if values.is_empty() {
            return Err(Error::InvalidArgument("sweep list is empty".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "sweep values must be strictly increasing".into(),
            ));
        }
        let priors: Vec<f64> = match &self.sweep {
            Sweep::Pi(v) => v.clone(),
            Sweep::NUnl(_) => vec![self.pi],
        };
        if priors.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::InvalidArgument(
                "class priors must lie in (0, 1)".into(),
            ));
        }
        let n_unl_min = match &self.sweep {
            Sweep::NUnl(v) => v[0],
            Sweep::Pi(_) => self.n_unl,
        };
        if self.n_pos == 0 || self.n_neg == 0 || n_unl_min == 0 {
            return Err(Error::InvalidArgument(
                "all sample sizes must be positive".into(),
            ));
        }
        if self.source == DataSource::Artificial && self.test_size == 0 {
            return Err(Error::InvalidArgument("test_size must be positive".into()));
        }
        Ok(())
    }

    fn point(&self, value: f64) -> (f64, u64) {
        match self.sweep {
            Sweep::NUnl(_) => (self.pi, value as u64),
            Sweep::Pi(_) => (value, self.n_unl),
        }
    }
}

/// How each learner is fitted inside a trial.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainingPlan {
    /// A linear model trained once with the given configuration.
    Fixed(TrainConfig),
    /// A Gaussian-kernel model whose width and `lambda` are chosen by
    /// cross-validation per trial and mode, then refitted on the full triple.
    /// Without an explicit grid the median heuristic is used.
    CrossValidated {
        train: TrainConfig,
        cv: Option<CvConfig>,
    },
}

impl TrainingPlan {
    /// Fixed `lambda = 1e-3` for artificial data, CV for CSV pools.
    pub fn default_for(source: &DataSource) -> Self {
        match source {
            DataSource::Artificial => TrainingPlan::Fixed(TrainConfig::default()),
            DataSource::Csv { .. } => TrainingPlan::CrossValidated {
                train: TrainConfig::default(),
                cv: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub mode: Mode,
    pub mean_error: f64,
    pub std_error: f64,
    pub alpha_pu_pn: f64,
    pub alpha_nu_pn: f64,
}

pub const CSV_HEADER: &str = "sweep_value,mode,mean_error,std_error,alpha_pu_pn,alpha_nu_pn";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!(
                "unknown format {other:?}, expected csv or json"
            ))),
        }
    }
}

/// Per-point, per-mode error summary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn row(&self, sweep_value: f64, mode: Mode) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.sweep_value == sweep_value && r.mode == mode)
    }

    /// Distinct sweep values in table order.
    pub fn sweep_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.sweep_value) {
                out.push(r.sweep_value);
            }
        }
        out
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                format_sig(r.sweep_value),
                r.mode,
                format_sig(r.mean_error),
                format_sig(r.std_error),
                format_sig(r.alpha_pu_pn),
                format_sig(r.alpha_nu_pn)
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write_to<W: Write>(&self, mut out: W, format: Format) -> Result<()> {
        match format {
            Format::Csv => out.write_all(self.to_csv_string().as_bytes())?,
            Format::Json => {
                out.write_all(self.to_json()?.as_bytes())?;
                out.write_all(b"\n")?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn emit(&self, format: Format, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path.as_ref())?;
        self.write_to(BufWriter::new(file), format)
    }
}

/// `%g`-style formatting with six significant digits.
pub fn format_sig(v: f64) -> String {
    const DIGITS: i32 = 6;
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Outcome of one trial at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sweep_value: f64,
    pub trial: usize,
    /// Fingerprint of the triple handed to each mode, in PN, PU, NU order.
    pub fingerprints: [u64; 3],
    /// Test misclassification rate of each mode, in PN, PU, NU order.
    pub errors: [f64; 3],
    pub cccp_runs: usize,
    pub max_objective_increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub table: ResultTable,
    pub trials: Vec<TrialRecord>,
    /// Number of CCCP runs behind the table, including CV runs.
    pub cccp_runs: usize,
    /// Largest single outer-step objective increase seen in any run.
    pub max_objective_increase: f64,
}

impl SweepReport {
    /// Per-trial errors of `mode` at `sweep_value`.
    pub fn errors(&self, sweep_value: f64, mode: Mode) -> Vec<f64> {
        let k = mode_index(mode);
        self.trials
            .iter()
            .filter(|t| t.sweep_value == sweep_value)
            .map(|t| t.errors[k])
            .collect()
    }

    /// True when every trial trained its three modes on the same triple.
    pub fn shared_samples(&self) -> bool {
        self.trials.iter().all(|t| {
            t.fingerprints[0] == t.fingerprints[1] && t.fingerprints[1] == t.fingerprints[2]
        })
    }
}

fn mode_index(mode: Mode) -> usize {
    match mode {
        Mode::Pn => 0,
        Mode::Pu => 1,
        Mode::Nu => 2,
    }
}

/// Standard error of the mean: sample standard deviation over `sqrt(n)`,
/// zero for a single trial.
pub fn std_error(values: &[f64]) -> f64 {
    let (_, sd) = mean_and_std(values);
    sd / (values.len() as f64).sqrt()
}

struct FitOutcome {
    model: DecisionModel,
    runs: usize,
    max_increase: f64,
}

fn fit(mode: Mode, triple: &SampleTriple, plan: &TrainingPlan, seed: u64) -> Result<FitOutcome> {
    match plan {
        TrainingPlan::Fixed(cfg) => {
            let cfg = TrainConfig {
                seed,
                ..cfg.clone()
            };
            let t = train(mode, triple, &ModelTemplate::Linear, &cfg)?;
            Ok(FitOutcome {
                max_increase: t
                    .restarts
                    .iter()
                    .map(|r| r.max_increase())
                    .fold(0.0, f64::max),
                runs: t.restarts.len(),
                model: t.model,
            })
        }
        TrainingPlan::CrossValidated { train: cfg, cv } => {
            let cfg = TrainConfig {
                seed,
                ..cfg.clone()
            };
            let cv = cv
                .clone()
                .unwrap_or_else(|| CvConfig::median_heuristic(mode, triple));
            let template = ModelTemplate::GaussianKernel { width: 1.0 };
            let sel = cross_validate(mode, triple, &template, &cv, &cfg)?;
            let width = sel.best_width.expect("kernel CV selects a width");
            let final_cfg = TrainConfig {
                lambda: sel.best_lambda,
                ..cfg
            };
            let t = train(
                mode,
                triple,
                &ModelTemplate::GaussianKernel { width },
                &final_cfg,
            )?;
            let runs = sel.runs.iter().chain(&t.restarts);
            Ok(FitOutcome {
                max_increase: runs.clone().map(|r| r.max_increase()).fold(0.0, f64::max),
                runs: runs.count(),
                model: t.model,
            })
        }
    }
}

fn run_trial(
    grid: &ExperimentGrid,
    pool: Option<&LabeledPool>,
    plan: &TrainingPlan,
    value: f64,
    trial: usize,
) -> Result<TrialRecord> {
    let (pi, n_unl) = grid.point(value);
    let seed = derive_seed(grid.seed, &[value.to_bits(), trial as u64]);
    let (triple, test) = match pool {
        None => (
            gen_gaussian_artificial(
                grid.n_pos as usize,
                grid.n_neg as usize,
                n_unl as usize,
                pi,
                derive_seed(seed, &[0]),
            )?,
            gen_gaussian_labeled(grid.test_size, pi, derive_seed(seed, &[1]))?,
        ),
        Some(pool) => {
            let s = sample_triple_from_pool(
                pool,
                grid.n_pos as usize,
                grid.n_neg as usize,
                n_unl as usize,
                pi,
                derive_seed(seed, &[0]),
            )?;
            (s.triple, s.holdout)
        }
    };

    let zero_one = LossDescriptor::zero_one();
    let mut record = TrialRecord {
        sweep_value: value,
        trial,
        fingerprints: [0; 3],
        errors: [0.0; 3],
        cccp_runs: 0,
        max_objective_increase: 0.0,
    };
    for mode in Mode::ALL {
        let k = mode_index(mode);
        let ctx = |e: Error| e.context(format!("sweep value {value}, trial {trial}, mode {mode}"));
        record.fingerprints[k] = triple.fingerprint();
        let out = fit(mode, &triple, plan, derive_seed(seed, &[2, k as u64])).map_err(ctx)?;
        record.errors[k] = risk_true_mc(&out.model, &test, &zero_one).map_err(ctx)?;
        record.cccp_runs += out.runs;
        record.max_objective_increase = record.max_objective_increase.max(out.max_increase);
    }
    Ok(record)
}

/// Runs every trial of `grid` and aggregates the test errors.
pub fn run_sweep(grid: &ExperimentGrid, plan: &TrainingPlan) -> Result<SweepReport> {
    grid.validate()?;
    let pool = match &grid.source {
        DataSource::Artificial => None,
        DataSource::Csv { path, label_column } => Some(load_csv(path, label_column)?),
    };
    let values = grid.sweep.values();
    info!(
        "sweep over {} points x {} trials ({} trainings)",
        values.len(),
        grid.trials,
        3 * values.len() * grid.trials
    );
    let units: Vec<(f64, usize)> = values
        .iter()
        .flat_map(|&v| (0..grid.trials).map(move |t| (v, t)))
        .collect();
    let trials = units
        .par_iter()
        .map(|&(v, t)| run_trial(grid, pool.as_ref(), plan, v, t))
        .collect::<Result<Vec<_>>>()?;

    let mut table = ResultTable::default();
    for &value in &values {
        let (pi, n_unl) = grid.point(value);
        let input = ComparatorInput::finite(pi, grid.n_pos, grid.n_neg, n_unl)?;
        let (a_pu, a_nu) = (alpha_pu_pn(&input), alpha_nu_pn(&input));
        for mode in Mode::ALL {
            let k = mode_index(mode);
            let errs: Vec<f64> = trials
                .iter()
                .filter(|t| t.sweep_value == value)
                .map(|t| t.errors[k])
                .collect();
            let (mean, _) = mean_and_std(&errs);
            table.rows.push(ResultRow {
                sweep_value: value,
                mode,
                mean_error: mean,
                std_error: std_error(&errs),
                alpha_pu_pn: a_pu,
                alpha_nu_pn: a_nu,
            });
        }
    }
    let cccp_runs = trials.iter().map(|t| t.cccp_runs).sum();
    let max_objective_increase = trials
        .iter()
        .map(|t| t.max_objective_increase)
        .fold(0.0, f64::max);
    if trials
        .iter()
        .any(|t| t.fingerprints[0] != t.fingerprints[1] || t.fingerprints[1] != t.fingerprints[2])
    {
        warn!("a trial trained its modes on different samples");
    }
    Ok(SweepReport {
        table,
        trials,
        cccp_runs,
        max_objective_increase,
    })
}

/// First `n_u` at which mean PU error falls below mean PN error, linearly
/// interpolated between the two bracketing sweep points. `None` when PU is
/// already better at the first point or never becomes better.
pub fn empirical_crossing(table: &ResultTable) -> Option<f64> {
    let diffs: Vec<(f64, f64)> = table
        .sweep_values()
        .into_iter()
        .filter_map(|v| {
            let pn = table.row(v, Mode::Pn)?.mean_error;
            let pu = table.row(v, Mode::Pu)?.mean_error;
            Some((v, pu - pn))
        })
        .collect();
    diffs.windows(2).find_map(|w| {
        let ((x0, d0), (x1, d1)) = (w[0], w[1]);
        (d0 >= 0.0 && d1 < 0.0).then(|| x0 + (x1 - x0) * d0 / (d0 - d1))
    })
}

/// Bound-based recommendation for a concrete data budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    pub pi: f64,
    pub n_pos: u64,
    pub n_neg: u64,
    pub n_unl: u64,
    pub alpha_pu_pn: f64,
    pub alpha_nu_pn: f64,
    /// Limit of `alpha_pu,pn` as `n_u` grows with `n+`, `n-` fixed.
    pub alpha_star: f64,
    pub asymptotic_verdict: Verdict,
    pub bound_params: BoundParams,
    pub bounds: BoundValues,
    /// `n_u` beyond which PU has the tighter bound, if any.
    pub pu_crossing_n_unl: Option<f64>,
    pub recommendation: Mode,
    pub message: String,
}

/// Compares the three bounds at the given sizes and explains what extra
/// unlabeled data would buy.
pub fn advise(pi: f64, n_pos: u64, n_neg: u64, n_unl: u64) -> Result<Advice> {
    let input = ComparatorInput::finite(pi, n_pos, n_neg, n_unl)?;
    let params = BoundParams::default();
    let bounds = bound_values(&input, &params)?;
    let (a_pu, a_nu) = (alpha_pu_pn(&input), alpha_nu_pn(&input));
    let star = alpha_star(&input, AsymptoticCase::A);

    let recommendation = if a_pu < 1.0 || a_nu < 1.0 {
        if bounds.v_pu <= bounds.v_nu {
            Mode::Pu
        } else {
            Mode::Nu
        }
    } else {
        Mode::Pn
    };
    let now = match recommendation {
        Mode::Pu => format!("PU has the tightest bound now (alpha_pu,pn = {a_pu:.4} < 1)."),
        Mode::Nu => format!("NU has the tightest bound now (alpha_nu,pn = {a_nu:.4} < 1)."),
        Mode::Pn => format!(
            "PN remains competitive (alpha_pu,pn = {a_pu:.4}, alpha_nu,pn = {a_nu:.4}, both >= 1)."
        ),
    };
    let later = match star.verdict {
        Verdict::PuPromising => format!(
            "alpha* = {:.4} < 1: PU is promising; collect more U data for PU.",
            star.alpha_star_pu
        ),
        Verdict::NuPromising => format!(
            "alpha* = {:.4} > 1: NU is promising; collect more U data for NU.",
            star.alpha_star_pu
        ),
        Verdict::DegenerateTie => {
            "alpha* = 1: degenerate tie (n+/n- = pi^2/(1-pi)^2); more U data cannot make PU or NU beat PN.".into()
        }
    };
    Ok(Advice {
        pi,
        n_pos,
        n_neg,
        n_unl,
        alpha_pu_pn: a_pu,
        alpha_nu_pn: a_nu,
        alpha_star: star.alpha_star_pu,
        asymptotic_verdict: star.verdict,
        bound_params: params,
        bounds,
        pu_crossing_n_unl: crossing_n_unl(pi, n_pos, n_neg),
        recommendation,
        message: format!("{now} {later}"),
    })
}

/// Sizes of the self-check suite run by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub unbiased_reps: usize,
    pub mc_points: usize,
    pub comparator_cases: usize,
    pub rademacher_samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            unbiased_reps: 2_000,
            mc_points: 200_000,
            comparator_cases: 10_000,
            rademacher_samples: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Runs the estimator, calibration, comparator and complexity self-checks.
pub fn verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    checks.extend(check_unbiasedness(cfg)?);
    checks.push(check_calibration());
    checks.push(check_comparators(cfg)?);
    checks.push(check_rademacher(cfg)?);
    Ok(VerifyReport { checks })
}

fn check_unbiasedness(cfg: &VerifyConfig) -> Result<Vec<CheckOutcome>> {
    let pi = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[10]));
    let w = Array1::from_shape_simple_fn(2, || rng.sample::<f64, _>(StandardNormal));
    let model = DecisionModel::linear(w, rng.sample(StandardNormal));
    let ramp = LossDescriptor::scaled_ramp();
    let truth_pool = gen_gaussian_labeled(cfg.mc_points, pi, derive_seed(cfg.seed, &[11]))?;
    let (truth, truth_se) = risk_true_mc_with_stderr(&model, &truth_pool, &ramp)?;

    let estimates: Vec<[f64; 3]> = (0..cfg.unbiased_reps)
        .into_par_iter()
        .map(|r| {
            let t =
                gen_gaussian_artificial(50, 50, 50, pi, derive_seed(cfg.seed, &[12, r as u64]))?;
            let mut out = [0.0; 3];
            for mode in Mode::ALL {
                out[mode_index(mode)] = risk_for_mode(mode, &model, &t, &ramp)?.value;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(Mode::ALL
        .iter()
        .map(|&mode| {
            let vals: Vec<f64> = estimates.iter().map(|e| e[mode_index(mode)]).collect();
            let (mean, _) = mean_and_std(&vals);
            let se = (std_error(&vals).powi(2) + truth_se * truth_se).sqrt();
            let z = (mean - truth).abs() / se;
            CheckOutcome {
                name: format!("unbiasedness {mode}"),
                pass: z <= 5.0,
                detail: format!("mean {mean:.5} vs truth {truth:.5}, {z:.2} standard errors"),
            }
        })
        .collect())
}

fn check_calibration() -> CheckOutcome {
    let pis = uniform_grid(0.0, 1.0, 0.05);
    let gs = uniform_grid(-2.0, 2.0, 0.01);
    let result = verify_calibration(&pis, &gs);
    CheckOutcome {
        name: "calibration".into(),
        pass: result.is_ok(),
        detail: match result {
            Ok(()) => format!("{} priors x {} scores", pis.len(), gs.len()),
            Err(e) => e.to_string(),
        },
    }
}

fn check_comparators(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[20]));
    let params = BoundParams::default();
    let mut violations = 0usize;
    let mut worst_reciprocity: f64 = 0.0;
    for _ in 0..cfg.comparator_cases {
        let pi = rng.random_range(0.01..0.99);
        let input = ComparatorInput::finite(
            pi,
            rng.random_range(1..=1000),
            rng.random_range(1..=1000),
            rng.random_range(1..=10_000),
        )?;
        let v = bound_values(&input, &params)?;
        if (alpha_pu_pn(&input) < 1.0) != (v.v_pu < v.v_pn)
            || (alpha_nu_pn(&input) < 1.0) != (v.v_nu < v.v_pn)
        {
            violations += 1;
        }
        let star = alpha_star(&input, AsymptoticCase::A);
        worst_reciprocity =
            worst_reciprocity.max((star.alpha_star_pu * star.alpha_star_nu - 1.0).abs());
    }
    Ok(CheckOutcome {
        name: "comparator equivalence".into(),
        pass: violations == 0 && worst_reciprocity <= 1e-12,
        detail: format!(
            "{violations} violations in {} cases, worst |alpha*_pu alpha*_nu - 1| = {worst_reciprocity:.2e}",
            cfg.comparator_cases
        ),
    })
}

fn check_rademacher(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let mut failures = 0usize;
    let mut total = 0usize;
    for &n in &[1usize, 10, 100, 1000] {
        for s in 0..cfg.rademacher_samples {
            let seed = derive_seed(cfg.seed, &[30, n as u64, s as u64]);
            let x = unit_ball_sample(n, 3, seed);
            let check = rademacher_mc_check(x.view(), 1.0, 1.0, 1000, seed)?;
            total += 1;
            failures += usize::from(!check.pass);
        }
    }
    Ok(CheckOutcome {
        name: "rademacher".into(),
        pass: failures == 0,
        detail: format!("{failures} of {total} samples above the bound"),
    })
}

/// `n` points in the closed unit ball of dimension `d`; about a quarter of
/// them lie exactly on the sphere.
pub fn unit_ball_sample(n: usize, d: usize, seed: u64) -> ndarray::Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = ndarray::Array2::<f64>::zeros((n, d));
    for mut row in x.outer_iter_mut() {
        row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let norm = row.dot(&row).sqrt().max(f64::MIN_POSITIVE);
        let radius = if rng.random_bool(0.25) {
            1.0
        } else {
            rng.random::<f64>().powf(1.0 / d as f64)
        };
        row.mapv_inplace(|v| (v / norm * radius).clamp(-1.0, 1.0));
        // rounding may push the norm a hair above 1
        let norm = row.dot(&row).sqrt();
        if norm > 1.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    x
}
