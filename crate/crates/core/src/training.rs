//! Regularised empirical risk minimisation with the scaled ramp loss.
//!
//! Every estimator is a positively weighted sum of ramp terms plus a
//! constant, so the objective
//!
//! ```text
//! J(w, b) = offset + sum_k c_k ramp(y_k (<w, z_k> + b)) + (lambda / 2) ||w||^2
//! ```
//!
//! splits into a convex hinge part and a concave negated hinge part. CCCP
//! linearises the concave part at the current model and minimises the
//! resulting convex majoriser by full-batch subgradient descent. Because the
//! majoriser touches `J` at the current model and an inner solve only returns
//! a model whose majoriser value is no larger, `J` never increases across
//! outer iterations.
//!
//! | mode | rows (label, weight)                                  | offset   |
//! |------|-------------------------------------------------------|----------|
//! | PN   | X+ (+1, pi/n+), X- (-1, (1-pi)/n-)                     | 0        |
//! | PU   | X+ (+1, 2 pi/n+), X_u (-1, 1/n_u)                      | -pi      |
//! | NU   | X_u (+1, 1/n_u), X- (-1, 2 (1-pi)/n-)                  | -(1-pi)  |

use std::cmp::Ordering;

use log::debug;
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::datasets::SampleTriple;
use crate::losses::{scaled_ramp, LossDescriptor};
use crate::models::{median_distance, stack_rows, DecisionModel, EmpiricalKernelMap, FeatureMap};
use crate::numeric::NeumaierSum;
use crate::risk::risk_for_mode;
use crate::{derive_seed, Error, Label, Mode, Result};

/// Consecutive increases of the inner objective treated as divergence.
const DIVERGENCE_STREAK: usize = 10;
/// Inner iterations between two convergence checks.
const INNER_CHECK_EVERY: usize = 50;
/// Slack allowed on a single CCCP step before it counts as an increase.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Weight of `(lambda / 2) ||w||^2`; the bias is not penalised.
    pub lambda: f64,
    pub cccp_max_outer: usize,
    pub inner_max_iter: usize,
    pub inner_tol: f64,
    pub outer_tol: f64,
    /// Restart 0 starts from zero, the others from `N(0, 0.1^2)` draws.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            cccp_max_outer: 30,
            inner_max_iter: 1000,
            inner_tol: 1e-6,
            outer_tol: 1e-6,
            restarts: 2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.cccp_max_outer == 0 || self.inner_max_iter == 0 || self.restarts == 0 {
            return Err(Error::InvalidArgument(
                "iteration caps and restarts must be >= 1".into(),
            ));
        }
        if !(self.inner_tol > 0.0 && self.outer_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    pub width_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
}

impl Default for CvConfig {
    /// Five folds, widths `{1/4, 1/2, 1, 2, 4}` (multiples of the median
    /// heuristic once resolved with [`CvConfig::scaled_widths`]) and
    /// `lambda` in `{1e-5, ..., 1e-1}`.
    fn default() -> Self {
        Self {
            folds: 5,
            width_grid: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            lambda_grid: vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 folds, got {}",
                self.folds
            )));
        }
        if self.width_grid.is_empty() || self.lambda_grid.is_empty() {
            return Err(Error::InvalidArgument("CV grids must be non-empty".into()));
        }
        if self
            .width_grid
            .iter()
            .chain(&self.lambda_grid)
            .any(|&v| !(v > 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "CV grid entries must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The default grid with widths multiplied by the median pairwise
    /// distance of the mode's kernel anchors.
    pub fn median_heuristic(mode: Mode, triple: &SampleTriple) -> Self {
        let base = CvConfig::default();
        let anchors = anchor_rows(mode, triple);
        let med = median_distance(anchors.view());
        CvConfig {
            width_grid: base.width_grid.iter().map(|m| m * med).collect(),
            ..base
        }
    }
}

/// The shape of model to train; kernel anchors are filled in per mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelTemplate {
    Linear,
    GaussianKernel { width: f64 },
}

/// Rows used as kernel anchors: X+ and X_u for PU, X+ and X- for PN,
/// X- and X_u for NU.
pub fn anchor_rows(mode: Mode, triple: &SampleTriple) -> Array2<f64> {
    let (a, b) = match mode {
        Mode::Pn => (&triple.x_pos, &triple.x_neg),
        Mode::Pu => (&triple.x_pos, &triple.x_unl),
        Mode::Nu => (&triple.x_neg, &triple.x_unl),
    };
    stack_rows(&[canonical_rows(a).view(), canonical_rows(b).view()])
}

/// Rows sorted lexicographically, so that results do not depend on the
/// order in which samples arrive.
fn canonical_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut idx: Vec<usize> = (0..x.nrows()).collect();
    idx.sort_by(|&i, &j| {
        x.row(i)
            .iter()
            .zip(x.row(j).iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    x.select(Axis(0), &idx)
}

/// The regularised empirical risk of one mode on one sample, with the
/// feature map already applied.
#[derive(Debug, Clone)]
pub struct Objective {
    mode: Mode,
    feature_map: FeatureMap,
    z: Array2<f64>,
    y: Array1<f64>,
    c: Array1<f64>,
    offset: f64,
    lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Params {
    w: Array1<f64>,
    b: f64,
}

impl Objective {
    pub fn new(
        mode: Mode,
        triple: &SampleTriple,
        template: &ModelTemplate,
        lambda: f64,
    ) -> Result<Self> {
        let pi = triple.pi;
        let require = |x: &Array2<f64>, set: &'static str| {
            if x.nrows() == 0 {
                Err(Error::MissingSample { mode, set })
            } else {
                Ok(canonical_rows(x))
            }
        };
        let (first, first_label, first_weight, second, second_label, second_weight, offset) =
            match mode {
                Mode::Pn => {
                    let p = require(&triple.x_pos, "positive")?;
                    let n = require(&triple.x_neg, "negative")?;
                    let (wp, wn) = (pi / p.nrows() as f64, (1.0 - pi) / n.nrows() as f64);
                    (p, Label::Pos, wp, n, Label::Neg, wn, 0.0)
                }
                Mode::Pu => {
                    let p = require(&triple.x_pos, "positive")?;
                    let u = require(&triple.x_unl, "unlabeled")?;
                    let (wp, wu) = (2.0 * pi / p.nrows() as f64, 1.0 / u.nrows() as f64);
                    (p, Label::Pos, wp, u, Label::Neg, wu, -pi)
                }
                Mode::Nu => {
                    let u = require(&triple.x_unl, "unlabeled")?;
                    let n = require(&triple.x_neg, "negative")?;
                    let (wu, wn) = (1.0 / u.nrows() as f64, 2.0 * (1.0 - pi) / n.nrows() as f64);
                    (u, Label::Pos, wu, n, Label::Neg, wn, -(1.0 - pi))
                }
            };
        let raw = stack_rows(&[first.view(), second.view()]);
        let feature_map = match template {
            ModelTemplate::Linear => FeatureMap::Identity { dim: triple.dim() },
            ModelTemplate::GaussianKernel { width } => {
                FeatureMap::Kernel(EmpiricalKernelMap::new(anchor_rows(mode, triple), *width)?)
            }
        };
        let z = feature_map.apply_rows(raw.view())?;
        let (n1, n2) = (first.nrows(), second.nrows());
        let y = Array1::from_iter(
            std::iter::repeat_n(first_label.sign(), n1)
                .chain(std::iter::repeat_n(second_label.sign(), n2)),
        );
        let c = Array1::from_iter(
            std::iter::repeat_n(first_weight, n1).chain(std::iter::repeat_n(second_weight, n2)),
        );
        Ok(Self {
            mode,
            feature_map,
            z,
            y,
            c,
            offset,
            lambda,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.feature_map
    }

    fn dim(&self) -> usize {
        self.z.ncols()
    }

    fn scores(&self, p: &Params) -> Array1<f64> {
        self.z.dot(&p.w) + p.b
    }

    fn reg(&self, w: &Array1<f64>) -> f64 {
        0.5 * self.lambda * w.dot(w)
    }

    fn value_at(&self, p: &Params) -> f64 {
        let t = self.scores(p);
        let mut acc = NeumaierSum::new();
        for k in 0..t.len() {
            let y = if self.y[k] > 0.0 {
                Label::Pos
            } else {
                Label::Neg
            };
            acc.add(self.c[k] * scaled_ramp(t[k], y));
        }
        self.offset + acc.total() + self.reg(&p.w)
    }

    /// `J` at `model`, which must use this objective's feature map.
    pub fn value(&self, model: &DecisionModel) -> Result<f64> {
        self.check_model(model)?;
        Ok(self.value_at(&Params {
            w: model.weights().clone(),
            b: model.bias(),
        }))
    }

    fn check_model(&self, model: &DecisionModel) -> Result<()> {
        if model.weights().len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: model.weights().len(),
            });
        }
        Ok(())
    }

    fn to_model(&self, p: Params) -> DecisionModel {
        DecisionModel::new(p.w, p.b, self.feature_map.clone()).expect("weights match feature map")
    }

    /// The convex majoriser of `J` obtained by linearising the concave ramp
    /// parts at `at`.
    fn majoriser(&self, at: &Params) -> Majoriser<'_> {
        let t0 = self.scores(at);
        let mut slope = Array1::zeros(t0.len());
        let mut constant = NeumaierSum::new();
        constant.add(self.offset);
        for k in 0..t0.len() {
            let m = self.y[k] * t0[k];
            if m < -1.0 {
                // h(t) = (-1 - y t) / 2 is active, h'(t) = -y / 2
                let h = (-1.0 - m) / 2.0;
                let dh = -self.y[k] / 2.0;
                slope[k] = self.c[k] * dh;
                constant.add(-self.c[k] * h + slope[k] * t0[k]);
            }
        }
        Majoriser {
            obj: self,
            slope,
            constant: constant.total(),
        }
    }

    /// One CCCP iteration from `model`. The returned model never has a larger
    /// objective than `model`; if the inner solver finds no improvement the
    /// incoming model is returned unchanged.
    pub fn cccp_outer_step(
        &self,
        model: &DecisionModel,
        config: &TrainConfig,
    ) -> Result<DecisionModel> {
        self.check_model(model)?;
        let start = Params {
            w: model.weights().clone(),
            b: model.bias(),
        };
        let next = self.outer_step(&start, config)?;
        Ok(self.to_model(next))
    }

    fn outer_step(&self, start: &Params, config: &TrainConfig) -> Result<Params> {
        let before = self.value_at(start);
        let maj = self.majoriser(start);
        let candidate = maj.minimise(start, config)?;
        let after = self.value_at(&candidate);
        if after <= before {
            Ok(candidate)
        } else {
            Ok(start.clone())
        }
    }

    /// Runs CCCP from `init` and returns the final parameters together with
    /// the objective after every outer iteration (the first entry is the
    /// starting objective).
    fn run_cccp(&self, init: Params, config: &TrainConfig) -> Result<(Params, Vec<f64>)> {
        let mut current = init;
        let mut history = vec![self.value_at(&current)];
        if !history[0].is_finite() {
            return Err(Error::NonFiniteObjective {
                value: history[0],
                outer: 0,
            });
        }
        for outer in 1..=config.cccp_max_outer {
            let next = self.outer_step(&current, config)?;
            let value = self.value_at(&next);
            let prev = *history.last().expect("history starts non-empty");
            if !value.is_finite() {
                return Err(Error::NonFiniteObjective { value, outer });
            }
            if value > prev + MONOTONE_SLACK {
                return Err(Error::MonotonicityViolation {
                    before: prev,
                    after: value,
                    outer,
                });
            }
            history.push(value);
            current = next;
            if prev - value < config.outer_tol {
                break;
            }
        }
        Ok((current, history))
    }
}

struct Majoriser<'a> {
    obj: &'a Objective,
    /// `c_k h'(t0_k)` for active concave terms, else 0.
    slope: Array1<f64>,
    constant: f64,
}

impl Majoriser<'_> {
    fn value_from_scores(&self, t: &Array1<f64>, w: &Array1<f64>) -> f64 {
        let o = self.obj;
        let mut acc = NeumaierSum::new();
        for k in 0..t.len() {
            let hinge = ((1.0 - o.y[k] * t[k]) / 2.0).max(0.0);
            acc.add(o.c[k] * hinge - self.slope[k] * t[k]);
        }
        self.constant + acc.total() + o.reg(w)
    }

    fn value(&self, p: &Params) -> f64 {
        self.value_from_scores(&self.obj.scores(p), &p.w)
    }

    /// Subgradient at `p` given its scores `t`.
    fn subgradient(&self, p: &Params, t: &Array1<f64>) -> Params {
        let o = self.obj;
        let s = Array1::from_shape_fn(t.len(), |k| {
            let active = 1.0 - o.y[k] * t[k] > 0.0;
            let hinge = if active { -o.c[k] * o.y[k] / 2.0 } else { 0.0 };
            hinge - self.slope[k]
        });
        let mut w = o.z.t().dot(&s);
        if o.lambda > 0.0 {
            w.scaled_add(o.lambda, &p.w);
        }
        Params { w, b: s.sum() }
    }

    /// Full-batch subgradient descent with steps `c / sqrt(t)`, where `c` is
    /// found by backtracking on the first step (starting from
    /// `min(1/|g0|, 1/lambda)`). Returns the best iterate,
    /// which is `start` itself if no step improves on it.
    fn minimise(&self, start: &Params, config: &TrainConfig) -> Result<Params> {
        let t0 = self.obj.scores(start);
        let f0 = self.value_from_scores(&t0, &start.w);
        let g0 = self.subgradient(start, &t0);
        let gnorm = (g0.w.dot(&g0.w) + g0.b * g0.b).sqrt();
        if gnorm == 0.0 || !gnorm.is_finite() {
            return Ok(start.clone());
        }

        // Steps longer than 1/lambda overshoot the quadratic term.
        let mut c = 1.0 / gnorm;
        if self.obj.lambda > 0.0 {
            c = c.min(1.0 / self.obj.lambda);
        }
        let mut calibrated = false;
        for _ in 0..50 {
            let trial = step(start, &g0, c);
            if self.value(&trial) < f0 {
                calibrated = true;
                break;
            }
            c *= 0.5;
        }
        if !calibrated {
            return Ok(start.clone());
        }

        let mut p = start.clone();
        let mut g = g0;
        let mut best = start.clone();
        let mut best_value = f0;
        let mut checkpoint = f0;
        let mut prev = f0;
        let mut streak = 0usize;
        let mut trace: Vec<f64> = Vec::with_capacity(DIVERGENCE_STREAK + 1);
        for it in 1..=config.inner_max_iter {
            p = step(&p, &g, c / (it as f64).sqrt());
            let t = self.obj.scores(&p);
            let v = self.value_from_scores(&t, &p.w);
            if !v.is_finite() {
                return Err(Error::NonFiniteObjective { value: v, outer: 0 });
            }
            if v > prev {
                streak += 1;
                trace.push(v);
                if streak >= DIVERGENCE_STREAK {
                    return Err(Error::Divergence { streak, trace });
                }
            } else {
                streak = 0;
                trace.clear();
            }
            prev = v;
            if v < best_value {
                best_value = v;
                best = p.clone();
            }
            if it % INNER_CHECK_EVERY == 0 {
                if checkpoint - best_value < config.inner_tol {
                    break;
                }
                checkpoint = best_value;
            }
            g = self.subgradient(&p, &t);
        }
        Ok(best)
    }
}

fn step(p: &Params, g: &Params, eta: f64) -> Params {
    let mut w = p.w.clone();
    w.scaled_add(-eta, &g.w);
    Params {
        w,
        b: p.b - eta * g.b,
    }
}

/// Outcome of one CCCP run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    /// Objective before the first and after every outer iteration.
    pub history: Vec<f64>,
    pub final_objective: f64,
}

impl RestartSummary {
    /// Largest single-step increase of the objective (0 or negative for a
    /// monotone run).
    pub fn max_increase(&self) -> f64 {
        self.history
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: DecisionModel,
    pub objective: f64,
    pub restarts: Vec<RestartSummary>,
}

/// Minimises the regularised `mode` estimator over models shaped by
/// `template`, keeping the best of `config.restarts` CCCP runs.
pub fn train(
    mode: Mode,
    triple: &SampleTriple,
    template: &ModelTemplate,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    let obj = Objective::new(mode, triple, template, config.lambda)?;
    train_objective(&obj, config)
}

/// Like [`train`] but on a prebuilt objective.
pub fn train_objective(obj: &Objective, config: &TrainConfig) -> Result<TrainedModel> {
    config.validate()?;
    let dim = obj.dim();
    let mut best: Option<(Params, f64)> = None;
    let mut summaries = Vec::with_capacity(config.restarts);
    for r in 0..config.restarts {
        let init = if r == 0 {
            Params {
                w: Array1::zeros(dim),
                b: 0.0,
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[r as u64]));
            let mut draw = || 0.1 * rng.sample::<f64, _>(StandardNormal);
            let w = Array1::from_shape_simple_fn(dim, &mut draw);
            let b = draw();
            Params { w, b }
        };
        let (params, history) = obj.run_cccp(init, config)?;
        let value = *history.last().expect("non-empty history");
        debug!(
            "{} restart {r}: {} outer iterations, objective {value:.6}",
            obj.mode,
            history.len() - 1
        );
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((params, value));
        }
        summaries.push(RestartSummary {
            restart: r,
            history,
            final_objective: value,
        });
    }
    let (params, objective) = best.expect("at least one restart");
    Ok(TrainedModel {
        model: obj.to_model(params),
        objective,
        restarts: summaries,
    })
}

/// One grid cell of a cross-validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub width: Option<f64>,
    pub lambda: f64,
    /// Mean over folds of the mode's zero-one estimator on the held-out fold.
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub best_width: Option<f64>,
    pub best_lambda: f64,
    pub table: Vec<CvRow>,
    /// Every CCCP run executed during the search.
    #[serde(skip)]
    pub runs: Vec<RestartSummary>,
}

fn dedup_sorted(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn split_folds(x: &Array2<f64>, folds: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..x.nrows()).collect();
    idx.shuffle(rng);
    let mut out = vec![Vec::new(); folds];
    for (pos, i) in idx.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    out
}

fn take(x: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    x.select(Axis(0), idx)
}

fn complement(folds: &[Vec<usize>], k: usize) -> Vec<usize> {
    folds
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .flat_map(|(_, f)| f.iter().copied())
        .collect()
}

/// K-fold selection of kernel width and `lambda` for `mode`.
///
/// Each sample set the mode uses is split into folds independently; the
/// validation score is the mode's own estimator under the zero-one loss, so
/// PU selection never touches negative data. The smallest mean score wins,
/// ties going to the larger width and then the larger `lambda`. For a linear
/// template the width grid is ignored.
pub fn cross_validate(
    mode: Mode,
    triple: &SampleTriple,
    template: &ModelTemplate,
    cv: &CvConfig,
    train_config: &TrainConfig,
) -> Result<CvOutcome> {
    cv.validate()?;
    train_config.validate()?;
    let widths: Vec<Option<f64>> = match template {
        ModelTemplate::Linear => vec![None],
        ModelTemplate::GaussianKernel { .. } => {
            dedup_sorted(&cv.width_grid).into_iter().map(Some).collect()
        }
    };
    let lambdas = dedup_sorted(&cv.lambda_grid);

    let sets: [(&'static str, &Array2<f64>, bool); 3] = [
        ("positive", &triple.x_pos, mode != Mode::Nu),
        ("negative", &triple.x_neg, mode != Mode::Pu),
        ("unlabeled", &triple.x_unl, mode != Mode::Pn),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(train_config.seed, &[0xCF]));
    let mut fold_idx: Vec<Vec<Vec<usize>>> = Vec::with_capacity(3);
    for (name, x, used) in sets {
        if used && x.nrows() < cv.folds {
            return Err(Error::InvalidArgument(format!(
                "{}-fold CV would leave an empty {name} fold ({} rows)",
                cv.folds,
                x.nrows()
            )));
        }
        fold_idx.push(if used {
            split_folds(x, cv.folds, &mut rng)
        } else {
            vec![Vec::new(); cv.folds]
        });
    }

    let d = triple.dim();
    let split = |k: usize| -> Result<(SampleTriple, SampleTriple)> {
        let part = |s: usize, x: &Array2<f64>, held: bool| {
            if held {
                take(x, &fold_idx[s][k])
            } else {
                take(x, &complement(&fold_idx[s], k))
            }
        };
        let fit = SampleTriple::new(
            part(0, &triple.x_pos, false),
            part(1, &triple.x_neg, false),
            part(2, &triple.x_unl, false),
            triple.pi,
        )?;
        let val = SampleTriple::new(
            part(0, &triple.x_pos, true),
            part(1, &triple.x_neg, true),
            part(2, &triple.x_unl, true),
            triple.pi,
        )?;
        debug_assert_eq!(fit.dim(), d);
        Ok((fit, val))
    };
    let fold_pairs = (0..cv.folds).map(split).collect::<Result<Vec<_>>>()?;

    let zero_one = LossDescriptor::zero_one();
    let mut table = Vec::with_capacity(widths.len() * lambdas.len());
    let mut runs = Vec::new();
    for &width in &widths {
        let tmpl = match width {
            None => ModelTemplate::Linear,
            Some(w) => ModelTemplate::GaussianKernel { width: w },
        };
        for &lambda in &lambdas {
            let cfg = TrainConfig {
                lambda,
                ..train_config.clone()
            };
            let mut acc = NeumaierSum::new();
            for (fit, val) in &fold_pairs {
                let trained = train(mode, fit, &tmpl, &cfg)?;
                acc.add(risk_for_mode(mode, &trained.model, val, &zero_one)?.value);
                runs.extend(trained.restarts);
            }
            table.push(CvRow {
                width,
                lambda,
                risk: acc.total() / cv.folds as f64,
            });
        }
    }

    let best = table
        .iter()
        .min_by(|a, b| {
            a.risk
                .total_cmp(&b.risk)
                .then_with(|| b.width.unwrap_or(0.0).total_cmp(&a.width.unwrap_or(0.0)))
                .then_with(|| b.lambda.total_cmp(&a.lambda))
        })
        .expect("grids are non-empty");
    Ok(CvOutcome {
        best_width: best.width,
        best_lambda: best.lambda,
        table: table.clone(),
        runs,
    })
}
