//! Estimation-error bounds for the PN, PU and NU minimisers and the
//! comparators that decide which bound is tighter.
//!
//! All three bounds share the factor `f(delta) = 4 L C + sqrt(2 ln(4/delta))`:
//!
//! ```text
//! V_pn = f * (pi/sqrt(n+) + (1-pi)/sqrt(n-))
//! V_pu = f * (2 pi/sqrt(n+) + 1/sqrt(n_u))
//! V_nu = f * (1/sqrt(n_u) + 2 (1-pi)/sqrt(n-))
//! ```
//!
//! so the comparison reduces to the `f`-free ratios
//!
//! ```text
//! alpha_pu,pn = (pi/sqrt(n+) + 1/sqrt(n_u)) / ((1-pi)/sqrt(n-))
//! alpha_nu,pn = ((1-pi)/sqrt(n-) + 1/sqrt(n_u)) / (pi/sqrt(n+))
//! ```
//!
//! with `V_pu < V_pn` iff `alpha_pu,pn < 1` (likewise for NU).

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{derive_seed, Error, Result};

/// Relative tolerance under which `alpha*` counts as exactly one.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Tolerance of the `rho_pn = rho_pu / rho_nu` consistency check.
pub const RATIO_TOLERANCE: f64 = 1e-9;

/// A sample size that may be unbounded (only meaningful for U data).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSize {
    Finite(u64),
    Infinite,
}

impl SampleSize {
    /// `1/sqrt(n)`, which is 0 for an infinite sample.
    fn inv_sqrt(self) -> f64 {
        match self {
            SampleSize::Finite(n) => 1.0 / (n as f64).sqrt(),
            SampleSize::Infinite => 0.0,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, SampleSize::Finite(_))
    }
}

impl std::fmt::Display for SampleSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SampleSize::Finite(n) => write!(f, "{n}"),
            SampleSize::Infinite => f.write_str("infinite"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparatorInput {
    pub pi: f64,
    pub n_pos: u64,
    pub n_neg: u64,
    pub n_unl: SampleSize,
    pub rho_pn: Option<f64>,
    pub rho_pu: Option<f64>,
    pub rho_nu: Option<f64>,
}

impl ComparatorInput {
    pub fn new(pi: f64, n_pos: u64, n_neg: u64, n_unl: SampleSize) -> Result<Self> {
        let input = Self {
            pi,
            n_pos,
            n_neg,
            n_unl,
            rho_pn: None,
            rho_pu: None,
            rho_nu: None,
        };
        input.validate()?;
        Ok(input)
    }

    pub fn finite(pi: f64, n_pos: u64, n_neg: u64, n_unl: u64) -> Result<Self> {
        Self::new(pi, n_pos, n_neg, SampleSize::Finite(n_unl))
    }

    /// Attaches the ratios realised by the counts (`rho_pu`, `rho_nu` only
    /// when `n_u` is finite).
    pub fn with_count_ratios(mut self) -> Self {
        self.rho_pn = Some(self.n_pos as f64 / self.n_neg as f64);
        if let SampleSize::Finite(nu) = self.n_unl {
            self.rho_pu = Some(self.n_pos as f64 / nu as f64);
            self.rho_nu = Some(self.n_neg as f64 / nu as f64);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_prior(self.pi)?;
        if self.n_pos == 0 || self.n_neg == 0 || self.n_unl == SampleSize::Finite(0) {
            return Err(Error::InvalidArgument(
                "sample sizes must be positive".into(),
            ));
        }
        for r in [self.rho_pn, self.rho_pu, self.rho_nu]
            .into_iter()
            .flatten()
        {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "ratio {r} must be positive"
                )));
            }
        }
        if let (Some(pn), Some(pu), Some(nu)) = (self.rho_pn, self.rho_pu, self.rho_nu) {
            check_ratios(pn, pu, nu)?;
        }
        Ok(())
    }
}

fn check_prior(pi: f64) -> Result<()> {
    if pi > 0.0 && pi < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "class prior must lie in (0, 1), got {pi}"
        )))
    }
}

fn check_ratios(rho_pn: f64, rho_pu: f64, rho_nu: f64) -> Result<()> {
    let implied = rho_pu / rho_nu;
    if (rho_pn - implied).abs() <= RATIO_TOLERANCE * rho_pn.max(1.0) {
        Ok(())
    } else {
        Err(Error::InconsistentRatios { rho_pn, implied })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub delta: f64,
    pub lipschitz: f64,
    /// `C_G`, or `C_w * C_phi` for norm-bounded hyperplanes.
    pub complexity_const: f64,
}

impl Default for BoundParams {
    /// `delta = 0.05`, the scaled ramp's `L = 1/2`, and `C_G = 1`.
    fn default() -> Self {
        Self {
            delta: 0.05,
            lipschitz: 0.5,
            complexity_const: 1.0,
        }
    }
}

impl BoundParams {
    pub fn new(delta: f64, lipschitz: f64, complexity_const: f64) -> Result<Self> {
        let p = Self {
            delta,
            lipschitz,
            complexity_const,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters for the class `{<w, phi(x)> : ||w|| <= c_w, ||phi(x)|| <= c_phi}`.
    pub fn for_bounded_hyperplanes(
        delta: f64,
        lipschitz: f64,
        c_w: f64,
        c_phi: f64,
    ) -> Result<Self> {
        Self::new(delta, lipschitz, c_w * c_phi)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::InvalidArgument(
                "Lipschitz constant must be positive and finite".into(),
            ));
        }
        if !(self.complexity_const > 0.0 && self.complexity_const.is_finite()) {
            return Err(Error::InvalidArgument(
                "complexity constant must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `f(delta) = 4 L C + sqrt(2 ln(4 / delta))`.
pub fn f_delta(params: &BoundParams) -> f64 {
    4.0 * params.lipschitz * params.complexity_const + (2.0 * (4.0 / params.delta).ln()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValues {
    pub v_pn: f64,
    pub v_pu: f64,
    pub v_nu: f64,
}

/// The three estimation-error bounds for finite sample sizes.
pub fn bound_values(input: &ComparatorInput, params: &BoundParams) -> Result<BoundValues> {
    if !input.n_unl.is_finite() {
        return Err(Error::InvalidArgument(
            "n_u is infinite; use limiting_bound_values for the limit".into(),
        ));
    }
    limiting_bound_values(input, params)
}

/// Like [`bound_values`] but also accepts an infinite U sample, in which case
/// the `1/sqrt(n_u)` terms vanish.
pub fn limiting_bound_values(input: &ComparatorInput, params: &BoundParams) -> Result<BoundValues> {
    input.validate()?;
    params.validate()?;
    let f = f_delta(params);
    let pi = input.pi;
    let ip = 1.0 / (input.n_pos as f64).sqrt();
    let in_ = 1.0 / (input.n_neg as f64).sqrt();
    let iu = input.n_unl.inv_sqrt();
    Ok(BoundValues {
        v_pn: f * (pi * ip + (1.0 - pi) * in_),
        v_pu: f * (2.0 * pi * ip + iu),
        v_nu: f * (iu + 2.0 * (1.0 - pi) * in_),
    })
}

/// `(pi/sqrt(n+) + 1/sqrt(n_u)) / ((1-pi)/sqrt(n-))`.
pub fn alpha_pu_pn(input: &ComparatorInput) -> f64 {
    let pi = input.pi;
    let num = pi / (input.n_pos as f64).sqrt() + input.n_unl.inv_sqrt();
    num / ((1.0 - pi) / (input.n_neg as f64).sqrt())
}

/// `((1-pi)/sqrt(n-) + 1/sqrt(n_u)) / (pi/sqrt(n+))`.
pub fn alpha_nu_pn(input: &ComparatorInput) -> f64 {
    let pi = input.pi;
    let num = (1.0 - pi) / (input.n_neg as f64).sqrt() + input.n_unl.inv_sqrt();
    num / (pi / (input.n_pos as f64).sqrt())
}

/// `(pi + sqrt(rho_pu)) / ((1-pi) sqrt(rho_pn))`.
pub fn alpha_pu_pn_from_ratios(pi: f64, rho_pn: f64, rho_pu: f64) -> f64 {
    (pi + rho_pu.sqrt()) / ((1.0 - pi) * rho_pn.sqrt())
}

/// `(1 - pi + sqrt(rho_nu)) / (pi / sqrt(rho_pn))`.
pub fn alpha_nu_pn_from_ratios(pi: f64, rho_pn: f64, rho_nu: f64) -> f64 {
    (1.0 - pi + rho_nu.sqrt()) / (pi / rho_pn.sqrt())
}

/// Both comparators from proportional sample-size ratios
/// `rho_pn = n+/n-`, `rho_pu = n+/n_u`, `rho_nu = n-/n_u`.
pub fn alpha_ratio_forms(pi: f64, rho_pn: f64, rho_pu: f64, rho_nu: f64) -> Result<(f64, f64)> {
    check_prior(pi)?;
    for r in [rho_pn, rho_pu, rho_nu] {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ratio {r} must be positive"
            )));
        }
    }
    check_ratios(rho_pn, rho_pu, rho_nu)?;
    Ok((
        alpha_pu_pn_from_ratios(pi, rho_pn, rho_pu),
        alpha_nu_pn_from_ratios(pi, rho_pn, rho_nu),
    ))
}

/// `alpha_pu,pn` when the P/N sizes follow the prior, `rho_pn = pi/(1-pi)`:
/// `(pi + sqrt(rho_pu)) / sqrt(pi (1-pi))`.
pub fn alpha_pu_pn_prior_matched(pi: f64, rho_pu: f64) -> f64 {
    (pi + rho_pu.sqrt()) / (pi * (1.0 - pi)).sqrt()
}

/// `alpha_nu,pn` under `rho_pn = pi/(1-pi)`: `(1 - pi + sqrt(rho_nu)) / sqrt(pi (1-pi))`.
pub fn alpha_nu_pn_prior_matched(pi: f64, rho_nu: f64) -> f64 {
    (1.0 - pi + rho_nu.sqrt()) / (pi * (1.0 - pi)).sqrt()
}

/// Minimum over `pi` of [`alpha_pu_pn_prior_matched`], `2 sqrt(rho + sqrt(rho))`,
/// and the prior at which it is attained, `sqrt(rho) / (2 sqrt(rho) + 1)`.
pub fn prior_matched_minimum(rho_pu: f64) -> (f64, f64) {
    let s = rho_pu.sqrt();
    (2.0 * (rho_pu + s).sqrt(), s / (2.0 * s + 1.0))
}

/// How the P and N sizes behave as U grows without bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticCase {
    /// Finite `n+`, `n-` and `n_u -> infinity`.
    A,
    /// `n+, n- -> infinity` with `n+/n- -> rho*_pn` and `n_u` growing faster.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    PuPromising,
    NuPromising,
    DegenerateTie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticComparison {
    pub alpha_star_pu: f64,
    pub alpha_star_nu: f64,
    pub verdict: Verdict,
}

/// Limits of both comparators as `n_u -> infinity`. Case B uses `rho_pn`
/// from the input when present, otherwise `n+/n-`.
pub fn alpha_star(input: &ComparatorInput, case: AsymptoticCase) -> AsymptoticComparison {
    let pi = input.pi;
    let (pu, nu) = match case {
        AsymptoticCase::A => {
            let sp = (input.n_pos as f64).sqrt();
            let sn = (input.n_neg as f64).sqrt();
            (pi * sn / ((1.0 - pi) * sp), (1.0 - pi) * sp / (pi * sn))
        }
        AsymptoticCase::B => {
            let rho = input
                .rho_pn
                .unwrap_or(input.n_pos as f64 / input.n_neg as f64)
                .sqrt();
            (pi / ((1.0 - pi) * rho), (1.0 - pi) * rho / pi)
        }
    };
    let verdict = if (pu - 1.0).abs() <= TIE_TOLERANCE {
        Verdict::DegenerateTie
    } else if pu < 1.0 {
        Verdict::PuPromising
    } else {
        Verdict::NuPromising
    };
    AsymptoticComparison {
        alpha_star_pu: pu,
        alpha_star_nu: nu,
        verdict,
    }
}

/// `n_u` at which `alpha_pu,pn = 1`, i.e. `1 / ((1-pi)/sqrt(n-) - pi/sqrt(n+))^2`;
/// `None` when no finite amount of U data makes the PU bound tighter.
pub fn crossing_n_unl(pi: f64, n_pos: u64, n_neg: u64) -> Option<f64> {
    let gap = (1.0 - pi) / (n_neg as f64).sqrt() - pi / (n_pos as f64).sqrt();
    (gap > 0.0).then(|| 1.0 / (gap * gap))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RademacherCheck {
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    pub pass: bool,
}

const SIGMA_CHUNK: usize = 256;

/// Monte-Carlo estimate of the empirical Rademacher complexity of
/// `{x -> <w, x> : ||w|| <= c_w}` on the rows of `x`, which equals
/// `(c_w / n) E_sigma || sum_i sigma_i x_i ||`, compared against `c_w c_phi / sqrt(n)`.
pub fn rademacher_mc_check(
    x: ArrayView2<'_, f64>,
    c_w: f64,
    c_phi: f64,
    num_sigma_draws: usize,
    seed: u64,
) -> Result<RademacherCheck> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::EmptySample("rademacher sample"));
    }
    if num_sigma_draws < 1000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 1000 sigma draws, got {num_sigma_draws}"
        )));
    }
    if !(c_w > 0.0 && c_phi > 0.0) {
        return Err(Error::InvalidArgument(
            "c_w and c_phi must be positive".into(),
        ));
    }
    for (row, r) in x.outer_iter().enumerate() {
        let norm = r.dot(&r).sqrt();
        if norm > c_phi * (1.0 + 1e-12) {
            return Err(Error::NormViolation { row, norm, c_phi });
        }
    }

    let chunks = num_sigma_draws.div_ceil(SIGMA_CHUNK);
    let norms: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[c as u64]));
            let count = SIGMA_CHUNK.min(num_sigma_draws - c * SIGMA_CHUNK);
            let mut acc = vec![0.0; x.ncols()];
            (0..count)
                .map(|_| {
                    acc.iter_mut().for_each(|v| *v = 0.0);
                    for r in x.outer_iter() {
                        let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                        acc.iter_mut().zip(r.iter()).for_each(|(a, v)| *a += s * v);
                    }
                    acc.iter().map(|v| v * v).sum::<f64>().sqrt()
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let (mean_norm, sd) = crate::numeric::mean_and_std(&norms);
    let scale = c_w / n as f64;
    let estimate = scale * mean_norm;
    let std_error = scale * sd / (norms.len() as f64).sqrt();
    let bound = c_w * c_phi / (n as f64).sqrt();
    // the relative slack only absorbs rounding in the equality case
    let pass = estimate <= bound * (1.0 + 1e-12) + 3.0 * std_error;
    Ok(RademacherCheck {
        estimate,
        std_error,
        bound,
        pass,
    })
}
