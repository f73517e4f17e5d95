//! Empirical risk estimators for PN, PU and NU learning.
//!
//! With `R+ = E+[l(g,+1)]`, `R- = E-[l(g,-1)]` and the symmetric condition
//! `l(t,+1) + l(t,-1) = 1`, the risk `pi R+ + (1-pi) R-` can be rewritten as
//! `2 pi R+ + E_p[l(g,-1)] - pi` (PU) or `E_p[l(g,+1)] + 2 (1-pi) R- - (1-pi)`
//! (NU). Replacing expectations with sample means gives unbiased estimates.
//! None of the estimators is clamped, so PU/NU values can be negative.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::datasets::LabeledPool;
use crate::losses::LossDescriptor;
use crate::models::DecisionModel;
use crate::numeric::NeumaierSum;
use crate::{Error, Label, Mode, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskKind {
    #[serde(rename = "PN")]
    Pn,
    #[serde(rename = "PU")]
    Pu,
    #[serde(rename = "NU")]
    Nu,
    #[serde(rename = "TRUE")]
    True,
}

impl From<Mode> for RiskKind {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Pn => RiskKind::Pn,
            Mode::Pu => RiskKind::Pu,
            Mode::Nu => RiskKind::Nu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub value: f64,
    pub mode: RiskKind,
    pub loss_name: String,
    pub pi: f64,
}

impl RiskReport {
    /// The interval any estimate can occupy when `l` takes values in `[0, 1]`.
    pub fn admissible_range(&self) -> (f64, f64) {
        let pi = self.pi;
        match self.mode {
            RiskKind::Pn | RiskKind::True => (0.0, 1.0),
            RiskKind::Pu => (-pi, 1.0 + pi),
            RiskKind::Nu => (-(1.0 - pi), 2.0 - pi),
        }
    }

    pub fn in_range(&self) -> bool {
        let (lo, hi) = self.admissible_range();
        self.value >= lo - 1e-12 && self.value <= hi + 1e-12
    }
}

/// Compensated mean of `l(g(x), y)` over the rows of `x`.
pub fn mean_loss(
    model: &DecisionModel,
    x: &Array2<f64>,
    y: Label,
    loss: &LossDescriptor,
) -> Result<f64> {
    mean_of_scores(&model.predict_rows(x.view())?.to_vec(), y, loss)
}

fn mean_of_scores(scores: &[f64], y: Label, loss: &LossDescriptor) -> Result<f64> {
    let n = scores.len();
    let total = scores
        .iter()
        .map(|&t| loss.eval(t, y))
        .collect::<NeumaierSum>()
        .total();
    Ok(total / n as f64)
}

fn nonempty(x: &Array2<f64>, name: &'static str) -> Result<()> {
    if x.nrows() == 0 {
        Err(Error::EmptySample(name))
    } else {
        Ok(())
    }
}

fn symmetric(loss: &LossDescriptor) -> Result<()> {
    if loss.is_symmetric {
        Ok(())
    } else {
        Err(Error::AsymmetricLoss(loss.name))
    }
}

fn valid_prior(pi: f64) -> Result<()> {
    if pi > 0.0 && pi < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "class prior must lie in (0, 1), got {pi}"
        )))
    }
}

/// `pi * mean+[l(g,+1)] + (1-pi) * mean-[l(g,-1)]`.
pub fn risk_pn(
    model: &DecisionModel,
    x_pos: &Array2<f64>,
    x_neg: &Array2<f64>,
    pi: f64,
    loss: &LossDescriptor,
) -> Result<f64> {
    valid_prior(pi)?;
    nonempty(x_pos, "positive")?;
    nonempty(x_neg, "negative")?;
    let rp = mean_loss(model, x_pos, Label::Pos, loss)?;
    let rn = mean_loss(model, x_neg, Label::Neg, loss)?;
    Ok(pi * rp + (1.0 - pi) * rn)
}

/// `-pi + 2 pi * mean+[l(g,+1)] + mean_u[l(g,-1)]`.
pub fn risk_pu(
    model: &DecisionModel,
    x_pos: &Array2<f64>,
    x_unl: &Array2<f64>,
    pi: f64,
    loss: &LossDescriptor,
) -> Result<f64> {
    symmetric(loss)?;
    valid_prior(pi)?;
    nonempty(x_pos, "positive")?;
    nonempty(x_unl, "unlabeled")?;
    let rp = mean_loss(model, x_pos, Label::Pos, loss)?;
    let ru = mean_loss(model, x_unl, Label::Neg, loss)?;
    Ok(-pi + 2.0 * pi * rp + ru)
}

/// `-(1-pi) + mean_u[l(g,+1)] + 2 (1-pi) * mean-[l(g,-1)]`.
pub fn risk_nu(
    model: &DecisionModel,
    x_unl: &Array2<f64>,
    x_neg: &Array2<f64>,
    pi: f64,
    loss: &LossDescriptor,
) -> Result<f64> {
    symmetric(loss)?;
    valid_prior(pi)?;
    nonempty(x_unl, "unlabeled")?;
    nonempty(x_neg, "negative")?;
    let ru = mean_loss(model, x_unl, Label::Pos, loss)?;
    let rn = mean_loss(model, x_neg, Label::Neg, loss)?;
    Ok(-(1.0 - pi) + ru + 2.0 * (1.0 - pi) * rn)
}

/// The estimator of `mode` on a triple's sets.
pub fn risk_for_mode(
    mode: Mode,
    model: &DecisionModel,
    triple: &crate::datasets::SampleTriple,
    loss: &LossDescriptor,
) -> Result<RiskReport> {
    let value = match mode {
        Mode::Pn => risk_pn(model, &triple.x_pos, &triple.x_neg, triple.pi, loss)?,
        Mode::Pu => risk_pu(model, &triple.x_pos, &triple.x_unl, triple.pi, loss)?,
        Mode::Nu => risk_nu(model, &triple.x_unl, &triple.x_neg, triple.pi, loss)?,
    };
    Ok(RiskReport {
        value,
        mode: mode.into(),
        loss_name: loss.name.to_string(),
        pi: triple.pi,
    })
}

/// Mean loss over labelled evaluation data; with the zero-one loss this is
/// the misclassification rate (a zero score counts as half an error).
pub fn risk_true_mc(
    model: &DecisionModel,
    eval: &LabeledPool,
    loss: &LossDescriptor,
) -> Result<f64> {
    risk_true_mc_with_stderr(model, eval, loss).map(|(m, _)| m)
}

/// Like [`risk_true_mc`], also returning the Monte-Carlo standard error.
pub fn risk_true_mc_with_stderr(
    model: &DecisionModel,
    eval: &LabeledPool,
    loss: &LossDescriptor,
) -> Result<(f64, f64)> {
    if eval.is_empty() {
        return Err(Error::EmptySample("evaluation"));
    }
    let scores = model.predict_rows(eval.features.view())?;
    let values: Vec<f64> = scores
        .iter()
        .zip(&eval.labels)
        .map(|(&t, &y)| loss.eval(t, y))
        .collect();
    let (m, sd) = crate::numeric::mean_and_std(&values);
    Ok((m, sd / (values.len() as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gen_gaussian_artificial, gen_gaussian_labeled};
    use ndarray::array;
    use proptest::prelude::*;

    fn hinge(t: f64, y: Label) -> f64 {
        (1.0 - t * y.sign()).max(0.0)
    }

    fn hinge_descriptor() -> LossDescriptor {
        LossDescriptor {
            name: "hinge",
            value: hinge,
            lipschitz: 1.0,
            is_symmetric: false,
        }
    }

    #[test]
    fn constant_zero_model_gives_one_half_everywhere() {
        let t = gen_gaussian_artificial(7, 11, 13, 0.37, 1).unwrap();
        let g = DecisionModel::constant(2, 0.0);
        for loss in [LossDescriptor::scaled_ramp(), LossDescriptor::zero_one()] {
            for mode in Mode::ALL {
                assert_eq!(risk_for_mode(mode, &g, &t, &loss).unwrap().value, 0.5);
            }
        }
    }

    #[test]
    fn separated_data_has_zero_pn_risk() {
        let xp = array![[3.0], [4.0]];
        let xn = array![[-3.0], [-5.0]];
        let g = DecisionModel::linear(array![1.0], 0.0);
        assert_eq!(
            risk_pn(&g, &xp, &xn, 0.4, &LossDescriptor::scaled_ramp()).unwrap(),
            0.0
        );
    }

    #[test]
    fn pn_convex_combination() {
        // positives all at score 0.6 -> ramp 0.2; negatives at score 0.2 -> ramp 0.6
        let g = DecisionModel::linear(array![1.0], 0.0);
        let xp = array![[0.6], [0.6]];
        let xn = array![[0.2]];
        let r = risk_pn(&g, &xp, &xn, 0.3, &LossDescriptor::scaled_ramp()).unwrap();
        assert!((r - 0.48).abs() < 1e-15, "{r}");
    }

    #[test]
    fn constant_sign_models() {
        let t = gen_gaussian_artificial(20, 20, 20, 0.3, 2).unwrap();
        let ramp = LossDescriptor::scaled_ramp();
        let plus = DecisionModel::constant(2, 3.0);
        let pu = risk_pu(&plus, &t.x_pos, &t.x_unl, 0.3, &ramp).unwrap();
        assert!((pu - 0.7).abs() < 1e-15);
        let minus = DecisionModel::constant(2, -3.0);
        let nu = risk_nu(&minus, &t.x_unl, &t.x_neg, 0.3, &ramp).unwrap();
        assert!((nu - 0.3).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_loss_is_rejected() {
        let t = gen_gaussian_artificial(3, 3, 3, 0.5, 0).unwrap();
        let g = DecisionModel::constant(2, 0.0);
        let h = hinge_descriptor();
        assert!(matches!(
            risk_pu(&g, &t.x_pos, &t.x_unl, 0.5, &h),
            Err(Error::AsymmetricLoss("hinge"))
        ));
        assert!(matches!(
            risk_nu(&g, &t.x_unl, &t.x_neg, 0.5, &h),
            Err(Error::AsymmetricLoss(_))
        ));
        // PN does not need the symmetric condition
        assert_eq!(risk_pn(&g, &t.x_pos, &t.x_neg, 0.5, &h).unwrap(), 1.0);
    }

    #[test]
    fn empty_sets_are_rejected() {
        let g = DecisionModel::constant(2, 0.0);
        let empty = Array2::<f64>::zeros((0, 2));
        let one = array![[0.0, 0.0]];
        let l = LossDescriptor::scaled_ramp();
        assert!(matches!(
            risk_pn(&g, &empty, &one, 0.5, &l),
            Err(Error::EmptySample("positive"))
        ));
        assert!(matches!(
            risk_pu(&g, &one, &empty, 0.5, &l),
            Err(Error::EmptySample("unlabeled"))
        ));
        assert!(matches!(
            risk_nu(&g, &one, &empty, 0.5, &l),
            Err(Error::EmptySample("negative"))
        ));
        let pool = LabeledPool::new(Array2::zeros((0, 2)), vec![]).unwrap();
        assert!(risk_true_mc(&g, &pool, &l).is_err());
    }

    #[test]
    fn true_risk_of_constant_on_balanced_pool() {
        let labels = [vec![Label::Pos; 50], vec![Label::Neg; 50]].concat();
        let pool = LabeledPool::new(Array2::zeros((100, 2)), labels).unwrap();
        let g = DecisionModel::constant(2, 3.0);
        assert_eq!(
            risk_true_mc(&g, &pool, &LossDescriptor::zero_one()).unwrap(),
            0.5
        );
    }

    #[test]
    fn ramp_and_zero_one_differ() {
        let pool = gen_gaussian_labeled(2_000, 0.5, 4).unwrap();
        let g = DecisionModel::linear(array![0.3, 0.3], 0.0);
        let a = risk_true_mc(&g, &pool, &LossDescriptor::scaled_ramp()).unwrap();
        let b = risk_true_mc(&g, &pool, &LossDescriptor::zero_one()).unwrap();
        assert!((a - b).abs() > 1e-3);
    }

    #[test]
    fn pu_std_shrinks_like_inverse_sqrt_n() {
        // doubling n+ and n_u should scale the estimator's spread by 1/sqrt(2)
        let g = DecisionModel::linear(array![0.8, -0.3], 0.1);
        let ramp = LossDescriptor::scaled_ramp();
        let spread = |n: usize, salt: u64| {
            let vals: Vec<f64> = (0..4_000u64)
                .map(|s| {
                    let t = gen_gaussian_artificial(n, 0, n, 0.4, s * 31 + salt).unwrap();
                    risk_pu(&g, &t.x_pos, &t.x_unl, 0.4, &ramp).unwrap()
                })
                .collect();
            crate::numeric::mean_and_std(&vals).1
        };
        let ratio = spread(80, 1) / spread(40, 2);
        let ideal = std::f64::consts::FRAC_1_SQRT_2;
        assert!((ratio / ideal - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    proptest! {
        #[test]
        fn estimates_stay_in_admissible_range(seed in 0u64..10_000, w0 in -5.0f64..5.0, w1 in -5.0f64..5.0, b in -3.0f64..3.0, pi in 0.05f64..0.95) {
            let t = gen_gaussian_artificial(5, 6, 7, pi, seed).unwrap();
            let g = DecisionModel::linear(array![w0, w1], b);
            for loss in [LossDescriptor::scaled_ramp(), LossDescriptor::zero_one()] {
                for mode in Mode::ALL {
                    let r = risk_for_mode(mode, &g, &t, &loss).unwrap();
                    prop_assert!(r.in_range(), "{:?}", r);
                }
            }
        }
    }
}
