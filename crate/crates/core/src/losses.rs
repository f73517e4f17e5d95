//! Zero-one loss, the scaled ramp surrogate and its calibration check.
//!
//! Both losses satisfy the symmetric condition `l(t,+1) + l(t,-1) = 1`,
//! which is what makes the PU and NU risk estimators unbiased.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A binary label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    /// `+1.0` or `-1.0`.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn from_sign(y: f64) -> Option<Label> {
        if y == 1.0 {
            Some(Label::Pos)
        } else if y == -1.0 {
            Some(Label::Neg)
        } else {
            None
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

/// A margin loss `l(t, y)` together with the constants the bounds need.
#[derive(Clone, Copy)]
pub struct LossDescriptor {
    pub name: &'static str,
    pub value: fn(f64, Label) -> f64,
    /// Lipschitz constant in `t`; infinite for discontinuous losses.
    pub lipschitz: f64,
    pub is_symmetric: bool,
}

impl std::fmt::Debug for LossDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LossDescriptor")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("is_symmetric", &self.is_symmetric)
            .finish()
    }
}

impl LossDescriptor {
    pub fn scaled_ramp() -> Self {
        Self {
            name: "scaled_ramp",
            value: scaled_ramp,
            lipschitz: 0.5,
            is_symmetric: true,
        }
    }

    pub fn zero_one() -> Self {
        Self {
            name: "zero_one",
            value: zero_one,
            lipschitz: f64::INFINITY,
            is_symmetric: true,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64, y: Label) -> f64 {
        (self.value)(t, y)
    }
}

/// `max(0, min(1, (1 - t y) / 2))`.
#[inline]
pub fn scaled_ramp(t: f64, y: Label) -> f64 {
    ((1.0 - t * y.sign()) / 2.0).clamp(0.0, 1.0)
}

/// `(1 - sign(t y)) / 2` with `sign(0) = 0`, so a zero score costs 1/2.
#[inline]
pub fn zero_one(t: f64, y: Label) -> f64 {
    let m = t * y.sign();
    if m > 0.0 {
        0.0
    } else if m < 0.0 {
        1.0
    } else {
        0.5
    }
}

/// Splits the scaled ramp into a convex hinge plus a concave negated hinge:
/// `max(0,(1-ty)/2) + (-max(0,(-1-ty)/2))`.
#[inline]
pub fn dc_split(t: f64, y: Label) -> (f64, f64) {
    let m = t * y.sign();
    let convex = ((1.0 - m) / 2.0).max(0.0);
    let concave = -((-1.0 - m) / 2.0).max(0.0);
    (convex, concave)
}

/// Conditional scaled-ramp risk `E_Y[l(g, Y) | x]` given `p(Y=+1|x) = pi_plus`,
/// in its closed piecewise form.
pub fn conditional_risk(pi_plus: f64, g_val: f64) -> f64 {
    let pi_minus = 1.0 - pi_plus;
    if g_val <= -1.0 {
        pi_plus
    } else if g_val >= 1.0 {
        pi_minus
    } else {
        0.5 - (pi_plus - pi_minus) * g_val / 2.0
    }
}

const CALIBRATION_TOL: f64 = 1e-12;

/// Grid certificate that minimising the conditional ramp risk recovers the
/// Bayes decision `sign(pi_plus - pi_minus)` with value `min(pi_plus, pi_minus)`.
///
/// Every grid point is also cross-checked against the direct expectation
/// `pi_plus * l(g,+1) + pi_minus * l(g,-1)`. At `pi_plus = 1/2` only the
/// minimum value is checked since every `g` in `[-1, 1]` ties.
pub fn verify_calibration(pi_plus_grid: &[f64], g_grid: &[f64]) -> Result<()> {
    if pi_plus_grid.is_empty() || g_grid.is_empty() {
        return Err(Error::InvalidArgument(
            "calibration grids must be non-empty".into(),
        ));
    }
    let lo = g_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = g_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo > -2.0 || hi < 2.0 {
        return Err(Error::InvalidArgument(format!(
            "g grid must span [-2, 2], got [{lo}, {hi}]"
        )));
    }

    for &p in pi_plus_grid {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "pi_plus = {p} outside [0, 1]"
            )));
        }
        let q = 1.0 - p;
        let mut best = f64::INFINITY;
        for &g in g_grid {
            let closed = conditional_risk(p, g);
            let direct = p * scaled_ramp(g, Label::Pos) + q * scaled_ramp(g, Label::Neg);
            if (closed - direct).abs() > CALIBRATION_TOL {
                return Err(Error::CalibrationFailure {
                    pi_plus: p,
                    g,
                    reason: format!("closed form {closed} disagrees with expectation {direct}"),
                });
            }
            best = best.min(closed);
        }

        let target = p.min(q);
        if (best - target).abs() > CALIBRATION_TOL {
            let g = argmin_first(p, g_grid);
            return Err(Error::CalibrationFailure {
                pi_plus: p,
                g,
                reason: format!("minimum {best} differs from min(pi+, pi-) = {target}"),
            });
        }
        if p == 0.5 {
            continue;
        }
        let want = (p - q).signum();
        for &g in g_grid {
            if conditional_risk(p, g) <= best + CALIBRATION_TOL && g.signum() != want {
                return Err(Error::CalibrationFailure {
                    pi_plus: p,
                    g,
                    reason: format!(
                        "minimiser has sign {} but pi+ - pi- = {}",
                        g.signum(),
                        p - q
                    ),
                });
            }
        }
    }
    Ok(())
}

fn argmin_first(p: f64, g_grid: &[f64]) -> f64 {
    g_grid
        .iter()
        .copied()
        .min_by(|a, b| conditional_risk(p, *a).total_cmp(&conditional_risk(p, *b)))
        .unwrap_or(f64::NAN)
}

/// `{lo, lo+step, ..., hi}` built from integer multiples to avoid drift.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as i64;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ramp_examples() {
        assert_eq!(scaled_ramp(0.0, Label::Pos), 0.5);
        assert_eq!(scaled_ramp(3.0, Label::Pos), 0.0);
        assert_eq!(scaled_ramp(-3.0, Label::Pos), 1.0);
        // (1 + 0.4) / 2
        assert!((scaled_ramp(0.4, Label::Neg) - 0.7).abs() < 1e-15);
        let d = LossDescriptor::scaled_ramp();
        assert_eq!(d.lipschitz, 0.5);
        assert!(d.is_symmetric);
    }

    #[test]
    fn zero_one_examples() {
        assert_eq!(zero_one(2.0, Label::Pos), 0.0);
        assert_eq!(zero_one(-1.0, Label::Pos), 1.0);
        assert_eq!(zero_one(0.0, Label::Pos), 0.5);
        assert_eq!(zero_one(0.0, Label::Neg), 0.5);
        assert_eq!(zero_one(-2.0, Label::Neg), 0.0);
    }

    #[test]
    fn dc_split_examples() {
        assert_eq!(dc_split(0.0, Label::Pos), (0.5, 0.0));
        assert_eq!(dc_split(-3.0, Label::Pos), (2.0, -1.0));
        let (a, b) = dc_split(3.0, Label::Pos);
        assert_eq!((a, b), (0.0, 0.0));
    }

    #[test]
    fn conditional_risk_examples() {
        for g in [-5.0, -1.0, -0.3, 0.0, 0.7, 1.0, 4.0] {
            assert_eq!(conditional_risk(0.5, g), 0.5);
        }
        assert!((conditional_risk(0.8, 1.0) - 0.2).abs() < 1e-15);
        assert_eq!(conditional_risk(0.8, -1.0), 0.8);
    }

    #[test]
    fn calibration_on_default_grid() {
        let pis: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let gs = uniform_grid(-2.0, 2.0, 0.01);
        verify_calibration(&pis, &gs).unwrap();
    }

    #[test]
    fn calibration_degenerate_priors() {
        let gs = uniform_grid(-2.0, 2.0, 0.01);
        verify_calibration(&[0.5], &gs).unwrap();
        let ties = gs
            .iter()
            .filter(|&&g| (conditional_risk(0.5, g) - 0.5).abs() < 1e-15)
            .count();
        assert_eq!(ties, gs.len());
        verify_calibration(&[1.0, 0.0], &gs).unwrap();
        assert_eq!(conditional_risk(1.0, 1.0), 0.0);
    }

    #[test]
    fn calibration_rejects_narrow_grid() {
        let gs = uniform_grid(-1.0, 1.0, 0.01);
        assert!(matches!(
            verify_calibration(&[0.3], &gs),
            Err(Error::InvalidArgument(_))
        ));
        assert!(verify_calibration(&[], &gs).is_err());
    }

    #[test]
    fn symmetry_exact_on_many_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1_000_000 {
            let t: f64 = rng.random_range(-10.0..10.0);
            assert_eq!(
                scaled_ramp(t, Label::Pos) + scaled_ramp(t, Label::Neg),
                1.0,
                "t = {t}"
            );
            assert_eq!(zero_one(t, Label::Pos) + zero_one(t, Label::Neg), 1.0);
        }
    }

    proptest! {
        #[test]
        fn ramp_is_half_lipschitz(t in -20.0f64..20.0, u in -20.0f64..20.0, pos in any::<bool>()) {
            let y = if pos { Label::Pos } else { Label::Neg };
            let lhs = (scaled_ramp(t, y) - scaled_ramp(u, y)).abs();
            prop_assert!(lhs <= 0.5 * (t - u).abs() + 1e-15);
        }

        #[test]
        fn dc_parts_sum_to_ramp(t in -50.0f64..50.0, pos in any::<bool>()) {
            let y = if pos { Label::Pos } else { Label::Neg };
            let (a, b) = dc_split(t, y);
            prop_assert!(a >= 0.0 && b <= 0.0);
            prop_assert!((a + b - scaled_ramp(t, y)).abs() <= 1e-12);
        }

        #[test]
        fn losses_bounded(t in proptest::num::f64::NORMAL, pos in any::<bool>()) {
            let y = if pos { Label::Pos } else { Label::Neg };
            for v in [scaled_ramp(t, y), zero_one(t, y)] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
