//! Unbiased risk estimation and empirical risk minimization for binary
//! classification from positive (P), negative (N) and unlabeled (U) samples.
//!
//! The crate is organised bottom-up:
//!
//! - [`losses`]: the zero-one loss, the scaled ramp surrogate and its
//!   difference-of-convex split, plus a numeric calibration certificate.
//! - [`datasets`]: Gaussian artificial data, CSV pools and two-sample draws.
//! - [`models`]: linear decision functions, optionally over a Gaussian
//!   empirical kernel map.
//! - [`risk`]: the PN, PU and NU empirical risk estimators and Monte-Carlo
//!   evaluation of the true risk.
//! - [`training`]: CCCP minimisation of the regularised estimators and
//!   k-fold model selection.
//! - [`bounds`]: estimation-error bounds and the comparators that predict
//!   which learning mode has the tighter bound.
//! - [`harness`]: sweeps over `n_u` or `pi`, result tables and the `advise`
//!   and `verify` reports used by the command line tool.

pub mod bounds;
pub mod datasets;
mod error;
pub mod harness;
pub mod losses;
pub mod models;
mod numeric;
pub mod risk;
pub mod training;

pub use error::{Error, Result};
pub use losses::Label;
pub use numeric::{derive_seed, NeumaierSum};

/// The three learning settings.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub enum Mode {
    #[serde(rename = "PN")]
    Pn,
    #[serde(rename = "PU")]
    Pu,
    #[serde(rename = "NU")]
    Nu,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Pn, Mode::Pu, Mode::Nu];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pn => "PN",
            Mode::Pu => "PU",
            Mode::Nu => "NU",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PN" => Ok(Mode::Pn),
            "PU" => Ok(Mode::Pu),
            "NU" => Ok(Mode::Nu),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}
