//! Short-maturity implied volatility asymptotics for tempered stable models.
//!
//! Series expansions of the ATM digital price, implied volatility, skew and delta,
//! out-of-the-money smile asymptotics, Monte Carlo reference prices, and a pipeline
//! that estimates the jump activity index from option chains.

pub mod blackscholes;
pub mod error;
pub mod mixed;
pub mod models;
pub mod montecarlo;
pub mod otm;
pub mod pipeline;
pub mod presets;
pub mod purejump;
pub mod quad;
pub mod series;
pub mod special;
pub mod stable;

pub use error::{Error, Result};
pub use mixed::{build_mixed, eval_mixed, MixedBundle};
pub use models::{derive_constants, HestonSpec, Model, ModelConfig, StochVolSpec, TemperedStableParams};
pub use montecarlo::{McConfig, McEstimate};
pub use purejump::{build_purejump, eval_purejump, PureJumpBundle};
pub use series::{ExpansionBundle, Quantity, Series};
pub use stable::StableLaw;

/// Expansion for either model family.
#[derive(Debug, Clone)]
pub enum Expansion {
    PureJump(PureJumpBundle),
    Mixed(MixedBundle),
}

impl Expansion {
    pub fn build(model: &Model) -> Result<Self> {
        match model {
            Model::PureJump(p) => Ok(Self::PureJump(build_purejump(p)?)),
            Model::Mixed { jumps, sv } => Ok(Self::Mixed(build_mixed(jumps, sv)?)),
        }
    }

    pub fn series(&self, q: Quantity) -> Series {
        match self {
            Self::PureJump(b) => b.series(q),
            Self::Mixed(b) => b.series(q),
        }
    }

    pub fn eval(&self, q: Quantity, t: f64) -> f64 {
        match self {
            Self::PureJump(b) => b.eval(q, t),
            Self::Mixed(b) => b.eval(q, t),
        }
    }

    /// First (`second = false`) or second order truncation.
    pub fn eval_order(&self, q: Quantity, t: f64, second: bool) -> f64 {
        match self {
            Self::PureJump(b) => b.eval_order(q, t, second),
            Self::Mixed(b) => b.eval_order(q, t, second),
        }
    }

    pub fn to_bundle(&self) -> ExpansionBundle {
        match self {
            Self::PureJump(b) => b.to_bundle(),
            Self::Mixed(b) => b.to_bundle(),
        }
    }
}
