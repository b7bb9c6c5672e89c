//! Named parameter sets used in examples and tests.

use crate::models::{HestonSpec, ModelConfig};

fn ts(c_plus: f64, c_minus: f64, g: f64, m: f64, y: f64) -> ModelConfig {
    ModelConfig { model: "ts".into(), c_plus, c_minus, g, m, y, sigma: None, mu: None, heston: None }
}

/// Pure-jump set with a negative short-dated skew.
pub fn kawai() -> ModelConfig {
    ts(0.015, 0.041, 2.318, 4.025, 1.35)
}

/// Pure-jump set with a positive short-dated skew.
pub fn andersen() -> ModelConfig {
    ts(0.0088, 0.0044, 0.41, 1.93, 1.5)
}

/// Tempered stable jumps plus Brownian motion, σ = 0.1.
pub fn mixed_bm() -> ModelConfig {
    ModelConfig { model: "ts+bm".into(), sigma: Some(0.1), ..ts(0.0040, 0.0013, 0.41, 1.93, 1.5) }
}

/// Same jumps with Heston variance, spot vol 0.1 and ρ = −0.3.
/// The vol-of-vol is chosen so that the leading skew is 0.305 at t = 0.1.
pub fn mixed_heston() -> ModelConfig {
    ModelConfig {
        model: "ts+heston".into(),
        heston: Some(HestonSpec { v0: 0.01, kappa: 3.0, theta: 0.01, xi_volvol: -0.4107, rho: -0.3 }),
        ..ts(0.0040, 0.0013, 0.41, 1.93, 1.5)
    }
}

/// C₊ making γ̃ vanish for the given C₋, G, M, Y.
pub fn zero_drift_c_plus(c_minus: f64, g: f64, m: f64, y: f64) -> f64 {
    -c_minus * ((g + 1.0).powf(y) - g.powf(y)) / ((m - 1.0).powf(y) - m.powf(y))
}

/// Mixed model used for the synthetic calibration round trip: γ̃ = 0, light tempering, σ = 0.1.
pub fn closure() -> ModelConfig {
    let (c_minus, g, m, y) = (0.001, 1.0, 1.2, 1.5);
    ModelConfig {
        model: "ts+bm".into(),
        sigma: Some(0.1),
        ..ts(zero_drift_c_plus(c_minus, g, m, y), c_minus, g, m, y)
    }
}

pub fn by_name(name: &str) -> Option<ModelConfig> {
    Some(match name {
        "kawai" => kawai(),
        "andersen" => andersen(),
        "mixed_bm" => mixed_bm(),
        "mixed_heston" => mixed_heston(),
        "closure" => closure(),
        _ => return None,
    })
}

pub const NAMES: [&str; 5] = ["kawai", "andersen", "mixed_bm", "mixed_heston", "closure"];
