//! Out-of-the-money implied volatility and skew for fixed log-moneyness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::TemperedStableParams;
use crate::quad::{self, Tolerance};
use crate::special::sign;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtmInputs {
    pub kappa: f64,
    pub levy_measure: TemperedStableParams,
    /// Brownian volatility; the OTM expansion does not depend on it.
    pub sigma_bm: f64,
}

impl OtmInputs {
    pub fn new(kappa: f64, levy_measure: TemperedStableParams, sigma_bm: f64) -> Result<Self> {
        if kappa == 0.0 || !kappa.is_finite() {
            return Err(Error::Domain("log-moneyness kappa must be finite and nonzero".into()));
        }
        if !(sigma_bm >= 0.0) {
            return Err(Error::Domain("sigma_bm must be nonnegative".into()));
        }
        Ok(Self { kappa, levy_measure, sigma_bm })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtmConstants {
    pub a0: f64,
    pub b0: f64,
    /// ln a0, finite even where a0 underflows.
    pub ln_a0: f64,
    /// b0/a0, computed without the common exponential factor.
    pub b0_over_a0: f64,
}

/// Side of ν beyond |κ|: (intensity, tempering rate on that side, exponential shift for the payoff).
fn side(p: &TemperedStableParams, kappa: f64) -> (f64, f64) {
    if kappa > 0.0 {
        (p.c_plus(), p.m())
    } else {
        (p.c_minus(), p.g())
    }
}

/// ν([κ,∞)) for κ > 0 or ν((−∞,κ]) for κ < 0.
pub fn tail_mass(p: &TemperedStableParams, kappa: f64) -> Result<f64> {
    if kappa == 0.0 {
        return Err(Error::Domain("tail mass is infinite at 0".into()));
    }
    let (c, rate) = side(p, kappa);
    let y = p.y();
    let k = kappa.abs();
    if (-rate * k).exp() * k.powf(-y) < 1e-300 {
        // leading term of the incomplete-gamma asymptote
        return Ok(c * (-rate * k - (y + 1.0) * k.ln()).exp() / rate);
    }
    let i = quad::integrate_to_inf(|u| (-rate * u).exp() * (k + u).powf(-y - 1.0), 0.0, Tolerance::new(0.0, 1e-12))?;
    Ok(c * (-rate * k).exp() * i.value)
}

/// a₀(κ) = ∫(e^x − e^κ)⁺ν(dx) for κ > 0 and ∫(e^κ − e^x)⁺ν(dx) for κ < 0;
/// b₀(κ) = −e^κ ν([κ,∞)) resp. −e^κ ν((−∞,κ]).
pub fn otm_constants(inputs: &OtmInputs) -> Result<OtmConstants> {
    let kappa = inputs.kappa;
    if kappa == 0.0 {
        return Err(Error::Domain("kappa must be nonzero".into()));
    }
    let p = &inputs.levy_measure;
    let (c, rate) = side(p, kappa);
    if c == 0.0 {
        return Err(Error::Domain("the Levy measure has no mass beyond kappa".into()));
    }
    if kappa > 0.0 && p.m() <= 1.0 {
        return Err(Error::Domain("a0 diverges for M <= 1".into()));
    }
    let y = p.y();
    let k = kappa.abs();
    let tol = Tolerance::new(0.0, 1e-12);
    // x = ±(|κ| + u); both integrals share the factor c·e^{κ}·e^{−rate|κ|}
    let weight = |u: f64| {
        if kappa > 0.0 {
            (-(rate - 1.0) * u).exp() - (-rate * u).exp()
        } else {
            -(-u).exp_m1() * (-rate * u).exp()
        }
    };
    let ia = quad::integrate_to_inf(|u| weight(u) * (k + u).powf(-y - 1.0), 0.0, tol)?.value;
    let ib = quad::integrate_to_inf(|u| (-rate * u).exp() * (k + u).powf(-y - 1.0), 0.0, tol)?.value;
    let ln_pref = c.ln() + kappa - rate * k;
    let ln_a0 = ln_pref + ia.ln();
    Ok(OtmConstants { a0: ln_a0.exp(), b0: -(ln_pref + ib.ln()).exp(), ln_a0, b0_over_a0: -ib / ia })
}

fn check_t(t: f64) -> Result<f64> {
    if !(t > 0.0 && t < (-1.0f64).exp()) {
        return Err(Error::Domain(format!("t = {t} must lie in (0, 1/e)")));
    }
    Ok((1.0 / t).ln())
}

/// V₁(t,κ) = ln(4√π a₀ e^{−κ/2}/|κ| · ln(1/t)^{3/2}) / ln(1/t).
pub fn v1(inputs: &OtmInputs, t: f64) -> Result<f64> {
    let l = check_t(t)?;
    let oc = otm_constants(inputs)?;
    let kappa = inputs.kappa;
    Ok(((4.0 * std::f64::consts::PI.sqrt()).ln() + oc.ln_a0 - kappa / 2.0 - kappa.abs().ln() + 1.5 * l.ln()) / l)
}

/// Implied volatility from σ̂²t = κ²(1 + V₁)/(2 ln(1/t)).
pub fn otm_vol(inputs: &OtmInputs, t: f64) -> Result<f64> {
    let l = check_t(t)?;
    let v = v1(inputs, t)?;
    Ok(inputs.kappa.abs() * ((1.0 + v).max(0.0) / (2.0 * t * l)).sqrt())
}

/// ∂σ̂/∂κ at fixed κ ≠ 0.
pub fn otm_skew(inputs: &OtmInputs, t: f64) -> Result<f64> {
    let l = check_t(t)?;
    let oc = otm_constants(inputs)?;
    let v = v1(inputs, t)?;
    let kappa = inputs.kappa;
    let s = sign(kappa);
    let num = s * (1.0 + v / 2.0) - s * (1.0 + kappa / 2.0 - kappa * oc.b0_over_a0) / (2.0 * l);
    Ok(num / (2.0 * t * l).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn andersen() -> TemperedStableParams {
        TemperedStableParams::new(0.0088, 0.0044, 0.41, 1.93, 1.5).unwrap()
    }

    #[test]
    fn zero_kappa_rejected() {
        assert!(OtmInputs::new(0.0, andersen(), 0.0).is_err());
    }

    #[test]
    fn far_tail_vanishes() {
        let i = OtmInputs::new(10.0, andersen(), 0.0).unwrap();
        let oc = otm_constants(&i).unwrap();
        assert!(oc.a0 < 1e-8 && oc.b0.abs() < 1e-8);
    }

    #[test]
    fn t_domain() {
        let i = OtmInputs::new(0.05, andersen(), 0.0).unwrap();
        assert!(otm_skew(&i, 0.4).is_err());
        assert!(otm_skew(&i, 0.05).unwrap().is_finite());
    }

    #[test]
    fn asymptote_branch() {
        let p = TemperedStableParams::new(0.01, 0.01, 2.0, 3.0, 1.5).unwrap();
        let v = tail_mass(&p, 300.0).unwrap();
        assert!(v >= 0.0 && v < 1e-300);
    }
}
