//! Black–Scholes kernel with zero rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_pdf, SQRT_2PI};

pub const VOL_MIN: f64 = 1e-6;
pub const VOL_MAX: f64 = 5.0;
pub const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub spot: f64,
    pub strike: f64,
    pub maturity: f64,
    pub vol: f64,
    pub kind: OptionKind,
}

impl Quote {
    pub fn new(spot: f64, strike: f64, maturity: f64, vol: f64, kind: OptionKind) -> Result<Self> {
        if !(spot > 0.0 && strike > 0.0 && maturity > 0.0 && vol > 0.0) {
            return Err(Error::Domain("spot, strike, maturity and vol must be positive".into()));
        }
        Ok(Self { spot, strike, maturity, vol, kind })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Greeks {
    pub price: f64,
    pub delta: f64,
    pub vega: f64,
}

fn d1d2(spot: f64, strike: f64, t: f64, vol: f64) -> (f64, f64) {
    let sd = vol * t.sqrt();
    let d1 = ((spot / strike).ln() + 0.5 * sd * sd) / sd;
    (d1, d1 - sd)
}

pub fn bs_price(spot: f64, strike: f64, t: f64, vol: f64, kind: OptionKind) -> f64 {
    let (d1, d2) = d1d2(spot, strike, t, vol);
    match kind {
        OptionKind::Call => spot * norm_cdf(d1) - strike * norm_cdf(d2),
        OptionKind::Put => strike * norm_cdf(-d2) - spot * norm_cdf(-d1),
    }
}

pub fn vega(spot: f64, strike: f64, t: f64, vol: f64) -> f64 {
    let (d1, _) = d1d2(spot, strike, t, vol);
    spot * norm_pdf(d1) * t.sqrt()
}

pub fn bs_delta(spot: f64, strike: f64, t: f64, vol: f64, kind: OptionKind) -> f64 {
    let (d1, _) = d1d2(spot, strike, t, vol);
    match kind {
        OptionKind::Call => norm_cdf(d1),
        OptionKind::Put => norm_cdf(d1) - 1.0,
    }
}

/// P(S_t ≥ K) under Black–Scholes.
pub fn bs_digital(spot: f64, strike: f64, t: f64, vol: f64) -> f64 {
    norm_cdf(d1d2(spot, strike, t, vol).1)
}

pub fn bs_price_greeks(q: &Quote) -> Greeks {
    Greeks {
        price: bs_price(q.spot, q.strike, q.maturity, q.vol, q.kind),
        delta: bs_delta(q.spot, q.strike, q.maturity, q.vol, q.kind),
        vega: vega(q.spot, q.strike, q.maturity, q.vol),
    }
}

/// Black–Scholes volatility matching `price`.
///
/// In-the-money prices are first mapped to the out-of-the-money twin through
/// parity. Newton on the log price from the Brenner–Subrahmanyam seed, with a
/// maintained bracket and bisection whenever a step leaves it.
pub fn implied_vol(price: f64, spot: f64, strike: f64, t: f64, kind: OptionKind) -> Result<f64> {
    if !(spot > 0.0 && strike > 0.0 && t > 0.0) {
        return Err(Error::Domain("spot, strike and maturity must be positive".into()));
    }
    let (lower, upper) = match kind {
        OptionKind::Call => ((spot - strike).max(0.0), spot),
        OptionKind::Put => ((strike - spot).max(0.0), strike),
    };
    let slack = 4.0 * f64::EPSILON * lower;
    if !(price > lower + slack && price < upper) {
        return Err(Error::OutOfBounds { price, lower, upper });
    }
    let (price, kind) = match kind {
        OptionKind::Call if strike < spot => (price - spot + strike, OptionKind::Put),
        OptionKind::Put if strike > spot => (price + spot - strike, OptionKind::Call),
        _ => (price, kind),
    };
    // subnormal prices carry too few significant bits to pin σ down
    if !(price >= f64::MIN_POSITIVE) {
        return Err(Error::OutOfBounds { price, lower, upper });
    }
    // Newton on ln C(σ) − ln price; the OTM price is positive and ln C is increasing
    let target = price.ln();
    let g = |s: f64| bs_price(spot, strike, t, s, kind).ln() - target;
    let (mut lo, mut hi) = (VOL_MIN, VOL_MAX);
    if g(lo) > 0.0 || g(hi) < 0.0 {
        return Err(Error::OutOfBounds {
            price,
            lower: bs_price(spot, strike, t, lo, kind),
            upper: bs_price(spot, strike, t, hi, kind),
        });
    }
    let mut s = (SQRT_2PI / t.sqrt() * price / spot).clamp(1e-3, 2.0);
    for _ in 0..MAX_ITER {
        let c = bs_price(spot, strike, t, s, kind);
        let gs = c.ln() - target;
        if gs == 0.0 {
            return Ok(s);
        }
        if gs > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let slope = vega(spot, strike, t, s) / c;
        let newton = s - gs / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - s).abs() <= 1e-14 * s || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        s = next;
    }
    Err(Error::NoConvergence(MAX_ITER))
}

/// ∂σ̂/∂κ from the digital P(S_t ≥ S₀e^κ) and the implied vol at κ (spot-free form).
pub fn skew_from_digital(kappa: f64, t: f64, digital: f64, sigma_hat: f64) -> f64 {
    let sd = sigma_hat * t.sqrt();
    let ek = kappa.exp();
    -(ek * digital - ek * norm_cdf(-(kappa + 0.5 * sd * sd) / sd)) / (t.sqrt() * norm_pdf((-kappa + 0.5 * sd * sd) / sd))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmIdentities {
    pub skew: f64,
    pub delta: f64,
    /// σ̂√t above 0.5, where the truncated ATM relation is unreliable.
    pub large_total_vol: bool,
}

/// ATM skew through the truncated two-factor relation and Δ = C/S₀ + P(S_t ≥ S₀).
/// `price_atm` is the ATM call price per unit spot.
pub fn atm_identities(sigma_hat: f64, digital_atm: f64, t: f64, price_atm: f64) -> AtmIdentities {
    let sd = sigma_hat * t.sqrt();
    let skew = (2.0 * std::f64::consts::PI / t).sqrt() * (0.5 - digital_atm - sd / (2.0 * SQRT_2PI)) * (1.0 + sd * sd / 8.0);
    AtmIdentities { skew, delta: price_atm + digital_atm, large_total_vol: sd > 0.5 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_price() {
        let p = bs_price(1.0, 1.0, 0.1, 0.2, OptionKind::Call);
        assert!((p - 0.025_22).abs() < 1e-4, "{p}");
    }

    #[test]
    fn parity() {
        for &k in &[0.7, 1.0, 1.3] {
            let c = bs_price(1.0, k, 0.5, 0.3, OptionKind::Call);
            let p = bs_price(1.0, k, 0.5, 0.3, OptionKind::Put);
            assert!((c - p - (1.0 - k)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_vol_limit() {
        let p = bs_price(1.0, 0.9, 0.1, 1e-8, OptionKind::Call);
        assert!((p - 0.1).abs() < 1e-12);
    }

    #[test]
    fn intrinsic_is_out_of_bounds() {
        assert!(matches!(implied_vol(0.1, 1.0, 0.9, 0.1, OptionKind::Call), Err(Error::OutOfBounds { .. })));
        assert!(matches!(implied_vol(1.0, 1.0, 0.9, 0.1, OptionKind::Call), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn roundtrip_itm_and_otm() {
        for &(k, kind) in &[(0.8, OptionKind::Call), (1.2, OptionKind::Put), (1.2, OptionKind::Call), (0.8, OptionKind::Put)] {
            let p = bs_price(1.0, k, 0.25, 0.37, kind);
            let iv = implied_vol(p, 1.0, k, 0.25, kind).unwrap();
            assert!((iv - 0.37).abs() < 1e-10, "{k} {kind:?} {iv}");
        }
    }

    #[test]
    fn flat_smile_has_zero_skew() {
        for &k in &[-0.1, 0.0, 0.05] {
            let d = bs_digital(1.0, f64::exp(k), 0.2, 0.25);
            assert!(skew_from_digital(k, 0.2, d, 0.25).abs() < 1e-12);
        }
    }
}
