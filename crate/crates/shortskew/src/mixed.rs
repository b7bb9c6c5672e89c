//! Expansions for jumps plus a (stochastic-)volatility diffusion.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::models::{derive_constants, StochVolSpec, TemperedStableParams};
use crate::series::{term, ExpansionBundle, Quantity, Series};
use crate::special::{gamma, SQRT_2PI};
use crate::stable::generator_psi_coeffs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedBundle {
    pub params: TemperedStableParams,
    pub gamma_tilde: f64,
    /// (d_k, k(1−Y/2)).
    pub d_terms: Vec<(f64, f64)>,
    /// (e, 1/2).
    pub e_term: (f64, f64),
    /// (f, (3−Y)/2).
    pub f_term: (f64, f64),
    pub sigma_bar1: f64,
    pub c_skew: f64,
    pub xi_const: f64,
    pub spot_vol: f64,
    pub mu0: f64,
    pub rho: f64,
    pub sigma_prime_gamma: f64,
    pub n_order: usize,
}

/// max{k ≥ 1 : k(1−Y/2) ≤ (3−Y)/2}.
pub fn mixed_order(y: f64) -> usize {
    let step = 1.0 - y / 2.0;
    let cap = (3.0 - y) / 2.0;
    let mut k = 1;
    while ((k + 1) as f64) * step <= cap + 1e-12 {
        k += 1;
    }
    k
}

pub fn build_mixed(params: &TemperedStableParams, sv: &StochVolSpec) -> Result<MixedBundle> {
    let dc = derive_constants(params)?;
    let s0 = sv.sigma0();
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(Error::Domain(format!("spot volatility {s0} must be positive")));
    }
    let y = params.y();
    let (c1, cm) = (params.c_plus(), params.c_minus());
    let a = c1 + cm;
    let gt = dc.gamma_tilde;
    let mu0 = sv.mu0();
    let rho = sv.rho();
    let spg = sv.sigma_prime_gamma();
    let n = mixed_order(y);
    let d = generator_psi_coeffs(params, s0, n)?;
    let d_terms = d.iter().enumerate().map(|(i, &c)| (c, (i + 1) as f64 * (1.0 - y / 2.0))).collect();
    let xi = s0.powf(1.0 - y) * 2f64.powf(-(y + 1.0) / 2.0) * gamma(1.0 - y / 2.0) / PI.sqrt();
    let e = (gt + mu0 - 0.5 * rho * spg) / (s0 * SQRT_2PI);
    let f = ((params.alpha_plus() * c1 + params.alpha_minus() * cm) / (y - 1.0)
        - a / (s0 * s0 * y) * (gt + mu0 - 0.5 * rho * spg * (1.0 + y)))
        * xi;
    let sigma_bar1 = a * 2f64.powf(-y / 2.0) / (y * (y - 1.0)) * gamma(1.0 - y / 2.0) * s0.powf(1.0 - y);
    Ok(MixedBundle {
        params: *params,
        gamma_tilde: gt,
        d_terms,
        e_term: (e, 0.5),
        f_term: (f, (3.0 - y) / 2.0),
        sigma_bar1,
        c_skew: gt - 0.5 * rho * spg,
        xi_const: xi,
        spot_vol: s0,
        mu0,
        rho,
        sigma_prime_gamma: spg,
        n_order: n,
    })
}

/// Leading-order skew shift ρσ′(y₀)γ(y₀)/(2σ(y₀)) from leverage.
pub fn leverage_contribution(sv: &StochVolSpec) -> Result<f64> {
    let s0 = sv.sigma0();
    if !(s0 > 0.0) {
        return Err(Error::Domain(format!("spot volatility {s0} must be positive")));
    }
    Ok(sv.rho() * sv.sigma_prime_gamma() / (2.0 * s0))
}

impl MixedBundle {
    pub fn series(&self, q: Quantity) -> Series {
        let y = self.params.y();
        let (e, f) = (self.e_term.0, self.f_term.0);
        let s0 = self.spot_vol;
        let d = || self.d_terms.iter().enumerate();
        let terms = match q {
            Quantity::Digital => {
                let mut v = vec![term(0.5, 0.0, "1/2")];
                v.extend(d().map(|(i, &(c, x))| term(c, x, format!("d{}", i + 1))));
                v.push(term(e, 0.5, "e"));
                v.push(term(f, (3.0 - y) / 2.0, "f"));
                v
            }
            Quantity::Delta => {
                let mut v = vec![term(0.5, 0.0, "1/2")];
                v.extend(d().map(|(i, &(c, x))| term(c, x, format!("d{}", i + 1))));
                v.push(term(s0 / SQRT_2PI + e, 0.5, "sigma0+e"));
                v.push(term(self.sigma_bar1 / SQRT_2PI + f, (3.0 - y) / 2.0, "sigma_bar1+f"));
                v
            }
            Quantity::AtmVol => vec![term(s0, 0.0, "sigma0"), term(self.sigma_bar1, (2.0 - y) / 2.0, "sigma_bar1")],
            Quantity::Skew => {
                let mut v: Vec<_> = d().map(|(i, &(c, x))| term(-SQRT_2PI * c, x - 0.5, format!("d{}", i + 1))).collect();
                v.push(term(-self.c_skew / s0, 0.0, "c/sigma0"));
                v.push(term(-(SQRT_2PI * f + 0.5 * self.sigma_bar1), 1.0 - y / 2.0, "f+sigma_bar1/2"));
                v
            }
        };
        Series::new(terms)
    }

    pub fn eval(&self, q: Quantity, t: f64) -> f64 {
        self.series(q).eval(t)
    }

    /// Largest retained exponent for the first-order (t^{1/2}) and second-order (t^{(3−Y)/2}) truncations.
    pub fn order_cutoff(&self, q: Quantity, second: bool) -> f64 {
        let base = if second { (3.0 - self.params.y()) / 2.0 } else { 0.5 };
        base + q.exponent_shift()
    }

    pub fn eval_order(&self, q: Quantity, t: f64, second: bool) -> f64 {
        self.series(q).eval_upto(t, self.order_cutoff(q, second))
    }

    pub fn to_bundle(&self) -> ExpansionBundle {
        let series: Vec<_> = Quantity::ALL.iter().map(|&q| (q, self.series(q))).collect();
        ExpansionBundle::from_series(
            &series,
            json!({
                "model": "mixed",
                "params": self.params,
                "gamma_tilde": self.gamma_tilde,
                "d": self.d_terms.iter().map(|x| x.0).collect::<Vec<_>>(),
                "e": self.e_term.0,
                "f": self.f_term.0,
                "sigma_bar1": self.sigma_bar1,
                "c": self.c_skew,
                "xi": self.xi_const,
                "spot_vol": self.spot_vol,
                "mu0": self.mu0,
                "rho": self.rho,
                "sigma_prime_gamma": self.sigma_prime_gamma,
                "n_order": self.n_order,
            }),
        )
    }
}

pub fn eval_mixed(bundle: &MixedBundle, q: Quantity, t: f64) -> f64 {
    bundle.eval(q, t)
}
