//! ATM digital, implied vol, skew and delta expansions for the pure-jump model.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Result;
use crate::models::{derive_constants, TemperedStableParams};
use crate::series::{term, ExpansionBundle, Quantity, Series};
use crate::special::{factorial, gamma_neg};
use crate::stable::{one_sided_exact, OneSidedFunctionals, OneSidedPair, StableLaw};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureJumpBundle {
    pub params: TemperedStableParams,
    pub gamma_tilde: f64,
    pub p0: f64,
    /// (d_k, k(1−1/Y)) for k = 1..n.
    pub d_terms: Vec<(f64, f64)>,
    /// (e, 1/Y).
    pub e_term: (f64, f64),
    /// (f, 1).
    pub f_term: (f64, f64),
    pub sigma1: f64,
    pub sigma2: f64,
    pub n_order: usize,
}

/// max{k ≥ 1 : k(1−1/Y) ≤ 1}.
pub fn purejump_order(y: f64) -> usize {
    let step = 1.0 - 1.0 / y;
    let mut k = 1;
    while ((k + 1) as f64) * step <= 1.0 + 1e-12 {
        k += 1;
    }
    k
}

pub fn build_purejump(params: &TemperedStableParams) -> Result<PureJumpBundle> {
    build_purejump_with(params, &one_sided_exact(&OneSidedPair::from_params(params)))
}

/// Same as [`build_purejump`] with externally supplied one-sided functionals
/// (for instance Monte Carlo estimates).
pub fn build_purejump_with(params: &TemperedStableParams, fx: &OneSidedFunctionals) -> Result<PureJumpBundle> {
    let dc = derive_constants(params)?;
    let law = StableLaw::from_params(params);
    let y = params.y();
    let (c1, cm, g, m) = (params.c_plus(), params.c_minus(), params.g(), params.m());
    let gt = dc.gamma_tilde;
    let gn = gamma_neg(y);
    let p0 = law.positivity();
    let n = purejump_order(y);
    let mut d_terms = Vec::with_capacity(n);
    for k in 1..=n {
        let sgn = if (k - 1) % 2 == 0 { 1.0 } else { -1.0 };
        let dk = sgn * gt.powi(k as i32) * law.density_deriv_at_zero(k)? / factorial(k);
        d_terms.push((dk, k as f64 * (1.0 - 1.0 / y)));
    }
    let (ap, am) = (params.alpha_plus(), params.alpha_minus());
    let e = ap * fx.e_p_pos + am * fx.e_n_pos;
    let f = gt * (ap - am) * fx.e_p_fn + gn * ((1.0 - p0) * c1 * m.powf(y) - p0 * cm * g.powf(y));
    let sigma1 = law.expected_positive_part();
    let sigma2 = gn * ((1.0 - p0) * c1 * ((m - 1.0).powf(y) - m.powf(y)) - p0 * cm * ((g + 1.0).powf(y) - g.powf(y)));
    Ok(PureJumpBundle { params: *params, gamma_tilde: gt, p0, d_terms, e_term: (e, 1.0 / y), f_term: (f, 1.0), sigma1, sigma2, n_order: n })
}

impl PureJumpBundle {
    pub fn series(&self, q: Quantity) -> Series {
        let y = self.params.y();
        let s2p = (2.0 * PI).sqrt();
        let (e, f) = (self.e_term.0, self.f_term.0);
        let d = || self.d_terms.iter().enumerate();
        let terms = match q {
            Quantity::Digital => {
                let mut v = vec![term(self.p0, 0.0, "p0")];
                v.extend(d().map(|(i, &(c, x))| term(c, x, format!("d{}", i + 1))));
                v.push(term(e, 1.0 / y, "e"));
                v.push(term(f, 1.0, "f"));
                v
            }
            Quantity::Delta => {
                let mut v = vec![term(self.p0, 0.0, "p0")];
                v.extend(d().map(|(i, &(c, x))| term(c, x, format!("d{}", i + 1))));
                v.push(term(self.sigma1 + e, 1.0 / y, "sigma1+e"));
                v.push(term(self.sigma2 + f, 1.0, "sigma2+f"));
                v
            }
            Quantity::AtmVol => vec![
                term(s2p * self.sigma1, 1.0 / y - 0.5, "sigma1"),
                term(s2p * self.sigma2, 0.5, "sigma2"),
            ],
            Quantity::Skew => {
                let mut v = vec![term(s2p * (0.5 - self.p0), -0.5, "1/2-p0")];
                v.extend(d().map(|(i, &(c, x))| term(-s2p * c, x - 0.5, format!("d{}", i + 1))));
                v.push(term(-s2p * (e + 0.5 * self.sigma1), 1.0 / y - 0.5, "e+sigma1/2"));
                v.push(term(-s2p * (f + 0.5 * self.sigma2), 0.5, "f+sigma2/2"));
                v
            }
        };
        Series::new(terms)
    }

    pub fn eval(&self, q: Quantity, t: f64) -> f64 {
        self.series(q).eval(t)
    }

    /// Largest retained exponent for the first-order (t^{1/Y}) and second-order (t) truncations.
    pub fn order_cutoff(&self, q: Quantity, second: bool) -> f64 {
        let base = if second { 1.0 } else { 1.0 / self.params.y() };
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
                "model": "purejump",
                "params": self.params,
                "gamma_tilde": self.gamma_tilde,
                "p0": self.p0,
                "d": self.d_terms.iter().map(|x| x.0).collect::<Vec<_>>(),
                "e": self.e_term.0,
                "f": self.f_term.0,
                "sigma1": self.sigma1,
                "sigma2": self.sigma2,
                "n_order": self.n_order,
            }),
        )
    }
}

/// Convenience: expansion value for one quantity.
pub fn eval_purejump(bundle: &PureJumpBundle, q: Quantity, t: f64) -> f64 {
    bundle.eval(q, t)
}
