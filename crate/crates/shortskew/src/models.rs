//! Model parameter records, validation and derived constants.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::special::gamma_neg;

/// Tempered stable Lévy measure
/// ν(dx) = C(±)|x|^{−Y−1}(e^{−Mx}1{x>0} + e^{−G|x|}1{x<0}) dx.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperedStableParams {
    c_plus: f64,
    c_minus: f64,
    g_minus: f64,
    m_plus: f64,
    y_index: f64,
}

impl TemperedStableParams {
    pub fn new(c_plus: f64, c_minus: f64, g_minus: f64, m_plus: f64, y_index: f64) -> Result<Self> {
        let all = [c_plus, c_minus, g_minus, m_plus, y_index];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("parameters must be finite".into()));
        }
        if c_plus < 0.0 || c_minus < 0.0 {
            return Err(Error::Domain("C(1) and C(-1) must be nonnegative".into()));
        }
        if c_plus + c_minus <= 0.0 {
            return Err(Error::Domain("C(1) + C(-1) must be positive".into()));
        }
        if g_minus <= 0.0 || m_plus <= 0.0 {
            return Err(Error::Domain("tempering rates G and M must be positive".into()));
        }
        if !(y_index > 1.0 && y_index < 2.0) {
            return Err(Error::Domain(format!("Y = {y_index} must lie strictly inside (1,2)")));
        }
        Ok(Self { c_plus, c_minus, g_minus, m_plus, y_index })
    }

    pub fn c_plus(&self) -> f64 {
        self.c_plus
    }
    pub fn c_minus(&self) -> f64 {
        self.c_minus
    }
    pub fn g(&self) -> f64 {
        self.g_minus
    }
    pub fn m(&self) -> f64 {
        self.m_plus
    }
    pub fn y(&self) -> f64 {
        self.y_index
    }

    /// Tempering slopes at the origin: α(1) = −M, α(−1) = G.
    pub fn alpha_plus(&self) -> f64 {
        -self.m_plus
    }
    pub fn alpha_minus(&self) -> f64 {
        self.g_minus
    }

    /// Same law seen through x ↦ −x.
    pub fn mirrored(&self) -> Result<Self> {
        Self::new(self.c_minus, self.c_plus, self.m_plus, self.g_minus, self.y_index)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.c_plus * lambda, self.c_minus * lambda, self.g_minus, self.m_plus, self.y_index)
    }

    /// Lévy density at x ≠ 0.
    pub fn levy_density(&self, x: f64) -> f64 {
        let y = self.y_index;
        if x > 0.0 {
            self.c_plus * (-self.m_plus * x).exp() * x.powf(-y - 1.0)
        } else if x < 0.0 {
            let a = -x;
            self.c_minus * (-self.g_minus * a).exp() * a.powf(-y - 1.0)
        } else {
            f64::INFINITY
        }
    }
}

impl fmt::Display for TemperedStableParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TS(C+={}, C-={}, G={}, M={}, Y={})",
            self.c_plus, self.c_minus, self.g_minus, self.m_plus, self.y_index
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Drift of X under the stable measure, per unit time.
    pub gamma_tilde: f64,
    /// Compensator of the log-density process, per unit time.
    pub eta: f64,
    /// Drift b (truncation 1{|x|≤1}) fixed by the martingale condition.
    pub b_drift: f64,
}

/// γ̃, η and b in closed form (b needs one quadrature for the |x| > 1 tails).
pub fn derive_constants(p: &TemperedStableParams) -> Result<DerivedConstants> {
    if p.m_plus <= 1.0 {
        return Err(Error::Domain(format!(
            "M = {} must exceed 1 for the exponential moment to exist",
            p.m_plus
        )));
    }
    let (c1, cm, g, m, y) = (p.c_plus, p.c_minus, p.g_minus, p.m_plus, p.y_index);
    let gn = gamma_neg(y);
    let gamma_tilde = -gn * (c1 * ((m - 1.0).powf(y) - m.powf(y)) + cm * ((g + 1.0).powf(y) - g.powf(y)));
    let eta = gn * (c1 * m.powf(y) + cm * g.powf(y));

    // ∫(e^x − 1 − x)ν(dx) on each half line, then move the |x| > 1 part of x back.
    let j_plus = c1 * gn * ((m - 1.0).powf(y) - m.powf(y) + y * m.powf(y - 1.0));
    let j_minus = cm * gn * ((g + 1.0).powf(y) - g.powf(y) - y * g.powf(y - 1.0));
    let tail = |rate: f64| -> Result<f64> {
        Ok(quad::integrate_to_inf(|x| x.powf(-y) * (-rate * x).exp(), 1.0, Tolerance::new(1e-15, 1e-12))?.value)
    };
    let big_jumps = c1 * tail(m)? - cm * tail(g)?;
    let b_drift = -(j_plus + j_minus) - big_jumps;
    Ok(DerivedConstants { gamma_tilde, eta, b_drift })
}

/// γ̃ from its definition: b + (C(1)−C(−1))/(Y−1) plus the small-jump tempering corrections.
pub fn gamma_tilde_from_drift(p: &TemperedStableParams, b: f64) -> Result<f64> {
    let y = p.y_index;
    let tol = Tolerance::new(1e-15, 1e-12);
    let corr = |rate: f64| -> Result<f64> {
        Ok(quad::integrate_singular_left(
            |x| x.powf(-y) * -(-rate * x).exp_m1(),
            0.0,
            1.0,
            y - 1.0,
            tol,
        )?
        .value)
    };
    Ok(b + (p.c_plus - p.c_minus) / (y - 1.0) + p.c_plus * corr(p.m_plus)? - p.c_minus * corr(p.g_minus)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub pass: bool,
    pub exponential_moment_finite: bool,
    pub b_drift: Option<f64>,
    pub reasons: Vec<String>,
}

/// ∫e^x ν(dx) < ∞ holds iff M > 1; b is then pinned by the compensator identity.
pub fn validate_martingale(p: &TemperedStableParams) -> MartingaleReport {
    if p.m_plus <= 1.0 {
        let why = if p.m_plus == 1.0 {
            "exponential moment diverges (M = 1 is the excluded boundary)".to_string()
        } else {
            format!("exponential moment diverges (M = {} < 1)", p.m_plus)
        };
        return MartingaleReport { pass: false, exponential_moment_finite: false, b_drift: None, reasons: vec![why] };
    }
    match derive_constants(p) {
        Ok(dc) if dc.b_drift.is_finite() => {
            MartingaleReport { pass: true, exponential_moment_finite: true, b_drift: Some(dc.b_drift), reasons: vec![] }
        }
        Ok(_) => MartingaleReport {
            pass: false,
            exponential_moment_finite: true,
            b_drift: None,
            reasons: vec!["drift b is not finite".into()],
        },
        Err(e) => MartingaleReport {
            pass: false,
            exponential_moment_finite: true,
            b_drift: None,
            reasons: vec![e.to_string()],
        },
    }
}

pub type CoefFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Continuous component dV = μ(Y)dt + σ(Y)(ρdW¹ + √(1−ρ²)dW²), dY = α(Y)dt + γ(Y)dW¹.
#[derive(Clone)]
pub struct StochVolSpec {
    mu_fn: CoefFn,
    sigma_fn: CoefFn,
    alpha_fn: CoefFn,
    gamma_fn: CoefFn,
    sigma_prime_fn: CoefFn,
    rho: f64,
    y0: f64,
    /// σ(y) does not move with y and γ ≡ 0: V is a Brownian motion with drift.
    constant: bool,
}

impl fmt::Debug for StochVolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StochVolSpec")
            .field("y0", &self.y0)
            .field("rho", &self.rho)
            .field("sigma0", &self.sigma0())
            .field("constant", &self.constant)
            .finish()
    }
}

impl StochVolSpec {
    pub fn new(
        mu_fn: CoefFn,
        sigma_fn: CoefFn,
        alpha_fn: CoefFn,
        gamma_fn: CoefFn,
        sigma_prime_fn: CoefFn,
        rho: f64,
        y0: f64,
    ) -> Result<Self> {
        let spec = Self { mu_fn, sigma_fn, alpha_fn, gamma_fn, sigma_prime_fn, rho, y0, constant: false };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::Domain(format!("rho = {} must lie in (-1,1)", self.rho)));
        }
        let s0 = (self.sigma_fn)(self.y0);
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::Domain(format!("spot volatility sigma(y0) = {s0} must be positive")));
        }
        let h = 1e-5 * self.y0.abs().max(1e-3);
        let fd = ((self.sigma_fn)(self.y0 + h) - (self.sigma_fn)(self.y0 - h)) / (2.0 * h);
        let sp = (self.sigma_prime_fn)(self.y0);
        if (fd - sp).abs() > 1e-6 * fd.abs().max(sp.abs()).max(1e-12) {
            return Err(Error::Domain(format!(
                "sigma_prime(y0) = {sp} disagrees with the finite difference {fd}"
            )));
        }
        Ok(())
    }

    /// Constant volatility σ with the martingale drift −σ²/2.
    pub fn constant(sigma: f64) -> Result<Self> {
        Self::constant_with_drift(sigma, -0.5 * sigma * sigma)
    }

    pub fn constant_with_drift(sigma: f64, mu: f64) -> Result<Self> {
        let spec = Self {
            mu_fn: Arc::new(move |_| mu),
            sigma_fn: Arc::new(move |_| sigma),
            alpha_fn: Arc::new(|_| 0.0),
            gamma_fn: Arc::new(|_| 0.0),
            sigma_prime_fn: Arc::new(|_| 0.0),
            rho: 0.0,
            y0: 0.0,
            constant: true,
        };
        spec.check()?;
        Ok(spec)
    }

    /// Heston variance driver with full truncation built into the coefficients.
    pub fn from_heston(h: &HestonSpec) -> Result<Self> {
        let HestonSpec { v0, kappa, theta, xi_volvol, rho } = *h;
        let spec = Self {
            mu_fn: Arc::new(|y: f64| -0.5 * y.max(0.0)),
            sigma_fn: Arc::new(|y: f64| y.max(0.0).sqrt()),
            alpha_fn: Arc::new(move |y: f64| kappa * (theta - y.max(0.0))),
            gamma_fn: Arc::new(move |y: f64| xi_volvol * y.max(0.0).sqrt()),
            sigma_prime_fn: Arc::new(|y: f64| 0.5 / y.sqrt()),
            rho,
            y0: v0,
            constant: false,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn mu(&self, y: f64) -> f64 {
        (self.mu_fn)(y)
    }
    pub fn sigma(&self, y: f64) -> f64 {
        (self.sigma_fn)(y)
    }
    pub fn alpha(&self, y: f64) -> f64 {
        (self.alpha_fn)(y)
    }
    pub fn gamma(&self, y: f64) -> f64 {
        (self.gamma_fn)(y)
    }
    pub fn sigma_prime(&self, y: f64) -> f64 {
        (self.sigma_prime_fn)(y)
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn y0(&self) -> f64 {
        self.y0
    }
    pub fn sigma0(&self) -> f64 {
        self.sigma(self.y0)
    }
    pub fn mu0(&self) -> f64 {
        self.mu(self.y0)
    }
    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// σ′(y₀)γ(y₀), the vol-of-vol loading that enters the skew.
    pub fn sigma_prime_gamma(&self) -> f64 {
        self.sigma_prime(self.y0) * self.gamma(self.y0)
    }
}

/// Heston variance process dv = κ(θ − v)dt + ξ√v dW¹.
///
/// ξ may be negative: (ρ, ξ) and (−ρ, −ξ) give the same joint law of (V, v),
/// so the sign only fixes which driver carries the leverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonSpec {
    pub v0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub xi_volvol: f64,
    pub rho: f64,
}

impl HestonSpec {
    pub fn new(v0: f64, kappa: f64, theta: f64, xi_volvol: f64, rho: f64) -> Result<Self> {
        if !(v0 > 0.0 && kappa > 0.0 && theta > 0.0) {
            return Err(Error::Domain("Heston v0, kappa, theta must be positive".into()));
        }
        if !(xi_volvol != 0.0 && xi_volvol.is_finite()) {
            return Err(Error::Domain("Heston vol-of-vol must be nonzero and finite".into()));
        }
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::Domain(format!("rho = {rho} must lie in (-1,1)")));
        }
        Ok(Self { v0, kappa, theta, xi_volvol, rho })
    }
}

/// A fully specified price model.
#[derive(Debug, Clone)]
pub enum Model {
    PureJump(TemperedStableParams),
    Mixed { jumps: TemperedStableParams, sv: StochVolSpec },
}

impl Model {
    pub fn jumps(&self) -> &TemperedStableParams {
        match self {
            Model::PureJump(p) => p,
            Model::Mixed { jumps, .. } => jumps,
        }
    }

    pub fn sv(&self) -> Option<&StochVolSpec> {
        match self {
            Model::PureJump(_) => None,
            Model::Mixed { sv, .. } => Some(sv),
        }
    }
}

/// JSON parameter document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: String,
    #[serde(rename = "C_plus")]
    pub c_plus: f64,
    #[serde(rename = "C_minus")]
    pub c_minus: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Drift of the Brownian part; defaults to −σ²/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heston: Option<HestonSpec>,
}

impl ModelConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn params(&self) -> Result<TemperedStableParams> {
        TemperedStableParams::new(self.c_plus, self.c_minus, self.g, self.m, self.y)
    }

    pub fn to_model(&self) -> Result<Model> {
        let jumps = self.params()?;
        match self.model.as_str() {
            "ts" => Ok(Model::PureJump(jumps)),
            "ts+bm" => {
                let sigma = self
                    .sigma
                    .ok_or_else(|| Error::Domain("model ts+bm needs \"sigma\"".into()))?;
                let sv = match self.mu {
                    Some(mu) => StochVolSpec::constant_with_drift(sigma, mu)?,
                    None => StochVolSpec::constant(sigma)?,
                };
                Ok(Model::Mixed { jumps, sv })
            }
            "ts+heston" => {
                let h = self
                    .heston
                    .ok_or_else(|| Error::Domain("model ts+heston needs a \"heston\" block".into()))?;
                let h = HestonSpec::new(h.v0, h.kappa, h.theta, h.xi_volvol, h.rho)?;
                Ok(Model::Mixed { jumps, sv: StochVolSpec::from_heston(&h)? })
            }
            other => Err(Error::Domain(format!("unknown model kind \"{other}\""))),
        }
    }
}
