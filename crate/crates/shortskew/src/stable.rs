//! Strictly Y-stable law quantities: positivity, E(Z⁺), density and its
//! derivatives at zero, one-sided functionals and generator coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::TemperedStableParams;
use crate::montecarlo::{run_chunks, sample_one_sided_stable, McConfig, McEstimate, Moments};
use crate::quad::{self, Tolerance};
use crate::special::{factorial, gamma, gamma_neg, norm_pdf};

/// Law of Z₁ under the stable measure: Lévy density C(±)|x|^{−Y−1}, zero mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLaw {
    pub y_index: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub a_sum: f64,
    pub b_diff: f64,
    pub beta_skew: f64,
    pub scale_c: f64,
    pub rho_pos: f64,
    pub delta_zol: f64,
    pub c0_zol: f64,
}

/// sin(πx), exactly zero at integers.
fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r.fract() == 0.0 {
        0.0
    } else {
        (r * PI).sin()
    }
}

impl StableLaw {
    pub fn new(y_index: f64, c_plus: f64, c_minus: f64) -> Result<Self> {
        if !(y_index > 1.0 && y_index < 2.0) {
            return Err(Error::Domain(format!("Y = {y_index} must lie strictly inside (1,2)")));
        }
        if c_plus < 0.0 || c_minus < 0.0 || c_plus + c_minus <= 0.0 {
            return Err(Error::Domain("stable intensities must be nonnegative with positive sum".into()));
        }
        let a_sum = c_plus + c_minus;
        let b_diff = c_plus - c_minus;
        let beta_skew = b_diff / a_sum;
        let theta = PI * y_index / 2.0;
        let scale_c = -gamma_neg(y_index) * theta.cos() * a_sum;
        let at = (beta_skew * theta.tan()).atan();
        let delta_zol = 2.0 / PI * at;
        let rho_pos = (delta_zol + y_index) / (2.0 * y_index);
        let c0_zol = at.cos();
        Ok(Self { y_index, c_plus, c_minus, a_sum, b_diff, beta_skew, scale_c, rho_pos, delta_zol, c0_zol })
    }

    pub fn from_params(p: &TemperedStableParams) -> Self {
        Self::new(p.y(), p.c_plus(), p.c_minus()).expect("validated params give a valid stable law")
    }

    fn theta(&self) -> f64 {
        PI * self.y_index / 2.0
    }

    /// κ with E e^{iuZ₁} = exp(−κu^Y) for u > 0.
    pub fn kappa(&self) -> Complex64 {
        let th = self.theta();
        let e = Complex64::from_polar(1.0, th);
        -gamma_neg(self.y_index) * (self.c_plus * e.conj() + self.c_minus * e)
    }

    /// Scale s with Z₁/s having Re κ = 1.
    fn unit(&self) -> f64 {
        self.kappa().re.powf(1.0 / self.y_index)
    }

    /// P(Z₁ ≥ 0).
    pub fn positivity(&self) -> f64 {
        0.5 + (self.beta_skew * self.theta().tan()).atan() / (PI * self.y_index)
    }

    /// E(Z₁⁺).
    pub fn expected_positive_part(&self) -> f64 {
        let y = self.y_index;
        let th = self.theta();
        let bt = self.beta_skew * th.tan();
        self.a_sum.powf(1.0 / y) / PI
            * gamma_neg(y).powf(1.0 / y)
            * th.cos().abs().powf(1.0 / y)
            * (bt.atan() / y).cos()
            * gamma(1.0 - 1.0 / y)
            * (1.0 + bt * bt).powf(1.0 / (2.0 * y))
    }

    /// f_Z^{(k−1)}(0) from the series expansion of the stable density.
    pub fn density_deriv_at_zero(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::Domain("derivative order k must be at least 1".into()));
        }
        let y = self.y_index;
        let kf = k as f64;
        let sgn = if (k - 1) % 2 == 0 { 1.0 } else { -1.0 };
        Ok(sgn * gamma(kf / y + 1.0) / (kf * PI)
            * sin_pi(self.rho_pos * kf)
            * (self.c0_zol / self.scale_c).powf(kf / y))
    }

    /// Density by inversion of the characteristic function,
    /// f(x) = π⁻¹∫₀^∞ Re exp(−iux − κu^Y) du.
    pub fn density(&self, x: f64) -> Result<f64> {
        let s = self.unit();
        let k = self.kappa() / self.kappa().re;
        let xs = x / s;
        let y = self.y_index;
        // e^{−u^Y} < 1e−17 beyond this point
        let umax = 39.2f64.powf(1.0 / y);
        let freq = xs.abs() + k.im.abs() * y * umax.powf(y - 1.0);
        let panels = ((umax * freq / PI).ceil() as usize).clamp(4, 20_000);
        let h = umax / panels as f64;
        let tol = Tolerance { abs: 1e-16, rel: 1e-12, max_intervals: 200 };
        let mut total = 0.0;
        for i in 0..panels {
            let a = i as f64 * h;
            let r = quad::integrate(
                |u| {
                    let ph = Complex64::new(-k.re * u.powf(y), -(xs * u + k.im * u.powf(y)));
                    ph.exp().re
                },
                a,
                a + h,
                tol,
            )?;
            total += r.value;
        }
        Ok((total / PI).max(0.0) / s)
    }

    /// Tail constant C(sign x) with f(x) ~ C|x|^{−Y−1}.
    pub fn tail_constant(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.c_plus
        } else {
            self.c_minus
        }
    }
}

/// Z₁ split into its spectrally positive and negative parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSidedPair {
    pub y_index: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

impl OneSidedPair {
    pub fn from_params(p: &TemperedStableParams) -> Self {
        Self { y_index: p.y(), c_plus: p.c_plus(), c_minus: p.c_minus() }
    }

    pub fn law(&self) -> StableLaw {
        StableLaw::new(self.y_index, self.c_plus, self.c_minus).expect("valid pair")
    }
}

/// E(Z⁽ᵖ⁾1{Z≥0}), E(Z⁽ⁿ⁾1{Z≥0}) and E(Z⁽ᵖ⁾f_{Z⁽ⁿ⁾}(−Z⁽ᵖ⁾)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSidedFunctionals {
    pub e_p_pos: f64,
    pub e_n_pos: f64,
    pub e_p_fn: f64,
}

/// The three functionals in closed form, from the Fourier representation of
/// the one-sided exponents ψ₊(u) = Γ(−Y)C(1)u^Y e^{−iπY/2} (and its mirror).
pub fn one_sided_exact(pair: &OneSidedPair) -> OneSidedFunctionals {
    let law = pair.law();
    let y = pair.y_index;
    let th = PI * y / 2.0;
    let gn = gamma_neg(y);
    let k = law.kappa();
    let em = Complex64::from_polar(1.0, -th);
    let ep = em.conj();
    let g1 = gamma(1.0 - 1.0 / y);
    let kp = k.powf(-(1.0 - 1.0 / y));
    OneSidedFunctionals {
        e_p_pos: -gn * pair.c_plus * g1 / PI * (em * kp).re,
        e_n_pos: -gn * pair.c_minus * g1 / PI * (ep * kp).re,
        e_p_fn: gn * pair.c_plus / PI * (em / k).im,
    }
}

/// Estimates with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSidedEstimates {
    pub e_p_pos: McEstimate,
    pub e_n_pos: McEstimate,
    pub e_p_fn: McEstimate,
}

/// Tabulated density of a spectrally negative law: C(−1)|x|^{−Y−1} left of
/// the grid, zero right of it (the right tail decays faster than exponentially).
struct NegDensityTable {
    lo: f64,
    step: f64,
    vals: Vec<f64>,
    tail_c: f64,
    y: f64,
}

impl NegDensityTable {
    fn new(law: &StableLaw, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let step = (hi - lo) / (n - 1) as f64;
        let vals = (0..n).map(|i| law.density(lo + i as f64 * step)).collect::<Result<Vec<_>>>()?;
        Ok(Self { lo, step, vals, tail_c: law.c_minus, y: law.y_index })
    }

    fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        if pos < 0.0 {
            return self.tail_c * x.abs().powf(-self.y - 1.0);
        }
        if pos >= (self.vals.len() - 1) as f64 {
            return 0.0;
        }
        let i = pos as usize;
        let w = pos - i as f64;
        self.vals[i] * (1.0 - w) + self.vals[i + 1] * w
    }
}

/// Monte Carlo estimates of the one-sided functionals.
pub fn one_sided_functionals(pair: &OneSidedPair, n_samples: u64, seed: u64) -> Result<OneSidedEstimates> {
    if n_samples < 10_000 {
        return Err(Error::Domain("one_sided_functionals needs at least 1e4 samples".into()));
    }
    if pair.c_plus <= 0.0 || pair.c_minus <= 0.0 {
        return Err(Error::Domain("both one-sided intensities must be positive".into()));
    }
    let y = pair.y_index;
    let neg = StableLaw::new(y, 0.0, pair.c_minus)?;
    let s = neg.unit();
    // spectrally negative: heavy left tail, super-exponentially light right tail
    let table = NegDensityTable::new(&neg, -60.0 * s, 8.0 * s, 4097)?;
    let cfg = McConfig { n_paths: n_samples, seed, ..McConfig::default() };
    let (cp, cm) = (pair.c_plus, pair.c_minus);
    let m = run_chunks(&cfg, 3, |rng, n, acc: &mut Moments| {
        for _ in 0..n {
            let zp = sample_one_sided_stable(y, 1.0, cp, 1.0, rng);
            let zn = sample_one_sided_stable(y, 1.0, cm, -1.0, rng);
            let pos = zp + zn >= 0.0;
            acc.push(&[
                if pos { zp } else { 0.0 },
                if pos { zn } else { 0.0 },
                zp * table.eval(-zp),
            ]);
        }
    });
    Ok(OneSidedEstimates { e_p_pos: m.estimate(0), e_n_pos: m.estimate(1), e_p_fn: m.estimate(2) })
}

/// d_k = σ₀^{−kY} L_Z^kΨ(0)/k!, Ψ(z) = ∫₀^z φ.
///
/// d₁ uses its Γ closed form, d₂ the double integral over (0,∞)², and d₃
/// the Fourier-moment form (1/π)Im[(−κ)^k]2^{kY/2−1}Γ(kY/2)/k!.
pub fn generator_psi_coeffs(p: &TemperedStableParams, sigma0: f64, k_max: usize) -> Result<Vec<f64>> {
    if k_max > 3 {
        return Err(Error::UnsupportedOrder(k_max));
    }
    if !(sigma0 > 0.0) {
        return Err(Error::Domain(format!("spot volatility {sigma0} must be positive")));
    }
    let y = p.y();
    let (c1, cm) = (p.c_plus(), p.c_minus());
    let mut out = Vec::with_capacity(k_max);
    if k_max >= 1 {
        out.push(
            -(c1 - cm) * sigma0.powf(-y) * 2f64.powf(-y / 2.0) / (PI.sqrt() * y * (y - 1.0))
                * gamma((3.0 - y) / 2.0),
        );
    }
    if k_max >= 2 {
        let d2 = if c1 == cm {
            0.0
        } else {
            -0.5 * (c1 * c1 - cm * cm) / (sigma0.powf(2.0 * y) * y * y) * d2_double_integral(y)?
        };
        out.push(d2);
    }
    if k_max >= 3 {
        out.push(sigma0.powf(-3.0 * y) * generator_fourier(&StableLaw::from_params(p), 3));
    }
    Ok(out)
}

/// L_Z^kΨ(0)/k! through the Fourier multiplier of L_Z.
pub fn generator_fourier(law: &StableLaw, k: usize) -> f64 {
    let y = law.y_index;
    let kf = k as f64;
    (-law.kappa()).powi(k as i32).im * 2f64.powf(kf * y / 2.0 - 1.0) * gamma(kf * y / 2.0) / (PI * factorial(k))
}

/// ∫∫_{(0,∞)²} ((x+y)φ(x+y) − xφ(x) − yφ(y))(xy)^{−Y} dx dy.
pub fn d2_double_integral(y: f64) -> Result<f64> {
    let tol = Tolerance { abs: 1e-14, rel: 1e-11, max_intervals: 2000 };
    // rewritten with expm1 so the cancellation near the axes is exact
    let integrand = |a: f64, b: f64| -> f64 {
        let v = a * norm_pdf(a) * (-b * (a + b / 2.0)).exp_m1() + b * norm_pdf(b) * (-a * (b + a / 2.0)).exp_m1();
        v * (a * b).powf(-y)
    };
    let mut inner_err: Option<Error> = None;
    let v = half_line(
        &mut |a| match half_line(&mut |b| integrand(a, b), y, tol) {
            Ok(v) => v,
            Err(e) => {
                inner_err.get_or_insert(e);
                0.0
            }
        },
        y,
        tol,
    )?;
    match inner_err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// ∫₀^∞ with x = s^{1/(2−Y)} on (0,1] and x = s^{−1/(Y−1)} on [1,∞).
fn half_line(f: &mut dyn FnMut(f64) -> f64, y: f64, tol: Tolerance) -> Result<f64> {
    let near = 1.0 / (2.0 - y);
    let far = -1.0 / (y - 1.0);
    let a = quad::integrate(
        |s| if s <= 0.0 { 0.0 } else { f(s.powf(near)) * near * s.powf(near - 1.0) },
        0.0,
        1.0,
        tol,
    )?
    .value;
    let b = quad::integrate(
        |s| if s <= 0.0 { 0.0 } else { f(s.powf(far)) * (-far) * s.powf(far - 1.0) },
        0.0,
        1.0,
        tol,
    )?
    .value;
    Ok(a + b)
}
