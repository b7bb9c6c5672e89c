//! Monte Carlo under the stable measure: exact one-sided stable marginals,
//! reweighted by exp(−MZ⁽ᵖ⁾ + GZ⁽ⁿ⁾ − ηt).

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackscholes::{self, OptionKind};
use crate::error::{Error, Result};
use crate::models::{derive_constants, Model, StochVolSpec};
use crate::special::{gamma_neg, norm_cdf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: u64,
    pub seed: u64,
    /// Paths per chunk; chunk i always draws from stream i of the seed.
    pub chunk_size: u64,
    /// Euler steps for a stochastic-volatility component.
    pub n_steps: usize,
    /// Integrate a constant-volatility Brownian part in closed form given the
    /// jump path instead of sampling it (unbiased, lower variance).
    #[serde(default = "yes")]
    pub conditional_gaussian: bool,
}

fn yes() -> bool {
    true
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_paths: 1_000_000, seed: 7, chunk_size: 1 << 15, n_steps: 200, conditional_gaussian: true }
    }
}

impl McConfig {
    pub fn new(n_paths: u64, seed: u64) -> Self {
        Self { n_paths, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1000 {
            return Err(Error::Domain(format!("n_paths = {} is below 1000", self.n_paths)));
        }
        if self.chunk_size == 0 {
            return Err(Error::Domain("chunk_size must be positive".into()));
        }
        if self.n_steps < 50 {
            return Err(Error::Domain(format!("n_steps = {} is below 50", self.n_steps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: u64,
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Running first and second moments of a vector of per-path values.
#[derive(Debug, Clone)]
pub struct Moments {
    n: u64,
    sum: Vec<Kahan>,
    sumsq: Vec<Kahan>,
    pairs: Vec<(usize, usize)>,
    cross: Vec<Kahan>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Self::with_pairs(dim, Vec::new())
    }

    pub fn with_pairs(dim: usize, pairs: Vec<(usize, usize)>) -> Self {
        let np = pairs.len();
        Self { n: 0, sum: vec![Kahan::default(); dim], sumsq: vec![Kahan::default(); dim], pairs, cross: vec![Kahan::default(); np] }
    }

    #[inline]
    pub fn push(&mut self, x: &[f64]) {
        self.n += 1;
        for (i, &v) in x.iter().enumerate() {
            self.sum[i].add(v);
            self.sumsq[i].add(v * v);
        }
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            self.cross[k].add(x[i] * x[j]);
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            a.add(b.sum);
            a.add(-b.c);
        }
        for (a, b) in self.sumsq.iter_mut().zip(&other.sumsq) {
            a.add(b.sum);
            a.add(-b.c);
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            a.add(b.sum);
            a.add(-b.c);
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.sum[i].value() / self.n as f64
    }

    /// Sample variance (n − 1 denominator).
    pub fn variance(&self, i: usize) -> f64 {
        let n = self.n as f64;
        let m = self.mean(i);
        ((self.sumsq[i].value() - n * m * m) / (n - 1.0)).max(0.0)
    }

    /// Sample covariance of a registered pair.
    pub fn covariance(&self, pair: usize) -> f64 {
        let (i, j) = self.pairs[pair];
        let n = self.n as f64;
        (self.cross[pair].value() - n * self.mean(i) * self.mean(j)) / (n - 1.0)
    }

    pub fn estimate(&self, i: usize) -> McEstimate {
        McEstimate { value: self.mean(i), std_error: (self.variance(i) / self.n as f64).sqrt(), n_paths: self.n }
    }
}

/// Runs `body` over deterministic chunks in parallel and merges them in chunk order.
pub fn run_chunks<F>(cfg: &McConfig, dim: usize, body: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng, u64, &mut Moments) + Sync,
{
    run_chunks_with(cfg, || Moments::new(dim), body)
}

pub fn run_chunks_with<I, F>(cfg: &McConfig, init: I, body: F) -> Moments
where
    I: Fn() -> Moments + Sync,
    F: Fn(&mut ChaCha8Rng, u64, &mut Moments) + Sync,
{
    let cs = cfg.chunk_size.max(1);
    let n_chunks = cfg.n_paths.div_ceil(cs);
    let parts: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c);
            let n = cs.min(cfg.n_paths - c * cs);
            let mut acc = init();
            body(&mut rng, n, &mut acc);
            acc
        })
        .collect();
    let mut total = init();
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Strictly Y-stable variate with Lévy density c_side|x|^{−Y−1} on the side
/// given by `sign` (+1 spectrally positive, −1 negative), at horizon t.
/// Chambers–Mallows–Stuck with skewness ±1 and scale (t c |cos(πY/2)| Γ(−Y))^{1/Y}.
pub fn sample_one_sided_stable<R: Rng + ?Sized>(y: f64, t: f64, c_side: f64, sign: f64, rng: &mut R) -> f64 {
    let u: f64 = (rng.random::<f64>() - 0.5) * PI;
    let w: f64 = rng.sample(Exp1);
    let th = FRAC_PI_2 * y;
    let b = (sign * th.tan()).atan() / y;
    let s = (1.0 / th.cos().abs()).powf(1.0 / y);
    let yb = y * (u + b);
    let x = s * yb.sin() / u.cos().powf(1.0 / y) * ((u - yb).cos() / w).powf((1.0 - y) / y);
    let scale = (t * c_side * th.cos().abs() * gamma_neg(y)).powf(1.0 / y);
    x * scale
}

enum Continuous {
    None,
    Brownian { drift: f64, vol: f64 },
    Sv { sv: StochVolSpec, steps: usize },
}

/// Draws (log-weight, log-return) pairs for one model and horizon.
pub struct PathSampler {
    y: f64,
    t: f64,
    c_plus: f64,
    c_minus: f64,
    m: f64,
    g: f64,
    drift: f64,
    eta_t: f64,
    cont: Continuous,
}

impl PathSampler {
    pub fn new(model: &Model, t: f64, n_steps: usize) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("maturity t = {t} must be positive")));
        }
        let p = model.jumps();
        let dc = derive_constants(p)?;
        let cont = match model.sv() {
            None => Continuous::None,
            Some(sv) if sv.is_constant() => Continuous::Brownian { drift: sv.mu0() * t, vol: sv.sigma0() * t.sqrt() },
            Some(sv) => Continuous::Sv { sv: sv.clone(), steps: n_steps },
        };
        Ok(Self {
            y: p.y(),
            t,
            c_plus: p.c_plus(),
            c_minus: p.c_minus(),
            m: p.m(),
            g: p.g(),
            drift: dc.gamma_tilde * t,
            eta_t: dc.eta * t,
            cont,
        })
    }

    /// (ln dP/dP̃, X_t + V_t) for one path.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let d = self.draw(rng, false);
        (d.lw, d.l)
    }

    /// One path; with `conditional` and a constant-volatility Brownian part,
    /// the Gaussian increment is left unsampled and returned as (mean, sd).
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, conditional: bool) -> Draw {
        if conditional {
            if let Continuous::Brownian { drift, vol } = self.cont {
                let (lw, x) = self.jumps(rng);
                return Draw { lw, l: x, gauss: Some((drift, vol)) };
            }
        }
        let (lw, x) = self.jumps(rng);
        let v = self.continuous(rng);
        Draw { lw, l: x + v, gauss: None }
    }

    #[inline]
    fn jumps<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let zp = if self.c_plus > 0.0 { sample_one_sided_stable(self.y, self.t, self.c_plus, 1.0, rng) } else { 0.0 };
        let zn = if self.c_minus > 0.0 { sample_one_sided_stable(self.y, self.t, self.c_minus, -1.0, rng) } else { 0.0 };
        let lw = -self.m * zp + self.g * zn - self.eta_t;
        (lw, zp + zn + self.drift)
    }

    #[inline]
    fn continuous<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.cont {
            Continuous::None => 0.0,
            Continuous::Brownian { drift, vol } => {
                let z: f64 = rng.sample(StandardNormal);
                drift + vol * z
            }
            Continuous::Sv { sv, steps } => {
                let dt = self.t / *steps as f64;
                let sdt = dt.sqrt();
                let rho = sv.rho();
                let rbar = (1.0 - rho * rho).sqrt();
                let mut yv = sv.y0();
                let mut v = 0.0;
                for _ in 0..*steps {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    let dw1 = sdt * z1;
                    let dw2 = sdt * z2;
                    v += sv.mu(yv) * dt + sv.sigma(yv) * (rho * dw1 + rbar * dw2);
                    yv += sv.alpha(yv) * dt + sv.gamma(yv) * dw1;
                }
                v
            }
        }
    }
}

/// Output of [`PathSampler::draw`]: log-weight, log-return (jump part only when
/// `gauss` is set) and the unsampled N(mean, sd²) increment.
#[derive(Debug, Clone, Copy)]
pub struct Draw {
    pub lw: f64,
    pub l: f64,
    pub gauss: Option<(f64, f64)>,
}

impl Draw {
    /// Weighted 1{L ≥ κ}.
    #[inline]
    pub fn digital(&self, k: f64) -> f64 {
        match self.gauss {
            None => {
                if self.l >= k {
                    self.lw.exp()
                } else {
                    0.0
                }
            }
            Some((mu, sd)) => self.lw.exp() * norm_cdf((self.l + mu - k) / sd),
        }
    }

    /// Weighted OTM payoff: (e^L − e^κ)⁺ for κ ≥ 0, (e^κ − e^L)⁺ for κ < 0.
    #[inline]
    pub fn otm(&self, k: f64) -> f64 {
        match self.gauss {
            None => otm_payoff(self.lw, self.l, k),
            Some((mu, sd)) => {
                let d2 = (self.l + mu - k) / sd;
                let d1 = d2 + sd;
                let fwd = self.lw + self.l + mu + 0.5 * sd * sd;
                if k >= 0.0 {
                    fwd.exp() * norm_cdf(d1) - (self.lw + k).exp() * norm_cdf(d2)
                } else {
                    (self.lw + k).exp() * norm_cdf(-d2) - fwd.exp() * norm_cdf(-d1)
                }
            }
        }
    }
}

/// P(S_t ≥ S₀) = Ẽ(e^{−MZ⁽ᵖ⁾+GZ⁽ⁿ⁾−ηt} 1{Z⁽ᵖ⁾+Z⁽ⁿ⁾+γ̃t+V_t ≥ 0}).
pub fn digital_price_mc(model: &Model, t: f64, cfg: &McConfig) -> Result<McEstimate> {
    digital_prices_mc(model, t, &[0.0], cfg).map(|v| v[0])
}

/// P(S_t ≥ S₀e^κ) for several κ from the same paths.
pub fn digital_prices_mc(model: &Model, t: f64, kappas: &[f64], cfg: &McConfig) -> Result<Vec<McEstimate>> {
    cfg.validate()?;
    let ps = PathSampler::new(model, t, cfg.n_steps)?;
    let d = kappas.len();
    let m = run_chunks(cfg, d, |rng, n, acc| {
        let mut row = vec![0.0; d];
        for _ in 0..n {
            let dr = ps.draw(rng, cfg.conditional_gaussian);
            for (r, &k) in row.iter_mut().zip(kappas) {
                *r = dr.digital(k);
            }
            acc.push(&row);
        }
    });
    Ok((0..d).map(|i| m.estimate(i)).collect())
}

/// Out-of-the-money option prices (spot 1): calls for κ ≥ 0, puts for κ < 0.
pub fn otm_prices_mc(model: &Model, t: f64, kappas: &[f64], cfg: &McConfig) -> Result<Vec<McEstimate>> {
    cfg.validate()?;
    let ps = PathSampler::new(model, t, cfg.n_steps)?;
    let d = kappas.len();
    let m = run_chunks(cfg, d, |rng, n, acc| {
        let mut row = vec![0.0; d];
        for _ in 0..n {
            let dr = ps.draw(rng, cfg.conditional_gaussian);
            for (r, &k) in row.iter_mut().zip(kappas) {
                *r = dr.otm(k);
            }
            acc.push(&row);
        }
    });
    Ok((0..d).map(|i| m.estimate(i)).collect())
}

/// Weighted OTM payoff evaluated in log space so e^{lw} and e^{l} never meet separately.
#[inline]
fn otm_payoff(lw: f64, l: f64, k: f64) -> f64 {
    if k >= 0.0 {
        if l > k {
            (lw + l).exp() - (lw + k).exp()
        } else {
            0.0
        }
    } else if l < k {
        (lw + k).exp() - (lw + l).exp()
    } else {
        0.0
    }
}

pub fn otm_kind(kappa: f64) -> OptionKind {
    if kappa >= 0.0 {
        OptionKind::Call
    } else {
        OptionKind::Put
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmilePoint {
    pub kappa: f64,
    pub iv: f64,
    /// Delta-method standard error of the implied volatility.
    pub stderr: f64,
    pub price: f64,
    pub price_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Smile {
    pub t: f64,
    pub points: Vec<SmilePoint>,
    /// Strikes whose price could not be inverted, with the reason.
    pub dropped: Vec<(f64, String)>,
}

pub fn smile_mc(model: &Model, t: f64, kappa_grid: &[f64], cfg: &McConfig) -> Result<Smile> {
    if let Some(k) = kappa_grid.iter().find(|k| k.abs() > 0.2) {
        return Err(Error::Domain(format!("kappa {k} outside the supported range [-0.2, 0.2]")));
    }
    let est = otm_prices_mc(model, t, kappa_grid, cfg)?;
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for (&k, e) in kappa_grid.iter().zip(&est) {
        let strike = k.exp();
        match blackscholes::implied_vol(e.value, 1.0, strike, t, otm_kind(k)) {
            Ok(iv) => {
                let vega = blackscholes::vega(1.0, strike, t, iv);
                points.push(SmilePoint { kappa: k, iv, stderr: e.std_error / vega, price: e.value, price_stderr: e.std_error });
            }
            Err(err) => dropped.push((k, err.to_string())),
        }
    }
    Ok(Smile { t, points, dropped })
}

/// Central difference (σ̂(dk) − σ̂(−dk))/(2dk) with both strikes priced on the same paths.
pub fn skew_fd_mc(model: &Model, t: f64, cfg: &McConfig, dk: f64) -> Result<McEstimate> {
    if !(0.001..=0.05).contains(&dk) {
        return Err(Error::Domain(format!("dk = {dk} outside [0.001, 0.05]")));
    }
    cfg.validate()?;
    let ps = PathSampler::new(model, t, cfg.n_steps)?;
    let m = run_chunks_with(
        cfg,
        || Moments::with_pairs(2, vec![(0, 1)]),
        |rng, n, acc| {
            for _ in 0..n {
                let dr = ps.draw(rng, cfg.conditional_gaussian);
                acc.push(&[dr.otm(dk), dr.otm(-dk)]);
            }
        },
    );
    let (pc, pp) = (m.mean(0), m.mean(1));
    let kc = dk.exp();
    let kp = (-dk).exp();
    let ivc = blackscholes::implied_vol(pc, 1.0, kc, t, OptionKind::Call)?;
    let ivp = blackscholes::implied_vol(pp, 1.0, kp, t, OptionKind::Put)?;
    let vc = blackscholes::vega(1.0, kc, t, ivc);
    let vp = blackscholes::vega(1.0, kp, t, ivp);
    let var = m.variance(0) / (vc * vc) + m.variance(1) / (vp * vp) - 2.0 * m.covariance(0) / (vc * vp);
    let n = m.count();
    Ok(McEstimate {
        value: (ivc - ivp) / (2.0 * dk),
        std_error: (var.max(0.0) / n as f64).sqrt() / (2.0 * dk),
        n_paths: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TemperedStableParams;

    #[test]
    fn deterministic_across_chunk_merges() {
        let p = TemperedStableParams::new(0.0088, 0.0044, 0.41, 1.93, 1.5).unwrap();
        let m = Model::PureJump(p);
        let cfg = McConfig { n_paths: 20_000, chunk_size: 1000, ..McConfig::default() };
        let a = digital_price_mc(&m, 0.1, &cfg).unwrap();
        let b = digital_price_mc(&m, 0.1, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn conditional_gaussian_agrees_with_sampling() {
        let p = TemperedStableParams::new(0.004, 0.0013, 0.41, 1.93, 1.5).unwrap();
        let m = Model::Mixed { jumps: p, sv: StochVolSpec::constant(0.1).unwrap() };
        let ks = [-0.03, 0.0, 0.03];
        let on = McConfig { n_paths: 200_000, ..McConfig::default() };
        let off = McConfig { conditional_gaussian: false, ..on };
        for (a, b) in otm_prices_mc(&m, 0.1, &ks, &on).unwrap().iter().zip(otm_prices_mc(&m, 0.1, &ks, &off).unwrap()) {
            assert!((a.value - b.value).abs() < 4.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt());
            assert!(a.std_error < b.std_error);
        }
    }

    #[test]
    fn kahan_beats_naive() {
        let mut k = Kahan::default();
        k.add(1.0);
        for _ in 0..1000 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-13)).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(McConfig { n_paths: 10, ..McConfig::default() }.validate().is_err());
        assert!(McConfig { n_steps: 10, ..McConfig::default() }.validate().is_err());
    }
}
