//! Test-side oracles, written independently of the library internals.
#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

/// Finite sum Σ c_i t^{x_i} with real exponents.
#[derive(Debug, Clone, Default)]
pub struct GSeries(pub Vec<(f64, f64)>);

impl GSeries {
    pub fn term(x: f64, c: f64) -> Self {
        GSeries(vec![(x, c)])
    }
    pub fn add(&self, o: &GSeries) -> GSeries {
        let mut v = self.0.clone();
        v.extend_from_slice(&o.0);
        GSeries(v).collapse()
    }
    pub fn scale(&self, s: f64) -> GSeries {
        GSeries(self.0.iter().map(|&(x, c)| (x, c * s)).collect())
    }
    pub fn mul(&self, o: &GSeries) -> GSeries {
        let mut v = Vec::new();
        for &(x, c) in &self.0 {
            for &(y, d) in &o.0 {
                v.push((x + y, c * d));
            }
        }
        GSeries(v).collapse()
    }
    pub fn shift(&self, dx: f64) -> GSeries {
        GSeries(self.0.iter().map(|&(x, c)| (x + dx, c)).collect())
    }
    pub fn truncate(&self, max: f64) -> GSeries {
        GSeries(self.0.iter().copied().filter(|&(x, _)| x <= max + 1e-12).collect())
    }
    /// Merges coincident exponents and sorts.
    pub fn collapse(self) -> GSeries {
        let mut v = self.0;
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (x, c) in v {
            match out.last_mut() {
                Some(l) if (l.0 - x).abs() < 1e-12 => l.1 += c,
                _ => out.push((x, c)),
            }
        }
        GSeries(out)
    }
    /// Max coefficient mismatch relative to the larger coefficient scale.
    pub fn rel_diff(&self, o: &GSeries) -> f64 {
        let d = self.add(&o.scale(-1.0));
        let scale = self.0.iter().chain(&o.0).map(|x| x.1.abs()).fold(0.0, f64::max);
        d.0.iter().map(|x| x.1.abs()).fold(0.0, f64::max) / scale
    }
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn bs_call(k: f64, t: f64, s: f64) -> f64 {
    let v = s * t.sqrt();
    let d1 = (-k.ln() + 0.5 * v * v) / v;
    norm_cdf(d1) - k * norm_cdf(d1 - v)
}

/// Implied vol of a call (spot 1) by plain bisection.
pub fn iv_call(price: f64, k: f64, t: f64) -> f64 {
    let (mut lo, mut hi) = (1e-6, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bs_call(k, t, mid) > price {
            hi = mid
        } else {
            lo = mid
        }
    }
    0.5 * (lo + hi)
}

/// Log-price characteristic function E e^{iuX_t} for tempered stable jumps plus
/// Brownian motion, with the drift fixed by the martingale condition.
#[derive(Clone, Copy, Debug)]
pub struct Cgmy {
    pub cp: f64,
    pub cm: f64,
    pub g: f64,
    pub m: f64,
    pub y: f64,
    pub sigma: f64,
}

impl Cgmy {
    fn gneg(&self) -> f64 {
        libm::tgamma(-self.y)
    }
    fn jump_exp(&self, u: Complex64) -> Complex64 {
        let (y, g, m) = (self.y, self.g, self.m);
        let i = Complex64::i();
        self.gneg()
            * (self.cp * ((m - i * u).powf(y) - m.powf(y)) + self.cm * ((g + i * u).powf(y) - g.powf(y)))
    }
    pub fn char_exp(&self, u: Complex64, t: f64) -> Complex64 {
        let i = Complex64::i();
        let omega = -self.jump_exp(-i).re - 0.5 * self.sigma * self.sigma;
        (t * (i * u * omega + self.jump_exp(u) - 0.5 * self.sigma * self.sigma * u * u)).exp()
    }
    fn upper(&self, t: f64) -> f64 {
        // |φ(u)| ≤ exp(−t·rate·u^Y) with rate from the real part of the exponent
        let rate = -(self.gneg() * (self.cp + self.cm) * (PI * self.y / 2.0).cos()) + 0.0;
        let r1 = (45.0 / (t * rate.max(1e-300))).powf(1.0 / self.y);
        let r2 = if self.sigma > 0.0 { (90.0 / (t * self.sigma * self.sigma)).sqrt() } else { f64::INFINITY };
        r1.min(r2)
    }
    /// P(X_t ≥ κ) by Gil-Pelaez inversion.
    pub fn digital(&self, t: f64, kappa: f64) -> f64 {
        let umax = self.upper(t);
        let f = |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let z = Complex64::new(0.0, -u * kappa).exp() * self.char_exp(Complex64::new(u, 0.0), t);
            z.im / u
        };
        0.5 + simpson(f, 0.0, umax, 400_000) / PI
    }
    /// Call price (spot 1, strike e^κ) by the Lewis formula.
    pub fn call(&self, t: f64, kappa: f64) -> f64 {
        let umax = self.upper(t);
        let f = |u: f64| {
            let z = Complex64::new(0.0, -u * kappa).exp() * self.char_exp(Complex64::new(u, -0.5), t);
            z.re / (u * u + 0.25)
        };
        1.0 - (kappa / 2.0).exp() / PI * simpson(f, 0.0, umax, 400_000)
    }
    pub fn iv(&self, t: f64, kappa: f64) -> f64 {
        iv_call(self.call(t, kappa), kappa.exp(), t)
    }
}

pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Log-spaced grid of n points on [a, b].
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (a.ln() + (b / a).ln() * i as f64 / (n - 1) as f64).exp()).collect()
}
