//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-13, rel: 1e-11, max_intervals: 4000 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

struct Seg {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

/// Integrate `f` over the finite interval [a, b].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut segs = vec![Seg { a, b, val: v, err: e }];
    let mut total = v;
    let mut err = e;
    loop {
        if !total.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if segs.len() >= tol.max_intervals {
            return Err(Error::Quadrature(format!(
                "error estimate {err:.3e} after {} subintervals on [{a}, {b}]",
                segs.len()
            )));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("non-empty");
        let s = segs.swap_remove(idx);
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            // interval cannot be split further in floating point
            return Err(Error::Quadrature(format!("interval [{}, {}] exhausted", s.a, s.b)));
        }
        let (v1, e1) = gk15(&mut f, s.a, m);
        let (v2, e2) = gk15(&mut f, m, s.b);
        total += v1 + v2 - s.val;
        err += e1 + e2 - s.err;
        segs.push(Seg { a: s.a, b: m, val: v1, err: e1 });
        segs.push(Seg { a: m, b: s.b, val: v2, err: e2 });
        // refresh sums occasionally to stop drift from repeated updates
        if segs.len() % 64 == 0 {
            total = segs.iter().map(|s| s.val).sum();
            err = segs.iter().map(|s| s.err).sum();
        }
    }
    let value: f64 = segs.iter().map(|s| s.val).sum();
    Ok(QuadResult { value, error: err, intervals: segs.len() })
}

/// Integrate over [a, ∞) using x = a + s/(1−s).
pub fn integrate_to_inf<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: Tolerance) -> Result<QuadResult> {
    integrate(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let om = 1.0 - s;
            let v = f(a + s / om);
            if v == 0.0 {
                0.0
            } else {
                v / (om * om)
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Integrate a function with an integrable power singularity at `a`:
/// ∫_a^b f(x) dx where f(x) ~ (x−a)^{−p}, p < 1. Uses x = a + u^{1/(1−p)}.
pub fn integrate_singular_left<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    p: f64,
    tol: Tolerance,
) -> Result<QuadResult> {
    let q = 1.0 / (1.0 - p);
    let umax = (b - a).powf(1.0 - p);
    integrate(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let x = a + u.powf(q);
            f(x) * q * u.powf(q - 1.0)
        },
        0.0,
        umax,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((r.value - 0.0).abs() < 1e-13);
    }

    #[test]
    fn exp_tail() {
        let r = integrate_to_inf(|x| (-x).exp(), 0.0, Tolerance::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn power_singularity() {
        // ∫_0^1 x^{-0.7} dx = 1/0.3
        let r = integrate_singular_left(|x| x.powf(-0.7), 0.0, 1.0, 0.7, Tolerance::default()).unwrap();
        assert!((r.value - 1.0 / 0.3).abs() < 1e-10);
    }

    #[test]
    fn oscillatory() {
        let r = integrate(|x| (50.0 * x).sin(), 0.0, std::f64::consts::PI, Tolerance::default()).unwrap();
        assert!(r.value.abs() < 1e-11);
    }
}
