//! Acceptance gate: one PASS/FAIL line per criterion.

mod common;

use std::time::Instant;

use chrono::NaiveDate;
use common::{log_grid, GSeries};
use shortskew::blackscholes::{self, bs_digital, bs_price, implied_vol, skew_from_digital, OptionKind};
use shortskew::montecarlo::{digital_price_mc, skew_fd_mc, McConfig};
use shortskew::pipeline::{self, calibrate_y, fit_powerlaw, DeltaMode, ModelKind, PowerLawFit, SkewPoint, SynthSpec};
use shortskew::stable::StableLaw;
use shortskew::{build_mixed, build_purejump, presets, Expansion, Model, Quantity, StochVolSpec, TemperedStableParams};

const T: f64 = 0.1;
const DK: f64 = 0.01;

fn cfg() -> McConfig {
    McConfig::new(1_000_000, 7)
}

struct Line {
    id: u32,
    pass: bool,
    detail: String,
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let m = presets::kawai().to_model().unwrap();
    let exp = Expansion::build(&m).unwrap().eval(Quantity::Skew, T);
    let mc = skew_fd_mc(&m, T, &cfg(), DK).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ok_exp = (exp + 0.456).abs() <= 0.002;
    let ok_mc = (-0.58..=-0.46).contains(&mc.value);
    let ok_time = secs < 120.0;
    Line {
        id: 1,
        pass: ok_exp && ok_mc && ok_time,
        detail: format!(
            "Kawai skew t=0.1: expansion {exp:.4} (target -0.456±0.002: {}), MC {:.4}±{:.4} (range [-0.58,-0.46]: {}), {secs:.1}s",
            ok_exp, mc.value, mc.std_error, ok_mc
        ),
    }
}

fn criterion_2() -> Line {
    let start = Instant::now();
    let m = presets::andersen().to_model().unwrap();
    let exp = Expansion::build(&m).unwrap().eval(Quantity::Skew, T);
    let mc = skew_fd_mc(&m, T, &cfg(), DK).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ok_exp = (exp - 0.320).abs() <= 0.002;
    let ok_mc = (mc.value - 0.328).abs() <= 0.02 + 3.0 * mc.std_error;
    Line {
        id: 2,
        pass: ok_exp && ok_mc && secs < 120.0,
        detail: format!(
            "Andersen skew t=0.1: expansion {exp:.4} (target 0.320±0.002: {ok_exp}), MC {:.4}±{:.4} (0.328 within 0.02+3se: {ok_mc}), {secs:.1}s",
            mc.value, mc.std_error
        ),
    }
}

fn criterion_3() -> Line {
    let bm = presets::mixed_bm().to_model().unwrap();
    let exp_bm = Expansion::build(&bm).unwrap().eval(Quantity::Skew, T);
    let mc_bm = skew_fd_mc(&bm, T, &cfg(), DK).unwrap();
    let ok_bm_exp = (exp_bm - 0.112).abs() <= 0.002;
    let ok_bm_mc = (mc_bm.value - 0.116).abs() <= 3.0 * mc_bm.std_error;

    let he = presets::mixed_heston().to_model().unwrap();
    let exp_he = Expansion::build(&he).unwrap().eval(Quantity::Skew, T);
    let mc_he = skew_fd_mc(&he, T, &cfg(), DK).unwrap();
    let ok_he_exp = (exp_he - 0.305).abs() <= 0.005;
    let ok_he_mc = (exp_he - mc_he.value).abs() <= 3.0 * mc_he.std_error + 0.02;
    Line {
        id: 3,
        pass: ok_bm_exp && ok_bm_mc && ok_he_exp && ok_he_mc,
        detail: format!(
            "mixed skew t=0.1: Brownian expansion {exp_bm:.4} (0.112±0.002: {ok_bm_exp}), MC {:.4}±{:.4} (0.116 within 3se: {ok_bm_mc}); \
             Heston expansion {exp_he:.4} (0.305±0.005: {ok_he_exp}), MC {:.4}±{:.4} (within 3se+0.02: {ok_he_mc})",
            mc_bm.value, mc_bm.std_error, mc_he.value, mc_he.std_error
        ),
    }
}

fn criterion_4() -> Line {
    let grid = log_grid(1.0 / 252.0, 1.0 / 12.0, 8);
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, cfgm) in [("kawai", presets::kawai()), ("andersen", presets::andersen())] {
        let m = cfgm.to_model().unwrap();
        let ex = Expansion::build(&m).unwrap();
        let (mut worst2, mut order_viol) = (0.0f64, 0usize);
        for &t in &grid {
            let mc = digital_price_mc(&m, t, &cfg()).unwrap();
            let e1 = (ex.eval_order(Quantity::Digital, t, false) - mc.value).abs() / mc.value;
            let e2 = (ex.eval_order(Quantity::Digital, t, true) - mc.value).abs() / mc.value;
            worst2 = worst2.max(e2);
            if !(e1 > e2) {
                order_viol += 1;
            }
        }
        let ok = worst2 <= 0.05 && order_viol == 0;
        pass &= ok;
        notes.push(format!("{name}: max 2nd-order rel err {worst2:.4}, first<=second at {order_viol}/8 t"));
    }
    Line { id: 4, pass, detail: format!("digital convergence on [1/252,1/12]: {}", notes.join("; ")) }
}

fn criterion_5() -> Line {
    let pts: Vec<SkewPoint> = log_grid(1.0 / 52.0, 0.25, 6)
        .into_iter()
        .map(|t| SkewPoint { t, skew_norm: 0.8 * t.powf(-0.36) })
        .collect();
    let fit = fit_powerlaw(&pts, 0.25).unwrap();
    let ok_fit = (fit.slope + 0.36).abs() < 1e-10 && (fit.r2 - 1.0).abs() < 1e-12;
    let mk = |b: f64| PowerLawFit { slope: b, intercept: 0.0, r2: 1.0, n: 6, window: 0.25, sign: 1.0 };
    let c36 = calibrate_y(&mk(-0.36), ModelKind::Mixed);
    let c31 = calibrate_y(&mk(-0.31), ModelKind::Purejump);
    let r2 = |x: f64| (x * 100.0).round() / 100.0;
    let ok36 = r2(c36.y_mixed) == 1.72 && c36.y_mixed > 1.6 && c36.y_mixed < 1.8;
    let ok31 = r2(c31.y_purejump) == 1.23 && r2(c31.y_mixed) == 1.62;
    Line {
        id: 5,
        pass: ok_fit && ok36 && ok31,
        detail: format!(
            "power law: b={:.12} R2={:.12}; b=-0.36 -> Y_mixed {:.4}; b=-0.31 -> Y_purejump {:.4}, Y_mixed {:.4}",
            fit.slope, fit.r2, c36.y_mixed, c31.y_purejump, c31.y_mixed
        ),
    }
}

fn iv_roundtrip() -> (f64, usize, usize) {
    let (mut worst, mut n, mut skipped) = (0.0f64, 0, 0);
    for &s in &log_grid(0.01, 2.0, 25) {
        for i in 0..=20 {
            let k = 0.8 + 0.02 * i as f64;
            for &t in &log_grid(1.0 / 365.0, 1.0, 12) {
                let kind = if k >= 1.0 { OptionKind::Call } else { OptionKind::Put };
                let p = bs_price(1.0, k, t, s, kind);
                match implied_vol(p, 1.0, k, t, kind) {
                    Ok(v) => {
                        worst = worst.max((v - s).abs());
                        n += 1;
                    }
                    Err(shortskew::Error::OutOfBounds { .. }) => skipped += 1,
                    Err(e) => panic!("σ={s} K={k} t={t}: {e}"),
                }
            }
        }
    }
    (worst, n, skipped)
}

/// Digital and ATM vol expansions pushed through the truncated ATM-slope relation.
fn slope_relation_skew(digital: &GSeries, vol_sqrt_t: &GSeries, cutoff: f64) -> GSeries {
    let s2p = (2.0 * std::f64::consts::PI).sqrt();
    let inner = GSeries::term(0.0, 0.5).add(&digital.scale(-1.0)).add(&vol_sqrt_t.scale(-1.0 / (2.0 * s2p)));
    let corr = GSeries::term(0.0, 1.0).add(&vol_sqrt_t.mul(vol_sqrt_t).scale(1.0 / 8.0));
    inner.mul(&corr).truncate(cutoff).scale(s2p).shift(-0.5)
}

fn to_g(s: &shortskew::Series) -> GSeries {
    GSeries(s.terms().iter().map(|t| (t.exponent, t.coef)).collect()).collapse()
}

fn closed_form_vs_slope_relation() -> f64 {
    let mut worst = 0.0f64;
    for cfgm in [presets::kawai(), presets::andersen()] {
        let b = build_purejump(&cfgm.params().unwrap()).unwrap();
        let vol = to_g(&b.series(Quantity::AtmVol)).shift(0.5);
        let rel = slope_relation_skew(&to_g(&b.series(Quantity::Digital)), &vol, 1.0);
        worst = worst.max(rel.rel_diff(&to_g(&b.series(Quantity::Skew))));
    }
    for cfgm in [presets::mixed_bm(), presets::mixed_heston()] {
        let Model::Mixed { jumps, sv } = cfgm.to_model().unwrap() else { unreachable!() };
        let b = build_mixed(&jumps, &sv).unwrap();
        let vol = to_g(&b.series(Quantity::AtmVol)).shift(0.5);
        let rel = slope_relation_skew(&to_g(&b.series(Quantity::Digital)), &vol, (3.0 - jumps.y()) / 2.0);
        worst = worst.max(rel.rel_diff(&to_g(&b.series(Quantity::Skew))));
    }
    worst
}

/// (normalization error, worst relative derivative mismatch).
fn density_checks() -> (f64, f64) {
    let law = StableLaw::new(1.5, 0.0088, 0.0044).unwrap();
    let s = law.scale_c.powf(1.0 / law.y_index);
    let y = law.y_index;
    // ∫ over [−200s, 200s] plus the power tails beyond
    let n = 8000;
    let h = 400.0 * s / n as f64;
    let mut mass = 0.0;
    for i in 0..=n {
        let x = -200.0 * s + i as f64 * h;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        mass += w * law.density(x).unwrap();
    }
    mass *= h / 3.0;
    let edge = 200.0 * s;
    mass += (law.tail_constant(edge) + law.tail_constant(-edge)) * edge.powf(-y) / y;
    let norm_err = (mass - 1.0).abs();

    let hh = 0.02 * s;
    let f = |x: f64| law.density(x).unwrap();
    let fd = [
        f(0.0),
        (f(hh) - f(-hh)) / (2.0 * hh),
        (f(hh) - 2.0 * f(0.0) + f(-hh)) / (hh * hh),
        (f(2.0 * hh) - 2.0 * f(hh) + 2.0 * f(-hh) - f(-2.0 * hh)) / (2.0 * hh.powi(3)),
    ];
    // second-order Richardson on the stencils
    let h2 = hh / 2.0;
    let fd2 = [
        f(0.0),
        (f(h2) - f(-h2)) / (2.0 * h2),
        (f(h2) - 2.0 * f(0.0) + f(-h2)) / (h2 * h2),
        (f(2.0 * h2) - 2.0 * f(h2) + 2.0 * f(-h2) - f(-2.0 * h2)) / (2.0 * h2.powi(3)),
    ];
    let mut worst = 0.0f64;
    for k in 1..=4 {
        let rich = (4.0 * fd2[k - 1] - fd[k - 1]) / 3.0;
        let exact = law.density_deriv_at_zero(k).unwrap();
        worst = worst.max(((rich - exact) / exact).abs());
    }
    (norm_err, worst)
}

fn closure(cfg: &McConfig) -> (f64, PowerLawFit) {
    let m = presets::closure().to_model().unwrap();
    let spec = SynthSpec {
        quote_date: NaiveDate::from_ymd_opt(2024, 1, 2).unwrap(),
        expiry_days: vec![7, 14, 30, 61, 91],
        forward: 100.0,
        strikes: SynthSpec::strike_grid(80.0, 120.0, 0.25),
        vix: 10.0,
    };
    let snap = pipeline::synth_chain(&m, &spec, cfg).unwrap();
    let series = pipeline::skew_series_one(&snap, DeltaMode::Interpolate);
    assert!(series.skipped.is_empty(), "{:?}", series.skipped);
    let fit = fit_powerlaw(&series.points, 0.25).unwrap();
    (calibrate_y(&fit, ModelKind::Mixed).y_mixed, fit)
}

fn criterion_6() -> Line {
    let (iv_err, n_iv, n_skip) = iv_roundtrip();
    let ok_iv = iv_err <= 1e-9;

    let mut flat = 0.0f64;
    for &t in &[0.01, 0.1, 1.0] {
        for &k in &[-0.1, -0.01, 0.0, 0.02, 0.1] {
            let sig = 0.25;
            flat = flat.max(skew_from_digital(k, t, bs_digital(1.0, k.exp(), t, sig), sig).abs());
        }
    }
    let ok_flat = flat <= 1e-12;

    let ok_pos = [1.1, 1.35, 1.5, 1.9].iter().all(|&y| StableLaw::new(y, 0.02, 0.02).unwrap().positivity() == 0.5);

    let p = TemperedStableParams::new(0.003, 0.003, 0.41, 1.93, 1.5).unwrap();
    let bsym = build_mixed(&p, &StochVolSpec::constant(0.1).unwrap()).unwrap();
    let ok_dk = bsym.d_terms.iter().all(|d| d.0 == 0.0);

    let cvl = closed_form_vs_slope_relation();
    let ok_cvl = cvl <= 1e-10;

    let (norm_err, deriv_err) = density_checks();
    let ok_dens = norm_err <= 1e-6 && deriv_err <= 1e-4;

    let (y_hat, fit) = closure(&cfg());
    let ok_closure = (y_hat - 1.5).abs() <= 0.1;
    let (y_plain, _) = closure(&McConfig { conditional_gaussian: false, ..cfg() });

    let _ = blackscholes::VOL_MIN;
    Line {
        id: 6,
        pass: ok_iv && ok_flat && ok_pos && ok_dk && ok_cvl && ok_dens && ok_closure,
        detail: format!(
            "iv roundtrip max err {iv_err:.2e} over {n_iv} pts ({n_skip} at price bounds): {ok_iv}; flat skew {flat:.1e}: {ok_flat}; \
             symmetric positivity: {ok_pos}; symmetric d_k = 0: {ok_dk}; closed form vs slope relation {cvl:.1e}: {ok_cvl}; \
             density norm err {norm_err:.1e}, derivative err {deriv_err:.1e}: {ok_dens}; \
             closure Y {y_hat:.4} (b {:.4}, R2 {:.4}) vs 1.5: {ok_closure} [sampled-Gaussian MC gives {y_plain:.4}]",
            fit.slope, fit.r2
        ),
    }
}

#[test]
fn acceptance() {
    let lines = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5(), criterion_6()];
    println!();
    for l in &lines {
        println!("criterion {} {}: {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    }
    let failed: Vec<u32> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
