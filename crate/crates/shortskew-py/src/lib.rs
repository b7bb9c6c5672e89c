use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use shortskew::blackscholes::{self, OptionKind};
use shortskew::montecarlo::{self, McConfig};
use shortskew::otm::{self, OtmInputs};
use shortskew::pipeline::{self, DeltaMode, ModelKind};
use shortskew::{presets, Error, Quantity};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py_json<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

fn kind(s: &str) -> PyResult<OptionKind> {
    match s {
        "call" | "c" | "C" => Ok(OptionKind::Call),
        "put" | "p" | "P" => Ok(OptionKind::Put),
        other => Err(PyValueError::new_err(format!("option kind must be call or put, got \"{other}\""))),
    }
}

fn quantity(s: &str) -> PyResult<Quantity> {
    s.parse().map_err(err)
}

/// Model configuration: tempered stable jumps, optionally with a Brownian or Heston part.
#[pyclass(module = "shortskew_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Model {
    cfg: shortskew::ModelConfig,
    inner: shortskew::Model,
}

impl Model {
    fn from_cfg(cfg: shortskew::ModelConfig) -> PyResult<Self> {
        let inner = cfg.to_model().map_err(err)?;
        Ok(Self { cfg, inner })
    }
}

#[pymethods]
impl Model {
    /// Pure-jump model, or jumps plus Brownian motion when `sigma` is given.
    #[new]
    #[pyo3(signature = (c_plus, c_minus, g, m, y, sigma=None))]
    fn new(c_plus: f64, c_minus: f64, g: f64, m: f64, y: f64, sigma: Option<f64>) -> PyResult<Self> {
        let cfg = shortskew::ModelConfig {
            model: if sigma.is_some() { "ts+bm" } else { "ts" }.into(),
            c_plus,
            c_minus,
            g,
            m,
            y,
            sigma,
            mu: None,
            heston: None,
        };
        Self::from_cfg(cfg)
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let cfg = presets::by_name(name).ok_or_else(|| {
            PyValueError::new_err(format!("unknown preset \"{name}\" (available: {})", presets::NAMES.join(", ")))
        })?;
        Self::from_cfg(cfg)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Self::from_cfg(shortskew::ModelConfig::from_json(s).map_err(err)?)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.cfg).expect("config serializes")
    }

    #[getter]
    fn kind(&self) -> String {
        self.cfg.model.clone()
    }

    /// γ̃, η and the drift b.
    fn derived<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let d = shortskew::derive_constants(self.inner.jumps()).map_err(err)?;
        to_py_json(py, &d)
    }

    /// Probability that the limiting stable law is positive.
    fn positivity(&self) -> f64 {
        shortskew::StableLaw::from_params(self.inner.jumps()).positivity()
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.to_json())
    }
}

/// Short-maturity expansion of digital price, ATM vol, skew and delta.
#[pyclass(module = "shortskew_py", frozen)]
struct Expansion {
    inner: shortskew::Expansion,
}

#[pymethods]
impl Expansion {
    #[new]
    fn new(model: &Model) -> PyResult<Self> {
        Ok(Self { inner: shortskew::Expansion::build(&model.inner).map_err(err)? })
    }

    /// Value at maturity `t`; `order` 1 or 2 truncates, None uses every term.
    #[pyo3(signature = (quantity, t, order=None))]
    fn eval(&self, quantity: &str, t: f64, order: Option<u8>) -> PyResult<f64> {
        let q = self::quantity(quantity)?;
        if !(t > 0.0) {
            return Err(PyValueError::new_err("t must be positive"));
        }
        match order {
            None => Ok(self.inner.eval(q, t)),
            Some(1) => Ok(self.inner.eval_order(q, t, false)),
            Some(2) => Ok(self.inner.eval_order(q, t, true)),
            Some(o) => Err(PyValueError::new_err(format!("order must be 1 or 2, got {o}"))),
        }
    }

    /// (coefficient, exponent, label) triples sorted by exponent.
    fn terms(&self, quantity: &str) -> PyResult<Vec<(f64, f64, String)>> {
        let s = self.inner.series(self::quantity(quantity)?);
        Ok(s.terms().iter().map(|t| (t.coef, t.exponent, t.label.clone())).collect())
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py_json(py, &self.inner.to_bundle())
    }
}

fn mc_cfg(paths: u64, seed: u64, steps: usize) -> McConfig {
    McConfig { n_steps: steps, ..McConfig::new(paths, seed) }
}

/// Monte Carlo ATM digital price P(S_t ≥ S₀): (estimate, standard error).
#[pyfunction]
#[pyo3(signature = (model, t, paths=200_000, seed=7, steps=200))]
fn mc_digital(py: Python<'_>, model: &Model, t: f64, paths: u64, seed: u64, steps: usize) -> PyResult<(f64, f64)> {
    let m = model.inner.clone();
    let e = py
        .detach(|| montecarlo::digital_price_mc(&m, t, &mc_cfg(paths, seed, steps)))
        .map_err(err)?;
    Ok((e.value, e.std_error))
}

/// Monte Carlo ATM skew by central differences of half-width `dk`.
#[pyfunction]
#[pyo3(signature = (model, t, paths=200_000, seed=7, steps=200, dk=0.01))]
fn mc_skew(py: Python<'_>, model: &Model, t: f64, paths: u64, seed: u64, steps: usize, dk: f64) -> PyResult<(f64, f64)> {
    let m = model.inner.clone();
    let e = py
        .detach(|| montecarlo::skew_fd_mc(&m, t, &mc_cfg(paths, seed, steps), dk))
        .map_err(err)?;
    Ok((e.value, e.std_error))
}

/// Monte Carlo implied vol smile: (kappa, iv, stderr) per surviving point.
#[pyfunction]
#[pyo3(signature = (model, t, kappas, paths=200_000, seed=7, steps=200))]
fn mc_smile(
    py: Python<'_>,
    model: &Model,
    t: f64,
    kappas: Vec<f64>,
    paths: u64,
    seed: u64,
    steps: usize,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let m = model.inner.clone();
    let s = py
        .detach(|| montecarlo::smile_mc(&m, t, &kappas, &mc_cfg(paths, seed, steps)))
        .map_err(err)?;
    Ok(s.points.iter().map(|p| (p.kappa, p.iv, p.stderr)).collect())
}

#[pyfunction]
#[pyo3(signature = (price, spot, strike, t, kind="call"))]
fn implied_vol(price: f64, spot: f64, strike: f64, t: f64, kind: &str) -> PyResult<f64> {
    blackscholes::implied_vol(price, spot, strike, t, self::kind(kind)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (spot, strike, t, vol, kind="call"))]
fn bs_price(spot: f64, strike: f64, t: f64, vol: f64, kind: &str) -> PyResult<f64> {
    Ok(blackscholes::bs_price(spot, strike, t, vol, self::kind(kind)?))
}

fn otm_inputs(model: &Model, kappa: f64) -> PyResult<OtmInputs> {
    let p = *model.inner.jumps();
    OtmInputs::new(kappa, p, model.cfg.sigma.unwrap_or(0.0)).map_err(err)
}

/// OTM implied vol approximation at log-moneyness `kappa`.
#[pyfunction]
fn otm_vol(model: &Model, kappa: f64, t: f64) -> PyResult<f64> {
    otm::otm_vol(&otm_inputs(model, kappa)?, t).map_err(err)
}

/// OTM skew approximation at log-moneyness `kappa`.
#[pyfunction]
fn otm_skew(model: &Model, kappa: f64, t: f64) -> PyResult<f64> {
    otm::otm_skew(&otm_inputs(model, kappa)?, t).map_err(err)
}

/// Skew series, power-law fit and Y estimate for every quote date in a chain CSV.
#[pyfunction]
#[pyo3(signature = (path, t_max=0.25, model="mixed", delta_mode="interpolate"))]
fn calibrate<'py>(
    py: Python<'py>,
    path: PathBuf,
    t_max: f64,
    model: &str,
    delta_mode: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let kind: ModelKind = model.parse().map_err(err)?;
    let mode: DeltaMode = delta_mode.parse().map_err(err)?;
    let snaps = pipeline::load_chains(&path).map_err(err)?;
    let series = pipeline::skew_series(&snaps, mode);
    let mut out = Vec::new();
    for s in &series {
        let fit = pipeline::fit_powerlaw(&s.points, t_max).map_err(err)?;
        let cal = pipeline::calibrate_y(&fit, kind);
        out.push(serde_json::json!({ "series": s, "fit": fit, "calibration": cal }));
    }
    to_py_json(py, &out)
}

#[pymodule]
fn shortskew_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Expansion>()?;
    m.add_function(wrap_pyfunction!(mc_digital, m)?)?;
    m.add_function(wrap_pyfunction!(mc_skew, m)?)?;
    m.add_function(wrap_pyfunction!(mc_smile, m)?)?;
    m.add_function(wrap_pyfunction!(implied_vol, m)?)?;
    m.add_function(wrap_pyfunction!(bs_price, m)?)?;
    m.add_function(wrap_pyfunction!(otm_vol, m)?)?;
    m.add_function(wrap_pyfunction!(otm_skew, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add("PRESETS", presets::NAMES.to_vec())?;
    Ok(())
}
