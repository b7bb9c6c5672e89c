//! Option-chain ingestion, 25-delta skew series, power-law regression and Y calibration.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::blackscholes::{self, bs_delta, OptionKind};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::montecarlo::{otm_prices_mc, McConfig};

pub const CHAIN_HEADER: [&str; 7] = ["quote_date", "expiry_date", "type", "strike", "bid", "ask", "vix"];
/// Expiries closer than this (in years) are dropped.
pub const MIN_MATURITY: f64 = 5.0 / 365.0;
pub const TARGET_DELTA: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainQuote {
    pub strike: f64,
    pub kind: OptionKind,
    pub bid: f64,
    pub ask: f64,
}

impl ChainQuote {
    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpiryChain {
    pub expiry: NaiveDate,
    pub quotes: Vec<ChainQuote>,
}

impl ExpiryChain {
    fn has_both_kinds(&self) -> bool {
        self.quotes.iter().any(|q| q.kind == OptionKind::Call) && self.quotes.iter().any(|q| q.kind == OptionKind::Put)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSnapshot {
    pub quote_date: NaiveDate,
    /// Volatility index level in vol points.
    pub vix: f64,
    /// Sorted by expiry.
    pub expiries: Vec<ExpiryChain>,
    /// Rows rejected during loading.
    pub rejected: Vec<RowDiagnostic>,
}

/// ACT/365 year fraction.
pub fn year_fraction(from: NaiveDate, to: NaiveDate) -> f64 {
    (to - from).num_days() as f64 / 365.0
}

impl ChainSnapshot {
    pub fn maturity(&self, e: &ExpiryChain) -> f64 {
        year_fraction(self.quote_date, e.expiry)
    }

    /// Expiries with t ≥ 5/365 and at least one call and one put.
    pub fn usable_expiries(&self) -> impl Iterator<Item = &ExpiryChain> {
        self.expiries
            .iter()
            .filter(move |e| self.maturity(e) >= MIN_MATURITY - 1e-12 && e.has_both_kinds())
    }
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(i).unwrap_or("").trim();
    raw.parse::<T>().map_err(|e| Error::Parse {
        line: line as usize,
        msg: format!("column {}: {e} ({raw:?})", CHAIN_HEADER[i]),
    })
}

/// Parses chain CSV text; one snapshot per quote date, ordered by date.
pub fn parse_chains<R: Read>(reader: R) -> Result<Vec<ChainSnapshot>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Schema(e.to_string()))?.clone();
    let mut idx = [0usize; 7];
    for (slot, name) in idx.iter_mut().zip(CHAIN_HEADER) {
        *slot = header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("missing column \"{name}\"")))?;
    }
    let mut dates: BTreeMap<NaiveDate, (f64, BTreeMap<NaiveDate, Vec<ChainQuote>>, Vec<RowDiagnostic>)> =
        BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let ordered = csv::StringRecord::from(idx.iter().map(|&i| rec.get(i).unwrap_or("")).collect::<Vec<_>>());
        let quote_date: NaiveDate = parse_field(&ordered, 0, line)?;
        let expiry: NaiveDate = parse_field(&ordered, 1, line)?;
        let kind = match ordered.get(2).unwrap_or("").trim() {
            "C" | "c" => OptionKind::Call,
            "P" | "p" => OptionKind::Put,
            other => {
                return Err(Error::Parse { line: line as usize, msg: format!("type must be C or P, got {other:?}") })
            }
        };
        let strike: f64 = parse_field(&ordered, 3, line)?;
        let bid: f64 = parse_field(&ordered, 4, line)?;
        let ask: f64 = parse_field(&ordered, 5, line)?;
        let vix: f64 = parse_field(&ordered, 6, line)?;
        if !(vix > 0.0) {
            return Err(Error::Parse { line: line as usize, msg: format!("vix must be positive, got {vix}") });
        }
        let entry = dates.entry(quote_date).or_insert_with(|| (vix, BTreeMap::new(), Vec::new()));
        if (entry.0 - vix).abs() > 1e-9 * vix {
            return Err(Error::Parse {
                line: line as usize,
                msg: format!("vix {vix} differs from {} earlier on {quote_date}", entry.0),
            });
        }
        let reject = if !(strike > 0.0) {
            Some(format!("strike {strike} not positive"))
        } else if !(bid >= 0.0) {
            Some(format!("negative bid {bid}"))
        } else if !(ask >= bid) {
            Some(format!("crossed market: ask {ask} < bid {bid}"))
        } else if expiry <= quote_date {
            Some(format!("expiry {expiry} not after quote date {quote_date}"))
        } else {
            None
        };
        match reject {
            Some(reason) => entry.2.push(RowDiagnostic { line, reason }),
            None => entry.1.entry(expiry).or_default().push(ChainQuote { strike, kind, bid, ask }),
        }
    }
    Ok(dates
        .into_iter()
        .map(|(quote_date, (vix, exps, rejected))| ChainSnapshot {
            quote_date,
            vix,
            expiries: exps
                .into_iter()
                .map(|(expiry, mut quotes)| {
                    quotes.sort_by(|a, b| a.strike.total_cmp(&b.strike));
                    ExpiryChain { expiry, quotes }
                })
                .collect(),
            rejected,
        })
        .collect())
}

pub fn load_chains(path: &Path) -> Result<Vec<ChainSnapshot>> {
    parse_chains(std::fs::File::open(path)?)
}

/// Loads a file holding a single quote date.
pub fn load_chain(path: &Path) -> Result<ChainSnapshot> {
    let mut v = load_chains(path)?;
    match v.len() {
        1 => Ok(v.remove(0)),
        0 => Err(Error::InsufficientQuotes(format!("{} has no valid rows", path.display()))),
        n => Err(Error::Schema(format!("{} holds {n} quote dates; use load_chains", path.display()))),
    }
}

pub fn write_chains_csv(path: &Path, snaps: &[ChainSnapshot]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(CHAIN_HEADER).map_err(io)?;
    for s in snaps {
        for e in &s.expiries {
            for q in &e.quotes {
                let kind = if q.kind == OptionKind::Call { "C" } else { "P" };
                w.write_record([
                    s.quote_date.to_string(),
                    e.expiry.to_string(),
                    kind.to_string(),
                    format!("{}", q.strike),
                    format!("{:.12e}", q.bid),
                    format!("{:.12e}", q.ask),
                    format!("{}", s.vix),
                ])
                .map_err(io)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// F = K* + C(K*) − P(K*) at the strike minimizing |C − P|; ties go to the lower strike.
pub fn implied_forward(expiry: &ExpiryChain) -> Result<f64> {
    let mut calls: BTreeMap<u64, f64> = BTreeMap::new();
    let mut puts: BTreeMap<u64, f64> = BTreeMap::new();
    for q in &expiry.quotes {
        let key = q.strike.to_bits();
        match q.kind {
            OptionKind::Call => calls.insert(key, q.mid()),
            OptionKind::Put => puts.insert(key, q.mid()),
        };
    }
    let mut best: Option<(f64, f64, f64)> = None;
    let mut strikes: Vec<f64> = calls.keys().filter(|k| puts.contains_key(k)).map(|&k| f64::from_bits(k)).collect();
    strikes.sort_by(f64::total_cmp);
    for k in strikes {
        let d = calls[&k.to_bits()] - puts[&k.to_bits()];
        if best.map_or(true, |(_, bd, _)| d.abs() < bd) {
            best = Some((k, d.abs(), d));
        }
    }
    best.map(|(k, _, d)| k + d)
        .ok_or_else(|| Error::InsufficientQuotes(format!("no strike with both a call and a put for {}", expiry.expiry)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmileQuote {
    pub strike: f64,
    pub kappa: f64,
    pub iv: f64,
    pub kind: OptionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtmSmile {
    pub t: f64,
    pub forward: f64,
    /// Sorted by strike.
    pub points: Vec<SmileQuote>,
    pub warnings: Vec<String>,
}

/// Puts for K ≤ F, calls for K > F, inverted with spot = F.
pub fn build_otm_smile(expiry: &ExpiryChain, t: f64, forward: f64) -> Result<OtmSmile> {
    if !(t > 0.0 && forward > 0.0) {
        return Err(Error::Domain(format!("need t > 0 and forward > 0, got t={t}, F={forward}")));
    }
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for q in &expiry.quotes {
        let want = if q.strike > forward { OptionKind::Call } else { OptionKind::Put };
        if q.kind != want {
            continue;
        }
        match blackscholes::implied_vol(q.mid(), forward, q.strike, t, q.kind) {
            Ok(iv) => points.push(SmileQuote { strike: q.strike, kappa: (q.strike / forward).ln(), iv, kind: q.kind }),
            Err(e) => warnings.push(format!("strike {}: {e}", q.strike)),
        }
    }
    points.sort_by(|a, b| a.strike.total_cmp(&b.strike));
    Ok(OtmSmile { t, forward, points, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMode {
    /// Piecewise-linear in strike between the quotes bracketing |Δ| = 0.25.
    #[default]
    Interpolate,
    /// Quote whose |Δ| is closest to 0.25.
    Nearest,
}

impl std::str::FromStr for DeltaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interpolate" => Ok(Self::Interpolate),
            "nearest" => Ok(Self::Nearest),
            _ => Err(Error::Domain(format!("unknown delta mode \"{s}\""))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Skew25 {
    pub kappa_call: f64,
    pub iv_call: f64,
    pub kappa_put: f64,
    pub iv_put: f64,
    pub skew: f64,
}

fn locate_wing(smile: &OtmSmile, kind: OptionKind, mode: DeltaMode) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = smile
        .points
        .iter()
        .filter(|p| p.kind == kind)
        .map(|p| (p.kappa, bs_delta(smile.forward, p.strike, smile.t, p.iv, kind).abs()))
        .collect();
    let side = if kind == OptionKind::Call { "call" } else { "put" };
    if pts.is_empty() {
        return Err(Error::MissingWing(format!("no {side} quotes at t = {}", smile.t)));
    }
    let ivs: Vec<f64> = smile.points.iter().filter(|p| p.kind == kind).map(|p| p.iv).collect();
    match mode {
        DeltaMode::Nearest => {
            let (i, _) = pts
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 .1 - TARGET_DELTA).abs().total_cmp(&(b.1 .1 - TARGET_DELTA).abs()))
                .unwrap();
            Ok((pts[i].0, ivs[i]))
        }
        DeltaMode::Interpolate => {
            for i in 0..pts.len().saturating_sub(1) {
                let (d0, d1) = (pts[i].1 - TARGET_DELTA, pts[i + 1].1 - TARGET_DELTA);
                if d0 == 0.0 {
                    return Ok((pts[i].0, ivs[i]));
                }
                if d0 * d1 < 0.0 || d1 == 0.0 {
                    let w = d0 / (d0 - d1);
                    let s0 = smile.forward * pts[i].0.exp();
                    let s1 = smile.forward * pts[i + 1].0.exp();
                    let k = s0 + w * (s1 - s0);
                    return Ok(((k / smile.forward).ln(), ivs[i] + w * (ivs[i + 1] - ivs[i])));
                }
            }
            Err(Error::MissingWing(format!("cannot bracket the 25-delta {side} at t = {}", smile.t)))
        }
    }
}

/// (σ̂(κ_call25) − σ̂(κ_put25)) / (κ_call25 − κ_put25).
pub fn skew_25d(smile: &OtmSmile, mode: DeltaMode) -> Result<Skew25> {
    let (kc, ivc) = locate_wing(smile, OptionKind::Call, mode)?;
    let (kp, ivp) = locate_wing(smile, OptionKind::Put, mode)?;
    if kc <= kp {
        return Err(Error::MissingWing(format!("25-delta strikes coincide at t = {}", smile.t)));
    }
    Ok(Skew25 { kappa_call: kc, iv_call: ivc, kappa_put: kp, iv_put: ivp, skew: (ivc - ivp) / (kc - kp) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewPoint {
    pub t: f64,
    pub skew_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewSeries {
    pub quote_date: NaiveDate,
    pub points: Vec<SkewPoint>,
    pub delta_mode: DeltaMode,
    /// Expiries that could not be processed.
    pub skipped: Vec<(NaiveDate, String)>,
}

pub fn skew_series_one(snap: &ChainSnapshot, mode: DeltaMode) -> SkewSeries {
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for e in snap.usable_expiries() {
        let t = snap.maturity(e);
        let r = implied_forward(e)
            .and_then(|f| build_otm_smile(e, t, f))
            .and_then(|s| skew_25d(&s, mode));
        match r {
            Ok(s) => points.push(SkewPoint { t, skew_norm: s.skew / (snap.vix / 100.0) }),
            Err(err) => skipped.push((e.expiry, err.to_string())),
        }
    }
    SkewSeries { quote_date: snap.quote_date, points, delta_mode: mode, skipped }
}

pub fn skew_series(snaps: &[ChainSnapshot], mode: DeltaMode) -> Vec<SkewSeries> {
    use rayon::prelude::*;
    snaps.par_iter().map(|s| skew_series_one(s, mode)).collect()
}

pub fn write_skew_csv(path: &Path, series: &[SkewSeries]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(["quote_date", "t", "skew_norm"]).map_err(io)?;
    for s in series {
        for p in &s.points {
            w.write_record([s.quote_date.to_string(), format!("{:.17e}", p.t), format!("{:.17e}", p.skew_norm)])
                .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
    /// Upper maturity bound used.
    pub window: f64,
    /// Common sign of the skews (±1).
    pub sign: f64,
}

/// OLS of ln|skew| on ln t over points with t ≤ t_max.
pub fn fit_powerlaw(points: &[SkewPoint], t_max: f64) -> Result<PowerLawFit> {
    let used: Vec<&SkewPoint> = points.iter().filter(|p| p.t <= t_max && p.t > 0.0).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientQuotes(format!("{} points with t <= {t_max}; need 3", used.len())));
    }
    if used.iter().any(|p| !p.skew_norm.is_finite() || p.skew_norm == 0.0) {
        return Err(Error::Domain("zero or non-finite skew in the regression window".into()));
    }
    let sign = used[0].skew_norm.signum();
    if used.iter().any(|p| p.skew_norm.signum() != sign) {
        return Err(Error::SignMix);
    }
    let n = used.len() as f64;
    let xs: Vec<f64> = used.iter().map(|p| p.t.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.skew_norm.abs().ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientQuotes("all maturities coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy <= f64::EPSILON * n * (my * my).max(1.0) { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    Ok(PowerLawFit { slope, intercept, r2, n: used.len(), window: t_max, sign })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Purejump,
    Mixed,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "purejump" | "ts" => Ok(Self::Purejump),
            "mixed" | "ts+bm" | "ts+heston" => Ok(Self::Mixed),
            _ => Err(Error::Domain(format!("unknown model kind \"{s}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    #[serde(rename = "Y_purejump")]
    pub y_purejump: f64,
    #[serde(rename = "Y_mixed")]
    pub y_mixed: f64,
    pub model: ModelKind,
    /// Y under the requested reading.
    #[serde(rename = "Y")]
    pub y: f64,
    pub slope: f64,
    pub admissible: bool,
    pub regime_flags: Vec<String>,
}

/// Pure-jump reading b = 1/2 − 1/Y, mixed reading b = (1 − Y)/2.
pub fn calibrate_y(fit: &PowerLawFit, model: ModelKind) -> Calibration {
    let b = fit.slope;
    let y_purejump = 2.0 / (1.0 - 2.0 * b);
    let y_mixed = 1.0 - 2.0 * b;
    let mut flags = Vec::new();
    if b >= 0.0 {
        flags.push("non_exploding_skew: consistent with continuous or finite-activity jump models".to_string());
    }
    if b <= -0.5 {
        flags.push("skew_order_t^-1/2_or_steeper: consistent with finite-variation jumps".to_string());
    }
    let admissible = b > -0.5 && b < 0.0;
    Calibration {
        y_purejump,
        y_mixed,
        model,
        y: if model == ModelKind::Purejump { y_purejump } else { y_mixed },
        slope: b,
        admissible,
        regime_flags: flags,
    }
}

/// Chain specification for [`synth_chain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub quote_date: NaiveDate,
    pub expiry_days: Vec<i64>,
    pub forward: f64,
    pub strikes: Vec<f64>,
    pub vix: f64,
}

impl SynthSpec {
    /// Strikes lo, lo+step, …, hi.
    pub fn strike_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }
}

fn synth_from_prices(spec: &SynthSpec, mut price: impl FnMut(f64, &[f64]) -> Result<Vec<f64>>) -> Result<ChainSnapshot> {
    let mut expiries = Vec::new();
    for &d in &spec.expiry_days {
        if d <= 0 {
            return Err(Error::Domain(format!("expiry days must be positive, got {d}")));
        }
        let expiry = spec.quote_date + chrono::Duration::days(d);
        let t = year_fraction(spec.quote_date, expiry);
        let kappas: Vec<f64> = spec.strikes.iter().map(|k| (k / spec.forward).ln()).collect();
        let otm = price(t, &kappas)?;
        let mut quotes = Vec::with_capacity(2 * spec.strikes.len());
        for (&k, &p) in spec.strikes.iter().zip(&otm) {
            let v = p * spec.forward;
            // κ ≥ 0 priced as a call, the other side by parity
            let (c, pu) = if k >= spec.forward { (v, v - (spec.forward - k)) } else { (v + (spec.forward - k), v) };
            quotes.push(ChainQuote { strike: k, kind: OptionKind::Call, bid: c.max(0.0), ask: c.max(0.0) });
            quotes.push(ChainQuote { strike: k, kind: OptionKind::Put, bid: pu.max(0.0), ask: pu.max(0.0) });
        }
        expiries.push(ExpiryChain { expiry, quotes });
    }
    Ok(ChainSnapshot { quote_date: spec.quote_date, vix: spec.vix, expiries, rejected: Vec::new() })
}

/// Chain with mid prices from Monte Carlo under `model`; bid = ask.
pub fn synth_chain(model: &Model, spec: &SynthSpec, cfg: &McConfig) -> Result<ChainSnapshot> {
    synth_from_prices(spec, |t, kappas| Ok(otm_prices_mc(model, t, kappas, cfg)?.iter().map(|e| e.value).collect()))
}

/// Flat Black–Scholes chain.
pub fn synth_bs_chain(sigma: f64, spec: &SynthSpec) -> Result<ChainSnapshot> {
    synth_from_prices(spec, |t, kappas| {
        Ok(kappas
            .iter()
            .map(|&k| blackscholes::bs_price(1.0, k.exp(), t, sigma, crate::montecarlo::otm_kind(k)))
            .collect())
    })
}
