use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use shortskew::blackscholes::{self, OptionKind};
use shortskew::montecarlo::{self, McConfig};
use shortskew::otm::{otm_skew, otm_vol, OtmInputs};
use shortskew::pipeline::{self, DeltaMode, ModelKind, SynthSpec};
use shortskew::{presets, Error, Expansion, ModelConfig, Quantity};

mod grid;
use grid::{parse_list, Grid};

#[derive(Parser, Debug)]
#[command(name = "shortskew", version, about = "Short-maturity ATM skew expansions, Monte Carlo and calibration")]
struct Cli {
    /// Directory for result files and manifest.json
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ModelArgs {
    /// Parameter JSON file
    #[arg(long, conflicts_with = "preset")]
    params: Option<PathBuf>,
    /// Built-in parameter set
    #[arg(long)]
    preset: Option<String>,
    /// Override the model kind of the parameter file (ts, ts+bm, ts+heston)
    #[arg(long)]
    model: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct McArgs {
    #[arg(long, default_value_t = 1_000_000)]
    paths: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Euler steps for stochastic volatility
    #[arg(long, default_value_t = 200)]
    steps: usize,
    /// Sample the Brownian increment instead of integrating it out
    #[arg(long)]
    plain: bool,
}

impl McArgs {
    fn config(&self) -> McConfig {
        McConfig { n_steps: self.steps, conditional_gaussian: !self.plain, ..McConfig::new(self.paths, self.seed) }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
enum Order {
    First,
    Second,
    Full,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Expansion coefficients as JSON
    Coeffs {
        #[command(flatten)]
        m: ModelArgs,
    },
    /// Evaluate an expansion on a maturity grid
    Eval {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long, default_value = "skew")]
        quantity: String,
        /// Single maturity
        #[arg(long, conflicts_with = "t_grid", allow_hyphen_values = true)]
        t: Option<f64>,
        /// Log-spaced grid a:b:n
        #[arg(long)]
        t_grid: Option<String>,
        #[arg(long, value_enum, default_value_t = Order::Full)]
        order: Order,
    },
    /// Monte Carlo estimates
    Mc {
        #[command(flatten)]
        m: ModelArgs,
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        t: f64,
        /// digital, skew or smile
        #[arg(long, default_value = "skew")]
        what: String,
        /// Linear grid a:b:n of log-moneyness for the smile
        #[arg(long, allow_hyphen_values = true)]
        kappa_grid: Option<String>,
        /// Half-width of the finite-difference skew
        #[arg(long, default_value_t = 0.01)]
        dk: f64,
    },
    /// Expansion (first and second order) against Monte Carlo on a log-spaced grid
    Compare {
        #[command(flatten)]
        m: ModelArgs,
        #[command(flatten)]
        mc: McArgs,
        #[arg(long, default_value = "digital")]
        quantity: String,
        #[arg(long, default_value = "1e-3:0.25:20")]
        t_grid: String,
        #[arg(long, default_value_t = 0.01)]
        dk: f64,
    },
    /// Monte Carlo smile with the expansion's ATM tangent line
    Smile {
        #[command(flatten)]
        m: ModelArgs,
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value = "-0.1:0.1:21", allow_hyphen_values = true)]
        kappa_grid: String,
    },
    /// OTM implied volatility and skew approximations
    Otm {
        #[command(flatten)]
        m: ModelArgs,
        /// Comma separated log-moneyness values
        #[arg(long, allow_hyphen_values = true)]
        kappa: String,
        #[arg(long, default_value = "1e-3:0.3:10")]
        t_grid: String,
    },
    /// Skew series, power-law fit and Y estimate from chain CSVs
    Calibrate {
        /// Chain CSV file or directory of CSV files
        #[arg(long)]
        chains: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        t_max: f64,
        /// purejump or mixed
        #[arg(long, default_value = "mixed")]
        model: String,
        /// interpolate or nearest
        #[arg(long, default_value = "interpolate")]
        delta_mode: String,
    },
    /// Synthetic option chain priced by Monte Carlo (or flat Black-Scholes)
    SynthChain {
        #[command(flatten)]
        m: ModelArgs,
        #[command(flatten)]
        mc: McArgs,
        /// Flat Black-Scholes volatility instead of a model
        #[arg(long)]
        bs_sigma: Option<f64>,
        #[arg(long, default_value = "2024-01-02")]
        date: String,
        /// Comma separated days to expiry
        #[arg(long, default_value = "7,14,30,61,91")]
        expiry_days: String,
        #[arg(long, default_value_t = 100.0)]
        forward: f64,
        /// lo:hi:step
        #[arg(long, default_value = "80:120:0.25")]
        strikes: String,
        #[arg(long, default_value_t = 20.0)]
        vix: f64,
    },
}

/// Usage problems found after parsing.
#[derive(Debug)]
struct Usage(String);

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u.0)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn load_model(m: &ModelArgs) -> CliResult<ModelConfig> {
    let mut cfg = match (&m.params, &m.preset) {
        (Some(p), _) => ModelConfig::load(p)?,
        (None, Some(name)) => presets::by_name(name).ok_or_else(|| {
            Usage(format!("unknown preset \"{name}\" (available: {})", presets::NAMES.join(", ")))
        })?,
        (None, None) => return Err(Usage("one of --params or --preset is required".into()).into()),
    };
    if let Some(kind) = &m.model {
        cfg.model = kind.clone();
    }
    Ok(cfg)
}

fn quantity(s: &str) -> CliResult<Quantity> {
    s.parse().map_err(|_| Usage(format!("unknown quantity \"{s}\" (digital, atm_vol, skew, delta)")).into())
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// Collects result files and writes the manifest.
struct Output {
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl Output {
    fn new(dir: Option<PathBuf>) -> CliResult<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, body: &str) -> CliResult<()> {
        if let Some(d) = &self.dir {
            fs::write(d.join(name), body)?;
            self.files.push(name.to_string());
        }
        Ok(())
    }

    fn path(&mut self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| {
            self.files.push(name.to_string());
            d.join(name)
        })
    }

    fn manifest(&self, subcommand: &str, config: Value, seed: Option<u64>) -> CliResult<()> {
        if let Some(d) = &self.dir {
            let m = json!({
                "subcommand": subcommand,
                "config": config,
                "seed": seed,
                "versions": { "shortskew": env!("CARGO_PKG_VERSION") },
                "argv": std::env::args().skip(1).collect::<Vec<_>>(),
                "outputs": self.files,
            });
            fs::write(d.join("manifest.json"), serde_json::to_string_pretty(&m).expect("json") + "\n")?;
        }
        Ok(())
    }
}

fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",") + "\n";
    for r in rows {
        s += &r.iter().map(|&x| fmt(x)).collect::<Vec<_>>().join(",");
        s.push('\n');
    }
    s
}

fn run(cli: Cli) -> CliResult<()> {
    let mut out = Output::new(cli.out.clone())?;
    match cli.cmd {
        Cmd::Coeffs { m } => {
            let cfg = load_model(&m)?;
            let b = Expansion::build(&cfg.to_model()?)?.to_bundle();
            let text = serde_json::to_string_pretty(&b).expect("json") + "\n";
            print!("{text}");
            out.write("coeffs.json", &text)?;
            out.manifest("coeffs", json!({ "model": cfg }), None)?;
        }
        Cmd::Eval { m, quantity: q, t, t_grid, order } => {
            let cfg = load_model(&m)?;
            let q = quantity(&q)?;
            let ts = match (t, &t_grid) {
                (Some(t), _) => vec![t],
                (None, Some(g)) => Grid::parse(g).map_err(Usage)?.log_points().map_err(Usage)?,
                (None, None) => return Err(Usage("one of --t or --t-grid is required".into()).into()),
            };
            if ts.iter().any(|&t| !(t > 0.0)) {
                return Err(Error::Domain("maturities must be positive".into()).into());
            }
            let ex = Expansion::build(&cfg.to_model()?)?;
            let rows: Vec<Vec<f64>> = ts
                .iter()
                .map(|&t| {
                    let v = match order {
                        Order::First => ex.eval_order(q, t, false),
                        Order::Second => ex.eval_order(q, t, true),
                        Order::Full => ex.eval(q, t),
                    };
                    vec![t, v]
                })
                .collect();
            if rows.len() == 1 {
                println!("{}", rows[0][1]);
            } else {
                print!("{}", csv_table(&["t", "value"], &rows));
            }
            out.write("eval.csv", &csv_table(&["t", "value"], &rows))?;
            out.manifest("eval", json!({ "model": cfg, "quantity": q.as_str(), "t": ts, "order": order }), None)?;
        }
        Cmd::Mc { m, mc, t, what, kappa_grid, dk } => {
            let cfg = load_model(&m)?;
            let model = cfg.to_model()?;
            let mcc = mc.config();
            match (what.as_str(), &kappa_grid) {
                ("smile", _) | (_, Some(_)) => {
                    let g = kappa_grid.as_deref().unwrap_or("-0.1:0.1:21");
                    let ks = Grid::parse(g).map_err(Usage)?.linear_points().map_err(Usage)?;
                    let sm = montecarlo::smile_mc(&model, t, &ks, &mcc)?;
                    let rows: Vec<Vec<f64>> = sm.points.iter().map(|p| vec![p.kappa, p.iv, p.stderr]).collect();
                    let text = csv_table(&["kappa", "iv", "stderr"], &rows);
                    print!("{text}");
                    for (k, why) in &sm.dropped {
                        eprintln!("warning: kappa {k} dropped: {why}");
                    }
                    out.write("smile_mc.csv", &text)?;
                }
                ("digital", None) => {
                    let e = montecarlo::digital_price_mc(&model, t, &mcc)?;
                    let text = serde_json::to_string_pretty(&json!({ "quantity": "digital", "t": t, "estimate": e })).expect("json") + "\n";
                    print!("{text}");
                    out.write("mc.json", &text)?;
                }
                ("skew", None) => {
                    let e = montecarlo::skew_fd_mc(&model, t, &mcc, dk)?;
                    let text = serde_json::to_string_pretty(&json!({ "quantity": "skew", "t": t, "dk": dk, "estimate": e })).expect("json") + "\n";
                    print!("{text}");
                    out.write("mc.json", &text)?;
                }
                (other, None) => return Err(Usage(format!("unknown --what \"{other}\" (digital, skew, smile)")).into()),
            }
            out.manifest("mc", json!({ "model": cfg, "mc": mc, "t": t, "what": what, "kappa_grid": kappa_grid, "dk": dk }), Some(mc.seed))?;
        }
        Cmd::Compare { m, mc, quantity: q, t_grid, dk } => {
            let cfg = load_model(&m)?;
            let model = cfg.to_model()?;
            let q = quantity(&q)?;
            let ex = Expansion::build(&model)?;
            let mcc = mc.config();
            let ts = Grid::parse(&t_grid).map_err(Usage)?.log_points().map_err(Usage)?;
            let mut rows = Vec::with_capacity(ts.len());
            for &t in &ts {
                let (v, se) = mc_value(&model, q, t, &mcc, dk)?;
                rows.push(vec![t, ex.eval_order(q, t, false), ex.eval_order(q, t, true), v, se]);
            }
            let text = csv_table(&["t", "approx1", "approx2", "mc", "mc_stderr"], &rows);
            print!("{text}");
            out.write("compare.csv", &text)?;
            let axes = json!({ "x": "t", "y": q.as_str(), "log_x": true, "log_y": true, "series": ["approx1", "approx2", "mc"] });
            out.write("axes.json", &(serde_json::to_string_pretty(&axes).expect("json") + "\n"))?;
            out.manifest("compare", json!({ "model": cfg, "mc": mc, "quantity": q.as_str(), "t_grid": t_grid, "dk": dk }), Some(mc.seed))?;
        }
        Cmd::Smile { m, mc, t, kappa_grid } => {
            let cfg = load_model(&m)?;
            let model = cfg.to_model()?;
            let ks = Grid::parse(&kappa_grid).map_err(Usage)?.linear_points().map_err(Usage)?;
            let sm = montecarlo::smile_mc(&model, t, &ks, &mc.config())?;
            for (k, why) in &sm.dropped {
                eprintln!("warning: kappa {k} dropped: {why}");
            }
            let ex = Expansion::build(&model)?;
            let (atm, skew) = (ex.eval(Quantity::AtmVol, t), ex.eval(Quantity::Skew, t));
            let rows: Vec<Vec<f64>> = sm.points.iter().map(|p| vec![p.kappa, p.iv, p.stderr]).collect();
            let tangent: Vec<Vec<f64>> = ks.iter().map(|&k| vec![k, atm + skew * k]).collect();
            let text = csv_table(&["kappa", "iv", "stderr"], &rows);
            print!("{text}");
            out.write("smile.csv", &text)?;
            out.write("tangent.csv", &csv_table(&["kappa", "iv_tangent"], &tangent))?;
            out.manifest("smile", json!({ "model": cfg, "mc": mc, "t": t, "kappa_grid": kappa_grid }), Some(mc.seed))?;
        }
        Cmd::Otm { m, kappa, t_grid } => {
            let cfg = load_model(&m)?;
            let p = cfg.params()?;
            let ks = parse_list::<f64>(&kappa).map_err(Usage)?;
            let ts = Grid::parse(&t_grid).map_err(Usage)?.log_points().map_err(Usage)?;
            let mut rows = Vec::new();
            for &k in &ks {
                let inp = OtmInputs::new(k, p, cfg.sigma.unwrap_or(0.0))?;
                for &t in &ts {
                    rows.push(vec![k, t, otm_skew(&inp, t)?, otm_vol(&inp, t)?]);
                }
            }
            let text = csv_table(&["kappa", "t", "skew_approx", "vol_approx"], &rows);
            print!("{text}");
            out.write("otm.csv", &text)?;
            out.manifest("otm", json!({ "model": cfg, "kappa": ks, "t_grid": t_grid }), None)?;
        }
        Cmd::Calibrate { chains, t_max, model, delta_mode } => {
            let kind: ModelKind = model.parse().map_err(|_| Usage(format!("unknown model \"{model}\"")))?;
            let mode: DeltaMode = delta_mode.parse().map_err(|_| Usage(format!("unknown delta mode \"{delta_mode}\"")))?;
            let snaps = load_snapshots(&chains)?;
            for s in &snaps {
                for r in &s.rejected {
                    eprintln!("warning: {} line {}: {}", s.quote_date, r.line, r.reason);
                }
            }
            let series = pipeline::skew_series(&snaps, mode);
            for s in &series {
                for (e, why) in &s.skipped {
                    eprintln!("warning: {} expiry {e} skipped: {why}", s.quote_date);
                }
            }
            let mut fits = Vec::new();
            let mut ok = Vec::new();
            for s in &series {
                match pipeline::fit_powerlaw(&s.points, t_max) {
                    Ok(f) => {
                        fits.push(json!({ "quote_date": s.quote_date, "fit": f }));
                        ok.push(f);
                    }
                    Err(e) => fits.push(json!({ "quote_date": s.quote_date, "error": e.to_string() })),
                }
            }
            if ok.is_empty() {
                return Err(Error::InsufficientQuotes("no quote date produced a power-law fit".into()).into());
            }
            let n = ok.len() as f64;
            let mean = pipeline::PowerLawFit {
                slope: ok.iter().map(|f| f.slope).sum::<f64>() / n,
                intercept: ok.iter().map(|f| f.intercept).sum::<f64>() / n,
                r2: ok.iter().map(|f| f.r2).sum::<f64>() / n,
                n: ok.iter().map(|f| f.n).sum(),
                window: t_max,
                sign: ok[0].sign,
            };
            let cal = pipeline::calibrate_y(&mean, kind);
            if let Some(p) = out.path("skew_series.csv") {
                pipeline::write_skew_csv(&p, &series)?;
            }
            let fit_json = json!({
                "slope": mean.slope, "intercept": mean.intercept, "r2": mean.r2, "n": mean.n, "window": t_max,
                "dates": fits, "delta_mode": mode,
            });
            out.write("fit.json", &(serde_json::to_string_pretty(&fit_json).expect("json") + "\n"))?;
            let text = serde_json::to_string_pretty(&cal).expect("json") + "\n";
            out.write("calibration.json", &text)?;
            print!("{text}");
            out.manifest("calibrate", json!({ "chains": chains, "t_max": t_max, "model": kind, "delta_mode": mode }), None)?;
        }
        Cmd::SynthChain { m, mc, bs_sigma, date, expiry_days, forward, strikes, vix } => {
            let quote_date = date.parse().map_err(|e| Usage(format!("bad --date: {e}")))?;
            let expiry_days = parse_list::<i64>(&expiry_days).map_err(Usage)?;
            let g = Grid::parse(&strikes).map_err(Usage)?;
            let spec = SynthSpec { quote_date, expiry_days, forward, strikes: SynthSpec::strike_grid(g.a, g.b, g.step()), vix };
            let (snap, model_cfg) = match bs_sigma {
                Some(s) => (pipeline::synth_bs_chain(s, &spec)?, Value::Null),
                None => {
                    let cfg = load_model(&m)?;
                    (pipeline::synth_chain(&cfg.to_model()?, &spec, &mc.config())?, json!(cfg))
                }
            };
            match out.path("chain.csv") {
                Some(p) => pipeline::write_chains_csv(&p, &[snap])?,
                None => {
                    let tmp = std::env::temp_dir().join(format!("shortskew-chain-{}.csv", std::process::id()));
                    pipeline::write_chains_csv(&tmp, &[snap])?;
                    print!("{}", fs::read_to_string(&tmp)?);
                    let _ = fs::remove_file(&tmp);
                }
            }
            out.manifest("synth-chain", json!({ "model": model_cfg, "bs_sigma": bs_sigma, "spec": spec, "mc": mc }), Some(mc.seed))?;
        }
    }
    Ok(())
}

/// (estimate, standard error) of one quantity by Monte Carlo.
fn mc_value(model: &shortskew::Model, q: Quantity, t: f64, cfg: &McConfig, dk: f64) -> CliResult<(f64, f64)> {
    Ok(match q {
        Quantity::Digital => {
            let e = montecarlo::digital_price_mc(model, t, cfg)?;
            (e.value, e.std_error)
        }
        Quantity::Skew => {
            let e = montecarlo::skew_fd_mc(model, t, cfg, dk)?;
            (e.value, e.std_error)
        }
        Quantity::AtmVol => {
            let p = montecarlo::otm_prices_mc(model, t, &[0.0], cfg)?[0];
            let iv = blackscholes::implied_vol(p.value, 1.0, 1.0, t, OptionKind::Call)?;
            (iv, p.std_error / blackscholes::vega(1.0, 1.0, t, iv))
        }
        Quantity::Delta => {
            // Δ = C/S₀ + P(S_t ≥ S₀); standard errors combined as if independent
            let p = montecarlo::otm_prices_mc(model, t, &[0.0], cfg)?[0];
            let d = montecarlo::digital_price_mc(model, t, cfg)?;
            (p.value + d.value, (p.std_error.powi(2) + d.std_error.powi(2)).sqrt())
        }
    })
}

fn load_snapshots(path: &Path) -> CliResult<Vec<pipeline::ChainSnapshot>> {
    let mut files = Vec::new();
    if path.is_dir() {
        for e in fs::read_dir(path)? {
            let p = e?.path();
            if p.extension().is_some_and(|x| x == "csv") {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    let mut snaps = Vec::new();
    for f in files {
        snaps.extend(pipeline::load_chains(&f)?);
    }
    snaps.sort_by_key(|s| s.quote_date);
    Ok(snaps)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 4 } else { 3 })
        }
    }
}
