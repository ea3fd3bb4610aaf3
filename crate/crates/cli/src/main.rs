//! `levymax` command-line front end.
//!
//! Exit codes: 0 on success, 1 on bad input, 2 on numerical failure or a
//! benchmark cell outside its tolerance.

mod config;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{list, RunConfig};
use levymax::contours::{contour_pair_clearing, ContourOptions};
use levymax::golden;
use levymax::oracle::{bm_exchange, bm_joint_cdf, flat_contour_cpdf_laplace, mc_joint_cdf, FLAT_DEFAULT_N};
use levymax::whf::{phi_minus, phi_plus};
use levymax::{
    price, BarrierPayoff, Complex64, Family, LaplaceScheme, LevyModel, ModelKind, Overrides, Payoff, PricingTask,
};
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "levymax", version, about = "Joint law of a Lévy process and its maximum, and options on both")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Joint cpdf P[x1 + X_T <= a1, max(x2, x1 + sup X) <= a2] on a grid.
    Cpdf {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// No-touch probability P[max(x2, x1 + sup X) <= a2].
    NoTouch {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// Up-and-out digital (with --a) or no-touch (without) at barrier --h.
    Barrier {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// Exchange option E[(exp(beta X_T) - exp(max X))+].
    Exchange {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// Wiener-Hopf factors at points xi = xi_re + i xi_im.
    Whf {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        q_re: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        q_im: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        xi_re: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi_im: Vec<f64>,
    },
    /// Independent reference values: closed forms, Monte Carlo, flat contours.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_enum)]
        kind: OracleKind,
        /// Monte Carlo paths.
        #[arg(long, default_value_t = 100_000)]
        paths: u64,
        /// Monte Carlo time steps.
        #[arg(long, default_value_t = 500)]
        steps: usize,
        /// Master seed of the Monte Carlo streams.
        #[arg(long)]
        seed: Option<u64>,
        /// Real Laplace arguments for the flat-contour oracle.
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        /// Grid size of the flat-contour oracle.
        #[arg(long, default_value_t = FLAT_DEFAULT_N)]
        flat_n: usize,
    },
    /// Reproduce an embedded reference set.
    Bench {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(golden::SET_NAMES))]
        set: String,
        #[arg(long, value_enum, ignore_case = true, default_value = "sinh")]
        method: Method,
        /// Restrict to one maturity.
        #[arg(long = "T")]
        t: Option<f64>,
        /// Timed repetitions per maturity (the median is reported).
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        digits: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// TOML file with [model], [task], [numeric] and [output] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, ignore_case = true)]
    model: Option<ModelArg>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda_plus: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda_minus: Option<f64>,
    /// Second moment psi''(0); calibrates the KoBoL intensity.
    #[arg(long)]
    m2: Option<f64>,
    /// KoBoL intensity, instead of --m2.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, ignore_case = true)]
    method: Option<Method>,
    /// Deformation family of the sinh contours.
    #[arg(long, value_enum, ignore_case = true)]
    family: Option<FamilyArg>,
    #[arg(long)]
    gwr_m: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    shift_a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    omega_plus: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    omega_minus: Option<f64>,
    #[arg(long)]
    omega_ell: Option<f64>,
    #[arg(long)]
    n_xi: Option<usize>,
    #[arg(long)]
    n_ell: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Significant digits of the value column.
    #[arg(long)]
    digits: Option<usize>,
}

#[derive(Args, Debug)]
struct Grid {
    #[arg(long = "T", value_delimiter = ',')]
    t: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a1: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a2: Vec<f64>,
    /// Barrier levels.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    h: Vec<f64>,
    /// Digital level of the barrier payoff.
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x2: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Kobol,
    Brownian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Sinh,
    Gwr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    I,
    Ii,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    /// Reflection-principle joint cpdf of Brownian motion.
    Bm,
    /// Quadrature value of the exchange option under Brownian motion.
    BmExchange,
    /// Monte Carlo joint cpdf.
    Mc,
    /// Laplace-domain joint cpdf from straight contours.
    Flat,
}

/// Numerical failure that is not a pipeline error, such as a benchmark miss.
#[derive(Debug)]
struct NumericalFailure(String);

impl fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

/// Fully resolved settings: flags over config over defaults.
struct Settings {
    model: LevyModel,
    tol: f64,
    scheme: LaplaceScheme,
    family: Family,
    overrides: Overrides,
    out: Option<PathBuf>,
    digits: usize,
    task: config::TaskSection,
    seed: Option<u64>,
}

fn parse_enum<T: ValueEnum>(s: &str, what: &str) -> Result<T> {
    T::from_str(s, true).map_err(|_| anyhow!("unknown {what} '{s}'"))
}

impl Settings {
    fn resolve(c: &Common) -> Result<Self> {
        let cfg = match &c.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let m = &cfg.model;
        let kind = match (c.model, &m.kind) {
            (Some(k), _) => k,
            (None, Some(s)) => parse_enum(s, "model")?,
            (None, None) => bail!("no model given (--model kobol|brownian)"),
        };
        let mu = c.mu.or(m.mu).unwrap_or(0.0);
        let need = |flag: Option<f64>, cfg: Option<f64>, name: &str| {
            flag.or(cfg).ok_or_else(|| anyhow!("model {kind:?} needs --{name}"))
        };
        let model = match kind {
            ModelArg::Brownian => LevyModel::brownian(need(c.sigma, m.sigma, "sigma")?, mu)?,
            ModelArg::Kobol => {
                let nu = need(c.nu, m.nu, "nu")?;
                let lp = need(c.lambda_plus, m.lambda_plus, "lambda-plus")?;
                let lm = need(c.lambda_minus, m.lambda_minus, "lambda-minus")?;
                match (c.c.or(m.c), c.m2.or(m.m2)) {
                    (Some(_), Some(_)) => bail!("give either --c or --m2, not both"),
                    (Some(cc), None) => LevyModel::kobol(nu, lp, lm, cc, mu)?,
                    (None, Some(m2)) => LevyModel::kobol_calibrated(nu, lp, lm, m2, mu)?,
                    (None, None) => bail!("KoBoL needs --m2 or --c"),
                }
            }
        };
        let n = &cfg.numeric;
        let tol = c.tol.or(n.tol).unwrap_or(1e-10);
        if !(tol > 0.0 && tol < 1.0) {
            bail!("tolerance must lie in (0, 1), got {tol}");
        }
        let method = match (c.method, &n.method) {
            (Some(m), _) => m,
            (None, Some(s)) => parse_enum(s, "method")?,
            (None, None) => Method::Sinh,
        };
        let family = match (c.family, &n.family) {
            (Some(f), _) => f,
            (None, Some(s)) => parse_enum(s, "family")?,
            (None, None) => FamilyArg::I,
        };
        let family = match family {
            FamilyArg::I => Family::I,
            FamilyArg::Ii => Family::II,
        };
        let shift_a = c.shift_a.or(n.shift_a).unwrap_or(0.0);
        let scheme = match method {
            Method::Gwr => LaplaceScheme::Gwr { m: c.gwr_m.or(n.gwr_m).unwrap_or(levymax::laplace::DEFAULT_GWR_M), shift_a },
            Method::Sinh => {
                if c.gwr_m.or(n.gwr_m).is_some() {
                    bail!("--gwr-m applies to --method gwr only");
                }
                LaplaceScheme::SinhBromwich { family, shift_a }
            }
        };
        let overrides = Overrides {
            omega_plus: c.omega_plus.or(n.omega_plus),
            omega_minus: c.omega_minus.or(n.omega_minus),
            omega_ell: c.omega_ell.or(n.omega_ell),
            n_xi: c.n_xi.or(n.n_xi),
            n_ell: c.n_ell.or(n.n_ell),
            force_double: false,
        };
        let digits = c.digits.or(cfg.output.digits).unwrap_or(16);
        if !(1..=17).contains(&digits) {
            bail!("digits must lie in 1..=17, got {digits}");
        }
        Ok(Self {
            model,
            tol,
            scheme,
            family,
            overrides,
            out: c.out.clone().or(cfg.output.out),
            digits,
            task: cfg.task,
            seed: n.seed,
        })
    }

    fn maturities(&self, g: &Grid) -> Result<Vec<f64>> {
        let ts = list(&g.t, &self.task.t);
        if ts.is_empty() {
            bail!("no maturity given (--T)");
        }
        if let Some(t) = ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            bail!("maturities must be positive, got {t}");
        }
        Ok(ts)
    }

    fn levels(&self, flag: &[f64], cfg: &Option<config::OneOrMany>, name: &str) -> Result<Vec<f64>> {
        let v = list(flag, cfg);
        if v.is_empty() {
            bail!("no --{name} values given");
        }
        Ok(v)
    }

    fn state(&self, g: &Grid) -> (f64, f64) {
        let x1 = g.x1.or(self.task.x1).unwrap_or(0.0);
        (x1, g.x2.or(self.task.x2).unwrap_or(x1.max(0.0)))
    }
}

fn fmt_sig(v: f64, digits: usize) -> String {
    format!("{:.*e}", digits - 1, v)
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| fmt_sig(x, digits)).unwrap_or_default()
}

fn writer(out: &Option<PathBuf>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    Ok(csv::Writer::from_writer(sink))
}

const HEADER: [&str; 9] = ["T", "a1_or_h", "a2", "x1", "x2", "value", "method", "est_error", "ms"];

/// One output row; `a` and `b` fill the `a1_or_h` and `a2` columns.
struct Row {
    t: f64,
    a: Option<f64>,
    b: Option<f64>,
    x1: f64,
    x2: f64,
}

fn price_rows(s: &Settings, rows_for: impl Fn(f64) -> Vec<(Row, Payoff)>, ts: &[f64]) -> Result<()> {
    let mut w = writer(&s.out)?;
    w.write_record(HEADER)?;
    for &t in ts {
        let (rows, payoffs): (Vec<Row>, Vec<Payoff>) = rows_for(t).into_iter().unzip();
        let mut task = PricingTask::new(s.model, t, payoffs, s.tol);
        task.overrides = s.overrides;
        let t0 = Instant::now();
        let r = price(&task, &s.scheme)?;
        let ms = t0.elapsed().as_secs_f64() * 1e3 / rows.len() as f64;
        for (row, v) in rows.iter().zip(&r.values) {
            w.write_record([
                fmt_sig(row.t, s.digits),
                fmt_opt(row.a, s.digits),
                fmt_opt(row.b, s.digits),
                fmt_sig(row.x1, s.digits),
                fmt_sig(row.x2, s.digits),
                fmt_sig(*v, s.digits),
                r.method.to_string(),
                format!("{:.3e}", r.est_error),
                format!("{ms:.3}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run_cpdf(c: &Common, g: &Grid) -> Result<()> {
    let s = Settings::resolve(c)?;
    let ts = s.maturities(g)?;
    let a1s = s.levels(&g.a1, &s.task.a1, "a1")?;
    let a2s = s.levels(&g.a2, &s.task.a2, "a2")?;
    let (x1, x2) = s.state(g);
    let rows = |t: f64| {
        let mut v = Vec::new();
        for &a2 in &a2s {
            for &a1 in &a1s {
                v.push((Row { t, a: Some(a1), b: Some(a2), x1, x2 }, Payoff::Cpdf { x1, x2, a1, a2 }));
            }
        }
        v
    };
    price_rows(&s, rows, &ts)
}

fn run_no_touch(c: &Common, g: &Grid) -> Result<()> {
    let s = Settings::resolve(c)?;
    let ts = s.maturities(g)?;
    let a2s = s.levels(&g.a2, &s.task.a2, "a2")?;
    let (x1, x2) = s.state(g);
    let rows = |t: f64| {
        a2s.iter().map(|&a2| (Row { t, a: None, b: Some(a2), x1, x2 }, Payoff::NoTouch { x1, x2, a2 })).collect()
    };
    price_rows(&s, rows, &ts)
}

fn run_barrier(c: &Common, g: &Grid) -> Result<()> {
    let s = Settings::resolve(c)?;
    let ts = s.maturities(g)?;
    let hs = s.levels(&g.h, &s.task.h, "h")?;
    let x = g.x1.or(s.task.x1).unwrap_or(0.0);
    let a = g.a.or(s.task.a);
    let payoff = match a {
        Some(a) => BarrierPayoff::Digital { a },
        None => BarrierPayoff::Constant,
    };
    let rows = |t: f64| {
        hs.iter()
            .map(|&h| (Row { t, a: Some(h), b: a, x1: x, x2: x }, Payoff::Barrier { x, h, payoff: payoff.clone() }))
            .collect()
    };
    price_rows(&s, rows, &ts)
}

fn run_exchange(c: &Common, g: &Grid) -> Result<()> {
    let s = Settings::resolve(c)?;
    let ts = s.maturities(g)?;
    let betas = s.levels(&g.beta, &s.task.beta, "beta")?;
    let (x1, x2) = s.state(g);
    let rows = |t: f64| {
        betas
            .iter()
            .map(|&beta| (Row { t, a: Some(beta), b: None, x1, x2 }, Payoff::Exchange { x1, x2, beta }))
            .collect()
    };
    price_rows(&s, rows, &ts)
}

fn run_whf(c: &Common, q_re: f64, q_im: f64, xi_re: &[f64], xi_im: &[f64]) -> Result<()> {
    let s = Settings::resolve(c)?;
    let q = Complex64::new(q_re, q_im);
    if !(q_re > 0.0) {
        bail!("whf needs Re q > 0, got {q}");
    }
    let ims = if xi_im.is_empty() { vec![0.0] } else { xi_im.to_vec() };
    let pts: Vec<Complex64> = ims.iter().flat_map(|&y| xi_re.iter().map(move |&x| Complex64::new(x, y))).collect();
    let band = ims.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    let mut opts = ContourOptions::new(s.tol, s.family);
    opts.omega_plus = s.overrides.omega_plus;
    opts.omega_minus = s.overrides.omega_minus;
    opts.n_xi = s.overrides.n_xi;
    let strip = s.model.profile.working_strip(2.0);
    let t0 = Instant::now();
    let (plus, minus) = contour_pair_clearing(&s.model.profile, strip, band, &opts)?;
    let fp = phi_plus(&s.model, q, &pts, &minus)?;
    let fm = phi_minus(&s.model, q, &pts, &plus)?;
    let ms = t0.elapsed().as_secs_f64() * 1e3 / pts.len() as f64;
    let mut w = writer(&s.out)?;
    w.write_record([
        "q_re", "q_im", "xi_re", "xi_im", "phi_plus_re", "phi_plus_im", "phi_minus_re", "phi_minus_im", "ms",
    ])?;
    let d = s.digits;
    for ((xi, p), m) in pts.iter().zip(&fp).zip(&fm) {
        w.write_record([
            fmt_sig(q.re, d),
            fmt_sig(q.im, d),
            fmt_sig(xi.re, d),
            fmt_sig(xi.im, d),
            fmt_sig(p.re, d),
            fmt_sig(p.im, d),
            fmt_sig(m.re, d),
            fmt_sig(m.im, d),
            format!("{ms:.3}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

struct OracleOpts<'a> {
    kind: OracleKind,
    paths: u64,
    steps: usize,
    seed: Option<u64>,
    q: &'a [f64],
    flat_n: usize,
}

fn brownian_params(m: &LevyModel) -> Result<(f64, f64)> {
    if m.kind != ModelKind::Brownian {
        return Err(levymax::Error::Unsupported("this oracle needs --model brownian".into()).into());
    }
    Ok((m.sigma(), m.profile.drift))
}

fn run_oracle(c: &Common, g: &Grid, o: &OracleOpts) -> Result<()> {
    let s = Settings::resolve(c)?;
    let d = s.digits;
    let (x1, x2) = s.state(g);
    let mut w = writer(&s.out)?;
    let emit = |w: &mut csv::Writer<Box<dyn Write>>, cols: [f64; 5], b_none: bool, value: f64, method: &str, err: f64, ms: f64| {
        w.write_record([
            fmt_sig(cols[0], d),
            fmt_sig(cols[1], d),
            if b_none { String::new() } else { fmt_sig(cols[2], d) },
            fmt_sig(cols[3], d),
            fmt_sig(cols[4], d),
            fmt_sig(value, d),
            method.to_string(),
            if err.is_nan() { String::new() } else { format!("{err:.3e}") },
            format!("{ms:.3}"),
        ])
    };
    match o.kind {
        OracleKind::Bm | OracleKind::Mc => {
            let ts = s.maturities(g)?;
            let a1s = s.levels(&g.a1, &s.task.a1, "a1")?;
            let a2s = s.levels(&g.a2, &s.task.a2, "a2")?;
            w.write_record(HEADER)?;
            let seed = o.seed.or(s.seed).unwrap_or(1);
            for &t in &ts {
                for &a2 in &a2s {
                    for &a1 in &a1s {
                        let t0 = Instant::now();
                        // shift the levels so the oracles run from the origin
                        let (b1, b2) = (a1 - x1, a2 - x1);
                        let (value, method, err) = if x2 > a2 {
                            (0.0, "exact", 0.0)
                        } else if o.kind == OracleKind::Bm {
                            let (sigma, mu) = brownian_params(&s.model)?;
                            (bm_joint_cdf(sigma, mu, t, b1, b2), "bm-closed-form", f64::EPSILON)
                        } else {
                            let r = mc_joint_cdf(&s.model, t, b1, b2, o.paths, o.steps, seed)?;
                            (r.value, r.method, r.est_error)
                        };
                        let ms = t0.elapsed().as_secs_f64() * 1e3;
                        emit(&mut w, [t, a1, a2, x1, x2], false, value, method, err, ms)?;
                    }
                }
            }
        }
        OracleKind::BmExchange => {
            let ts = s.maturities(g)?;
            let betas = s.levels(&g.beta, &s.task.beta, "beta")?;
            let (sigma, mu) = brownian_params(&s.model)?;
            w.write_record(HEADER)?;
            for &t in &ts {
                for &beta in &betas {
                    let t0 = Instant::now();
                    let r = bm_exchange(sigma, mu, t, beta, x1, x2)?;
                    let ms = t0.elapsed().as_secs_f64() * 1e3;
                    emit(&mut w, [t, beta, 0.0, x1, x2], true, r.value, r.method, r.est_error, ms)?;
                }
            }
        }
        OracleKind::Flat => {
            if o.q.is_empty() {
                bail!("the flat oracle needs --q values");
            }
            let a1s = s.levels(&g.a1, &s.task.a1, "a1")?;
            let a2s = s.levels(&g.a2, &s.task.a2, "a2")?;
            let mut header = HEADER;
            header[0] = "q";
            w.write_record(header)?;
            for &q in o.q {
                if !(q > 0.0) {
                    bail!("flat oracle needs q > 0, got {q}");
                }
                for &a2 in &a2s {
                    for &a1 in &a1s {
                        let t0 = Instant::now();
                        let v = flat_contour_cpdf_laplace(&s.model, Complex64::new(q, 0.0), x1, x2, a1, a2, o.flat_n)?;
                        let ms = t0.elapsed().as_secs_f64() * 1e3;
                        emit(&mut w, [q, a1, a2, x1, x2], false, v.re, "flat-laplace", f64::NAN, ms)?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

struct BenchOpts<'a> {
    set: &'a str,
    method: Method,
    t: Option<f64>,
    runs: usize,
    tol: Option<f64>,
    out: &'a Option<PathBuf>,
    digits: Option<usize>,
}

fn run_bench(b: &BenchOpts) -> Result<()> {
    let set = golden::by_name(b.set).ok_or_else(|| anyhow!("unknown set {}", b.set))?;
    let model = set.model()?;
    let digits = b.digits.unwrap_or(16);
    if !(1..=17).contains(&digits) {
        bail!("digits must lie in 1..=17, got {digits}");
    }
    if b.runs == 0 {
        bail!("--runs must be positive");
    }
    let ts: Vec<f64> = match b.t {
        Some(t) if set.maturities().contains(&t) => vec![t],
        Some(t) => bail!("set {} has no maturity {t}; available: {:?}", set.name, set.maturities()),
        None => set.maturities(),
    };
    let (scheme, tol, floor) = match b.method {
        Method::Sinh => (LaplaceScheme::sinh(Family::I), b.tol.unwrap_or(1e-12), 0.0),
        Method::Gwr => (LaplaceScheme::gwr(), b.tol.unwrap_or(1e-10), 5e-5),
    };
    let excluded = set.excluded.iter().filter(|e| ts.contains(&e.0)).count();
    let mut w = writer(b.out)?;
    w.write_record(["T", "a1", "a2", "value", "reference", "abs_err", "tol", "pass", "method", "ms"])?;
    let (mut worst, mut failed, mut count) = (0.0f64, 0usize, 0usize);
    let mut per_point = Vec::new();
    for t in ts {
        let cells = set.cells_at(t);
        let payoffs: Vec<Payoff> =
            cells.iter().map(|c| Payoff::Cpdf { x1: 0.0, x2: 0.0, a1: c.a1, a2: c.a2 }).collect();
        let task = PricingTask::new(model, t, payoffs, tol);
        let mut times = Vec::with_capacity(b.runs);
        let mut values = Vec::new();
        for _ in 0..b.runs {
            let t0 = Instant::now();
            values = price(&task, &scheme)?.values;
            times.push(t0.elapsed().as_secs_f64() * 1e3 / cells.len() as f64);
        }
        times.sort_by(f64::total_cmp);
        let ms = times[times.len() / 2];
        per_point.push(ms);
        for (c, v) in cells.iter().zip(&values) {
            let err = (v - c.value).abs();
            let cell_tol = c.tol.max(floor);
            let pass = err <= cell_tol;
            worst = worst.max(err);
            failed += usize::from(!pass);
            count += 1;
            w.write_record([
                fmt_sig(t, digits),
                fmt_sig(c.a1, digits),
                fmt_sig(c.a2, digits),
                fmt_sig(*v, digits),
                fmt_sig(c.value, digits),
                format!("{err:.3e}"),
                format!("{cell_tol:.0e}"),
                pass.to_string(),
                scheme.name().to_string(),
                format!("{ms:.3}"),
            ])?;
        }
    }
    w.flush()?;
    per_point.sort_by(f64::total_cmp);
    eprintln!(
        "{} {}: {}/{count} cells within tolerance, max |err| {worst:.2e}, median {:.2} ms/point, {excluded} cells excluded",
        set.name,
        scheme.name(),
        count - failed,
        per_point[per_point.len() / 2],
    );
    if failed > 0 {
        return Err(NumericalFailure(format!("{failed} cells outside tolerance")).into());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Cpdf { common, grid } => run_cpdf(common, grid),
        Command::NoTouch { common, grid } => run_no_touch(common, grid),
        Command::Barrier { common, grid } => run_barrier(common, grid),
        Command::Exchange { common, grid } => run_exchange(common, grid),
        Command::Whf { common, q_re, q_im, xi_re, xi_im } => run_whf(common, *q_re, *q_im, xi_re, xi_im),
        Command::Oracle { common, grid, kind, paths, steps, seed, q, flat_n } => run_oracle(
            common,
            grid,
            &OracleOpts { kind: *kind, paths: *paths, steps: *steps, seed: *seed, q, flat_n: *flat_n },
        ),
        Command::Bench { set, method, t, runs, tol, out, digits } => run_bench(&BenchOpts {
            set,
            method: *method,
            t: *t,
            runs: *runs,
            tol: *tol,
            out,
            digits: *digits,
        }),
    }
}

fn exit_code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if let Some(le) = cause.downcast_ref::<levymax::Error>() {
            return if le.is_user_error() { 1 } else { 2 };
        }
        if cause.is::<NumericalFailure>() {
            return 2;
        }
    }
    1
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(exit_code(&e));
    }
}
