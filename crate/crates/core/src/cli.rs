//! Command-line front end. Every command writes a `#` metadata header
//! (version, resolved configuration, wall time) followed by CSV rows, or a
//! single JSON document with the same content.

use crate::bands::{compute_bands, bands_csv};
use crate::combinatorics::{build_comb_table, comb_csv};
use crate::operator::{gap_labels, gaps_csv, transport_csv, transport_moments};
use crate::orbits::orbits_csv;
use crate::report::{asymptotic_trends, asymptotics_csv, full_report, report_csv, ChainStatus, SpectralReport};
use crate::thermo::{pressure_csv, pressure_curve};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;
use thiserror::Error;

/// Thread count for the worker pool; nothing else is read from the environment.
pub const THREADS_ENV: &str = "FIBTRACE_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("bands: {0}")]
    Bands(#[from] crate::bands::BandError),
    #[error("orbits: {0}")]
    Orbits(#[from] crate::orbits::OrbitError),
    #[error("thermo: {0}")]
    Thermo(#[from] crate::thermo::ThermoError),
    #[error("report: {0}")]
    Report(#[from] crate::report::ReportError),
    #[error("operator: {0}")]
    Operator(#[from] crate::operator::OperatorError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Subcommand)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Band edges, roots and derivatives for every level.
    Bands,
    /// Period-2 and period-4 orbit curves over a coupling grid.
    Orbits,
    /// Dimension estimates and the strict-inequality audit.
    Dims,
    /// Pressure curve at one level.
    Pressure,
    /// Gap labels at one level.
    Gaps,
    /// Root-derivative combinatorics.
    Comb,
    /// Time-averaged wavepacket moments.
    Transport,
    /// Dimension estimates over several couplings.
    Sweep,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every option, shared by all commands. The config file uses the same keys.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// start:stop:step, endpoints inclusive.
    #[arg(long, global = true)]
    pub lambda_grid: Option<String>,
    /// Comma-separated couplings.
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub level: Option<usize>,
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    /// start:stop:step for pressure parameters, or a comma list of averaging times.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Extra random phases drawn from --seed.
    #[arg(long, global = true)]
    pub random_omegas: Option<usize>,
    #[arg(long, global = true)]
    pub length: Option<usize>,
    /// Comma-separated moment orders.
    #[arg(long, global = true, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub m_max: Option<i64>,
    /// Relative tolerance of the asymptotic trend audit.
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `asymptotics` turns a sweep into the value * ln(lambda) table.
    #[arg(long, global = true)]
    pub report: Option<String>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Parser)]
#[command(name = "fibtrace", version, about = "Spectral computations for the Fibonacci Hamiltonian")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON file with option defaults; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub options: Options,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident, $($f:ident),*) => { Options { $($f: $a.$f.or($b.$f)),* } };
}

impl Options {
    /// Fields set in `self` win over `other`.
    #[must_use]
    pub fn merged(self, other: Options) -> Options {
        merge_fields!(
            self, other, lambda, lambda_grid, lambdas, level, k_max, t, omega, random_omegas, length, p, m_max,
            rel_tol, seed, report, output, format
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub options: Options,
}

/// Data produced by a command: CSV text and an audit outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub csv: String,
    pub inconclusive: bool,
}

/// Values start, start + step, ... up to stop (inclusive within 1e-12).
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Config(format!("grid '{s}' must be start:stop:step with step > 0 and stop >= start"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let (start, stop, step) = (v[0], v[1], v[2]);
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let span = (stop - start) / step;
    if span > 1e7 {
        return Err(CliError::Config(format!("grid '{s}' has more than 1e7 points")));
    }
    let mut n = span.floor() as usize;
    if (start + (n + 1) as f64 * step - stop).abs() <= 1e-12 {
        n += 1;
    }
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::Config(format!("'{x}' is not a number"))))
        .collect()
}

fn couplings(o: &Options) -> Result<Vec<f64>, CliError> {
    let mut v = if let Some(g) = &o.lambda_grid {
        parse_grid(g)?
    } else if let Some(l) = &o.lambdas {
        l.clone()
    } else if let Some(l) = o.lambda {
        vec![l]
    } else {
        return Err(CliError::Config("give --lambda, --lambdas or --lambda-grid".into()));
    };
    if v.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(CliError::Config("couplings must be finite and nonnegative".into()));
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

fn single_coupling(o: &Options) -> Result<f64, CliError> {
    let v = couplings(o)?;
    if v.len() == 1 {
        Ok(v[0])
    } else {
        Err(CliError::Config("this command takes a single coupling".into()))
    }
}

fn positive_coupling(o: &Options) -> Result<f64, CliError> {
    let l = single_coupling(o)?;
    if l > 0.0 {
        Ok(l)
    } else {
        Err(CliError::Config("the coupling must be positive".into()))
    }
}

fn level_or(o: &Options, default: usize) -> usize {
    o.level.or(o.k_max).unwrap_or(default)
}

fn reports(o: &Options, k_default: usize) -> Result<Vec<SpectralReport>, CliError> {
    let k = o.k_max.or(o.level).unwrap_or(k_default);
    let ls = couplings(o)?;
    if ls.iter().any(|&l| l <= 0.0) {
        return Err(CliError::Config("dimension estimates need positive couplings".into()));
    }
    let out: Result<Vec<_>, _> = ls.par_iter().map(|&l| full_report(l, k)).collect();
    Ok(out?)
}

fn reports_artifact(rs: &[SpectralReport]) -> Artifact {
    let mut csv = String::from("lambda,quantity,value,extrapolated,error_indicator,windows\n");
    for r in rs {
        for line in report_csv(r).lines().skip(1) {
            let _ = writeln!(csv, "{},{line}", crate::fmt17(r.lambda));
        }
    }
    let _ = writeln!(csv, "# chain");
    for r in rs {
        let margins: Vec<String> = r.chain.margins.iter().map(|m| crate::fmt17(*m)).collect();
        let _ = writeln!(
            csv,
            "# lambda={} status={:?} margins={} per_level_order={}",
            crate::fmt17(r.lambda),
            r.chain.status,
            margins.join(";"),
            r.chain.per_level_order
        );
    }
    Artifact { csv, inconclusive: rs.iter().any(|r| r.chain.status == ChainStatus::Inconclusive) }
}

/// Run one command on resolved options.
pub fn execute(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let o = &cfg.options;
    let plain = |csv: String| Artifact { csv, inconclusive: false };
    match cfg.command {
        Command::Bands => {
            let l = single_coupling(o)?;
            Ok(plain(bands_csv(&compute_bands(l, level_or(o, 12))?)))
        }
        Command::Orbits => Ok(plain(orbits_csv(&couplings(o)?)?)),
        Command::Comb => Ok(plain(comb_csv(&build_comb_table(o.k_max.or(o.level).unwrap_or(60))))),
        Command::Pressure => {
            let l = positive_coupling(o)?;
            let level = level_or(o, 14);
            let ts = parse_grid(o.t.as_deref().unwrap_or("-1:2:0.01"))?;
            let h = compute_bands(l, level)?;
            Ok(plain(pressure_csv(&pressure_curve(&h, level, &ts)?)))
        }
        Command::Gaps => {
            let l = positive_coupling(o)?;
            let level = level_or(o, 16);
            let h = compute_bands(l, level)?;
            Ok(plain(gaps_csv(&gap_labels(&h, level, o.m_max.unwrap_or(20))?)))
        }
        Command::Transport => {
            let l = single_coupling(o)?;
            let length = o.length.unwrap_or(1024);
            let ps = o.p.clone().unwrap_or_else(|| vec![1.0, 2.0, 5.0]);
            let ts = match &o.t {
                Some(t) if t.contains(':') => parse_grid(t)?,
                Some(t) => parse_list(t)?,
                None => (0..9).map(|i| 8.0 * 2f64.powf(0.625 * f64::from(i))).filter(|&t| t <= length as f64 / 4.0).collect(),
            };
            let mut omegas = vec![o.omega.unwrap_or(0.0)];
            let mut rng = ChaCha8Rng::seed_from_u64(o.seed.unwrap_or(0));
            omegas.extend((0..o.random_omegas.unwrap_or(0)).map(|_| rng.gen::<f64>()));
            let runs: Result<Vec<_>, _> =
                omegas.par_iter().map(|&w| transport_moments(l, w, length, &ps, &ts)).collect();
            let mut csv = String::from("omega,p,T,moment,beta\n");
            let mut notes = String::new();
            for r in runs? {
                for line in transport_csv(&r).lines().skip(1) {
                    let _ = writeln!(csv, "{},{line}", crate::fmt17(r.omega));
                }
                for s in &r.series {
                    let _ = writeln!(
                        notes,
                        "# omega={} p={} beta={} beta_slope={} unitarity_error={:e} outside={:e} quadrature_discrepancy={:e}",
                        crate::fmt17(r.omega),
                        crate::fmt17(s.p),
                        crate::fmt17(s.beta),
                        crate::fmt17(s.beta_fit),
                        r.unitarity_error,
                        r.outside_probability,
                        r.quadrature_discrepancy
                    );
                }
            }
            csv.push_str(&notes);
            Ok(plain(csv))
        }
        Command::Dims => Ok(reports_artifact(&reports(o, 18)?)),
        Command::Sweep => {
            let rs = reports(o, 16)?;
            match o.report.as_deref() {
                None => Ok(reports_artifact(&rs)),
                Some("asymptotics") => {
                    let mut a = reports_artifact(&rs);
                    let mut csv = asymptotics_csv(&rs);
                    for t in asymptotic_trends(&rs, o.rel_tol.unwrap_or(0.15)) {
                        let _ = writeln!(
                            csv,
                            "# trend {} within_tolerance={} monotone={}",
                            t.quantity, t.within_tolerance, t.monotone
                        );
                    }
                    csv.extend(a.csv.lines().filter(|l| l.starts_with("# ") && l.contains("status=")).map(|l| format!("{l}\n")));
                    a.csv = csv;
                    Ok(a)
                }
                Some(other) => Err(CliError::Config(format!("unknown report '{other}' (expected 'asymptotics')"))),
            }
        }
    }
}

/// Integers stay exact; those beyond 64 bits are kept as strings.
fn json_cell(c: &str) -> serde_json::Value {
    use serde_json::Value;
    if let Ok(u) = c.parse::<u64>() {
        return Value::from(u);
    }
    if let Ok(i) = c.parse::<i64>() {
        return Value::from(i);
    }
    if c.bytes().all(|b| b.is_ascii_digit()) {
        return Value::String(c.to_string());
    }
    c.parse::<f64>()
        .ok()
        .and_then(serde_json::Number::from_f64)
        .map_or_else(|| Value::String(c.to_string()), Value::Number)
}

/// Header lines and data rows; JSON wraps both.
#[must_use]
pub fn render(cfg: &RunConfig, art: &Artifact, wall: f64) -> String {
    let config = serde_json::to_string(cfg).unwrap_or_default();
    let version = env!("CARGO_PKG_VERSION");
    match cfg.options.format.unwrap_or_default() {
        Format::Csv => format!("# fibtrace {version}\n# config {config}\n# wall_time_s {wall:.3}\n{}", art.csv),
        Format::Json => {
            let mut notes = Vec::new();
            let mut lines = Vec::new();
            for l in art.csv.lines() {
                match l.strip_prefix('#') {
                    Some(n) => notes.push(n.trim().to_string()),
                    None => lines.push(l),
                }
            }
            let columns: Vec<&str> = lines.first().map(|h| h.split(',').collect()).unwrap_or_default();
            let rows: Vec<Vec<serde_json::Value>> = lines
                .iter()
                .skip(1)
                .map(|l| {
                    l.split(',').map(json_cell).collect()
                })
                .collect();
            let doc = serde_json::json!({
                "metadata": { "version": version, "config": cfg, "wall_time_s": wall },
                "notes": notes,
                "columns": columns,
                "rows": rows,
            });
            format!("{}\n", serde_json::to_string_pretty(&doc).unwrap_or_default())
        }
    }
}

/// Parse arguments, run, write output; 0 success, 2 inconclusive audit, 1 error.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::from(2),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if let Ok(n) = std::env::var(THREADS_ENV) {
        let n: usize = n.parse().map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a positive integer")))?;
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let file = match &cli.config {
        Some(p) => serde_json::from_str::<Options>(&std::fs::read_to_string(p)?)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => Options::default(),
    };
    let cfg = RunConfig { command: cli.command, options: cli.options.merged(file) };
    let start = Instant::now();
    let art = execute(&cfg)?;
    let text = render(&cfg, &art, start.elapsed().as_secs_f64());
    match &cfg.options.output {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(art.inconclusive)
}
