//! Front end for the `rayleigh` binary. Each command writes plain CSV files
//! ending in a `#` line that records the resolved settings and version.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayleigh_core::convergence::convergence_study;
use rayleigh_core::estimator::{
    estimate, mixed_sigma_quadrature, quadrature_weights, sigma_c_sweep, sigma_m_sweep, Estimate, Experiment, SweepRow,
};
use rayleigh_core::Error;
use serde::Serialize;

use config::{check_grid, Settings, DEFAULT_C_GRID, DEFAULT_M_GRID};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "rayleigh", version, about = "Tagged-particle variance in the 1-d Rayleigh gas and its small-mass limit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Variance curve and tail slope: variance_curve.csv, slope.csv.
    Variance {
        #[arg(value_enum)]
        kind: VarianceKind,
        #[command(flatten)]
        opts: Options,
    },
    /// Slope at each grid value: sweep.csv, plus mixed_quadrature.csv for `c`.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        #[command(flatten)]
        opts: Options,
    },
    /// Type I against Type II from matched data: convergence.csv, wz_invariant.csv.
    Converge {
        #[command(flatten)]
        opts: Options,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceKind {
    /// Heavy or light tagged particle of mass M.
    Type1,
    /// Central pair with fixed strength c.
    Type2Fixed,
    /// Central pair with c = |W z| drawn per trajectory.
    Type2Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    C,
    M,
}

#[derive(Debug, Args)]
pub struct Options {
    /// TOML file with any of the settings below (keys use underscores).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

impl Options {
    fn resolve(self) -> Result<Settings, CliError> {
        match &self.config {
            Some(path) => Ok(Settings::from_file(path)?.overlay(self.settings)),
            None => Ok(self.settings),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Run(Error),
}

impl CliError {
    /// 1 configuration, 2 event cap, 3 window exhausted, 4 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 4,
            CliError::Run(e) => error_code(e),
        }
    }
}

pub fn error_code(e: &Error) -> i32 {
    match e.root() {
        Error::Config(_) | Error::Domain { .. } => 1,
        Error::InstabilityCap { .. } => 2,
        Error::InsufficientWindow { .. } => 3,
        _ => 4,
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Config(m),
            other => CliError::Run(other),
        }
    }
}

/// Resolved settings as written to the trailing comment line.
#[derive(Serialize)]
struct Meta<'a, K: Serialize> {
    program: &'static str,
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<K>,
    #[serde(flatten)]
    settings: &'a Settings,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<serde_json::Value>,
}

fn meta_line<K: Serialize>(command: &'static str, kind: Option<K>, s: &Settings, summary: Option<serde_json::Value>) -> String {
    let meta = Meta { program: "rayleigh", version: VERSION, command, kind, settings: s, summary };
    format!("# {}\n", serde_json::to_string(&meta).expect("settings serialize"))
}

/// Writes `header`, `rows` and the metadata line to `dir/name`.
fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>], meta: &str) -> Result<PathBuf, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let mut bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    bytes.extend_from_slice(meta.as_bytes());
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn out_dir(s: &Settings) -> Result<PathBuf, CliError> {
    let dir = s.out_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Variance { kind, opts } => cmd_variance(kind, opts.resolve()?),
        Command::Sweep { kind, opts } => cmd_sweep(kind, opts.resolve()?),
        Command::Converge { opts } => cmd_converge(opts.resolve()?),
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

pub fn cmd_variance(kind: VarianceKind, mut s: Settings) -> Result<(), CliError> {
    let cfg = s.experiment()?;
    let experiment = match kind {
        VarianceKind::Type1 => Experiment::Type1 { mass: positive("mass", *s.mass.get_or_insert(1.0))? },
        VarianceKind::Type2Fixed => {
            let c = s.strength.ok_or_else(|| CliError::Config("type2-fixed needs --strength".into()))?;
            Experiment::Type2Fixed { c: positive("strength", c)? }
        }
        VarianceKind::Type2Mixed => Experiment::Type2Mixed,
    };
    let dir = out_dir(&s)?;
    let est = estimate(experiment, &cfg, s.seed(), 0)?;
    let meta = meta_line("variance", Some(kind), &s, None);
    let c = &est.curve;
    let rows: Vec<Vec<String>> =
        (0..c.grid.len()).map(|k| vec![num(c.grid[k]), num(c.var[k]), num(c.sem[k]), c.n.to_string()]).collect();
    write_csv(&dir, "variance_curve.csv", &["t", "var", "sem", "n"], &rows, &meta)?;
    let e = est.summary;
    let row = vec![
        num(e.sigma2),
        num(e.stderr),
        num(e.t_start),
        num(e.horizon),
        cfg.samples.to_string(),
        cfg.replicates.to_string(),
    ];
    write_csv(&dir, "slope.csv", &["sigma2", "stderr", "t_start", "T", "N", "R"], &[row], &meta)?;
    println!("sigma2 = {} +- {} ({} x {} trajectories)", e.sigma2, e.stderr, cfg.replicates, cfg.samples);
    Ok(())
}

fn status(r: &Result<Estimate, Error>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => e.to_string(),
    }
}

pub fn cmd_sweep(kind: SweepKind, mut s: Settings) -> Result<(), CliError> {
    let cfg = s.experiment()?;
    let (rows, grid) = match kind {
        SweepKind::C => {
            let grid = s.c_grid.get_or_insert_with(|| DEFAULT_C_GRID.to_vec()).clone();
            check_grid("c", &grid)?;
            let dir = out_dir(&s)?;
            (sigma_c_sweep(&grid, &cfg, s.seed()), (grid, dir))
        }
        SweepKind::M => {
            let grid = s.m_grid.get_or_insert_with(|| DEFAULT_M_GRID.to_vec()).clone();
            check_grid("mass", &grid)?;
            let dir = out_dir(&s)?;
            (sigma_m_sweep(&grid, &cfg, s.seed()), (grid, dir))
        }
    };
    let (grid, dir) = grid;
    let meta = meta_line("sweep", Some(kind), &s, None);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| match &r.result {
            Ok(e) => vec![num(r.param), num(e.summary.sigma2), num(e.summary.stderr), status(&r.result)],
            Err(_) => vec![num(r.param), String::new(), String::new(), status(&r.result)],
        })
        .collect();
    write_csv(&dir, "sweep.csv", &["param", "sigma2", "stderr", "status"], &table, &meta)?;
    for r in &table {
        println!("{} = {}: {} +- {} [{}]", if kind == SweepKind::C { "c" } else { "M" }, r[0], r[1], r[2], r[3]);
    }
    if kind == SweepKind::C {
        write_mixed_quadrature(&dir, &grid, &rows, &meta)?;
    }
    match rows.into_iter().find_map(|r| r.result.err()) {
        Some(e) => Err(CliError::Run(e)),
        None => Ok(()),
    }
}

fn write_mixed_quadrature(dir: &Path, grid: &[f64], rows: &[SweepRow], meta: &str) -> Result<(), CliError> {
    let (below, above) = match quadrature_weights(grid) {
        Ok((_, b, a)) => (num(b), num(a)),
        Err(_) => (String::new(), String::new()),
    };
    let points: Option<Vec<_>> = rows.iter().map(|r| r.result.as_ref().ok().map(|e| (r.param, e.summary))).collect();
    let row = match points.map(|p| mixed_sigma_quadrature(&p)) {
        Some(Ok(q)) => {
            println!("mixed (quadrature) sigma2 = {} +- {}", q.sigma2, q.stderr);
            vec![num(q.sigma2), num(q.stderr), below, above, "ok".into()]
        }
        Some(Err(e)) => vec![String::new(), String::new(), below, above, e.to_string()],
        None => vec![String::new(), String::new(), below, above, "sweep has failed points".into()],
    };
    let header = ["sigma2", "stderr", "rho_mass_below", "rho_mass_above", "status"];
    write_csv(dir, "mixed_quadrature.csv", &header, &[row], meta)?;
    Ok(())
}

pub fn cmd_converge(mut s: Settings) -> Result<(), CliError> {
    let cfg = s.convergence()?;
    let dir = out_dir(&s)?;
    let study = convergence_study(&cfg, s.seed(), 0)?;
    let gm = study.geometric_mean_errors();
    let mut summary = serde_json::json!({
        "fraction_monotone": study.fraction_monotone(),
        "fraction_endpoint_decrease": study.fraction_endpoint_decrease(),
    });
    if cfg.masses.len() >= 2 {
        summary["rate_slope"] = serde_json::json!(study.rate_slope()?);
    }
    let meta = meta_line::<()>("converge", None, &s, Some(summary.clone()));
    let rows: Vec<Vec<String>> = cfg.masses.iter().zip(&gm).map(|(m, e)| vec![num(*m), num(*e)]).collect();
    write_csv(&dir, "convergence.csv", &["M", "sup_error"], &rows, &meta)?;
    let drift = study.max_wz_drift();
    let rows: Vec<Vec<String>> = cfg.masses.iter().zip(&drift).map(|(m, d)| vec![num(*m), num(*d)]).collect();
    write_csv(&dir, "wz_invariant.csv", &["M", "max_rel_dev"], &rows, &meta)?;
    for ((m, e), d) in cfg.masses.iter().zip(&gm).zip(&drift) {
        println!("M = {m}: sup error (geometric mean) {e:.4e}, worst |Wz| drift {d:.4e}");
    }
    println!("{summary}");
    Ok(())
}
