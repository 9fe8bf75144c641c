//! Ensemble variance of the displacement, tail-slope fits, replicate error
//! bars, parameter sweeps and the two estimates of the mixed variance.
//!
//! Each run splits its samples into contiguous batches. Batches are
//! simulated independently (in parallel with the `parallel` feature) and
//! merged in index order, so results depend only on the master seed.

use crate::engine_type1::{run_type1, EngineOptions, DEFAULT_EVENT_CAP};
use crate::engine_type2::run_type2;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity};
use crate::rng::{stream_index, RngStream};
use crate::sampling::{rho_density, sample_type1_state, sample_type2_state_mixed, sample_type2_state_with, PhiSampler};
use crate::trajectory::{time_grid, TrajectoryRecord};

/// Batches per run; their spread gives the per-run standard error.
pub const BATCHES: usize = 16;

/// Constants of the four-parameter fit to `c -> sigma^2_c`.
pub const FIT_A1: f64 = 0.796;
pub const FIT_A2: f64 = 0.638;
pub const FIT_C0: f64 = 1.981;
pub const FIT_P: f64 = 0.792;

/// Largest `rho` mass allowed outside a swept `c` range.
pub const MAX_UNCOVERED_MASS: f64 = 1e-3;

/// `(A1 - A2) / (1 + (c / c0)^p) + A2`.
pub fn sigma_c_fit_eval(c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::Domain { what: "c", value: c });
    }
    if c.is_infinite() {
        return Ok(FIT_A2);
    }
    Ok((FIT_A1 - FIT_A2) / (1.0 + (c / FIT_C0).powf(FIT_P)) + FIT_A2)
}

/// Running power sums of the displacement at every grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    pub grid: Vec<f64>,
    pub n: u64,
    s1: Vec<f64>,
    s2: Vec<f64>,
    s3: Vec<f64>,
    s4: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(grid: Vec<f64>) -> Self {
        let m = grid.len();
        MomentAccumulator { grid, n: 0, s1: vec![0.0; m], s2: vec![0.0; m], s3: vec![0.0; m], s4: vec![0.0; m] }
    }

    pub fn add(&mut self, q: &[f64]) -> Result<()> {
        if q.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        for (k, &x) in q.iter().enumerate() {
            let x2 = x * x;
            self.s1[k] += x;
            self.s2[k] += x2;
            self.s3[k] += x2 * x;
            self.s4[k] += x2 * x2;
        }
        self.n += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if other.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        for k in 0..self.grid.len() {
            self.s1[k] += other.s1[k];
            self.s2[k] += other.s2[k];
            self.s3[k] += other.s3[k];
            self.s4[k] += other.s4[k];
        }
        self.n += other.n;
        Ok(())
    }

    /// Unbiased variance and its standard error at every grid time.
    pub fn variance(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.n < 2 {
            return Err(Error::InsufficientData(format!("{} samples, need at least 2", self.n)));
        }
        let n = self.n as f64;
        let mut var = Vec::with_capacity(self.grid.len());
        let mut sem = Vec::with_capacity(self.grid.len());
        for k in 0..self.grid.len() {
            let mean = self.s1[k] / n;
            let m2 = (self.s2[k] / n - mean * mean).max(0.0);
            let m4 = self.s4[k] / n - 4.0 * mean * self.s3[k] / n + 6.0 * mean * mean * self.s2[k] / n
                - 3.0 * mean.powi(4);
            let s2 = m2 * n / (n - 1.0);
            // Var(s^2) = (mu4 - (n - 3) / (n - 1) sigma^4) / n
            let v = (m4.max(0.0) - (n - 3.0) / (n - 1.0) * s2 * s2) / n;
            var.push(s2);
            sem.push(v.max(0.0).sqrt());
        }
        Ok((var, sem))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceCurve {
    pub grid: Vec<f64>,
    pub var: Vec<f64>,
    pub sem: Vec<f64>,
    pub n: u64,
    /// The same curve computed within each batch, when the samples were batched.
    pub batch_var: Vec<Vec<f64>>,
}

impl VarianceCurve {
    /// Pools batches into one curve, keeping the per-batch curves.
    pub fn from_batches(batches: &[MomentAccumulator]) -> Result<Self> {
        let first = batches.first().ok_or_else(|| Error::InsufficientData("no batches".into()))?;
        let mut total = MomentAccumulator::new(first.grid.clone());
        for b in batches {
            total.merge(b)?;
        }
        let (var, sem) = total.variance()?;
        let batch_var = if batches.len() >= 2 && batches.iter().all(|b| b.n >= 2) {
            batches.iter().map(|b| b.variance().map(|v| v.0)).collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(VarianceCurve { grid: total.grid, var, sem, n: total.n, batch_var })
    }
}

/// Variance of `q` across `records`, with the empirical mean subtracted.
pub fn variance_curve(records: &[TrajectoryRecord]) -> Result<VarianceCurve> {
    let first = records.first().ok_or_else(|| Error::InsufficientData("no records".into()))?;
    let mut acc = MomentAccumulator::new(first.grid.clone());
    for r in records {
        if r.grid != acc.grid {
            return Err(Error::GridMismatch);
        }
        acc.add(&r.q)?;
    }
    VarianceCurve::from_batches(std::slice::from_ref(&acc))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEstimate {
    pub sigma2: f64,
    pub stderr: f64,
    pub t_start: f64,
    pub horizon: f64,
}

/// Least-squares slope and intercept of `y` against `x`.
pub(crate) fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Ordinary least squares of the variance on `[t_start, T]`.
///
/// The standard error comes from the spread of the same fit over the
/// batch curves. Without batches it falls back to the regression residuals,
/// which ignore the strong correlation between neighbouring grid points.
pub fn fit_tail_slope(curve: &VarianceCurve, t_start: f64) -> Result<SlopeEstimate> {
    let horizon = *curve.grid.last().ok_or_else(|| Error::InsufficientData("empty curve".into()))?;
    let lo = curve.grid.partition_point(|&t| t < t_start - 1e-9 * horizon);
    let x = &curve.grid[lo..];
    if !(t_start > 0.0 && t_start < horizon) || x.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "need at least 5 grid points in [{t_start}, {horizon}], have {}",
            x.len()
        )));
    }
    let y = &curve.var[lo..];
    let (slope, intercept) = ols(x, y);
    let stderr = if curve.batch_var.len() >= 2 {
        let slopes: Vec<f64> = curve.batch_var.iter().map(|b| ols(x, &b[lo..]).0).collect();
        mean_sd(&slopes).1 / (slopes.len() as f64).sqrt()
    } else {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    };
    Ok(SlopeEstimate { sigma2: slope, stderr, t_start, horizon })
}

/// Mean and standard deviation of `r` independent slope estimates; the
/// standard deviation is reported as the error of a single run.
pub fn replicate_error<F>(experiment: F, r: u32) -> Result<SlopeEstimate>
where
    F: Fn(u32) -> Result<SlopeEstimate>,
{
    if r < 2 {
        return Err(Error::Config(format!("need at least 2 replicates, got {r}")));
    }
    let runs = (0..r).map(&experiment).collect::<Result<Vec<_>>>()?;
    Ok(summarize(&runs))
}

fn summarize(runs: &[SlopeEstimate]) -> SlopeEstimate {
    let slopes: Vec<f64> = runs.iter().map(|s| s.sigma2).collect();
    let (sigma2, stderr) = mean_sd(&slopes);
    SlopeEstimate { sigma2, stderr, t_start: runs[0].t_start, horizon: runs[0].horizon }
}

/// Which process a run simulates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Experiment {
    Type1 { mass: f64 },
    Type2Fixed { c: f64 },
    Type2Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    /// Trajectories per run.
    pub samples: u64,
    pub horizon: f64,
    pub grid_step: f64,
    /// Initial configurations extend `window_factor * horizon` to each side.
    pub window_factor: f64,
    /// Tail fit starts at `fit_start * horizon`.
    pub fit_start: f64,
    pub replicates: u32,
    pub event_cap: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            samples: 100_000,
            horizon: 20.0,
            grid_step: 0.1,
            window_factor: 10.0,
            fit_start: 0.5,
            replicates: 20,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.samples < 2 {
            return bad(format!("samples must be at least 2, got {}", self.samples));
        }
        if self.samples > 1 << 32 {
            return bad(format!("samples must be below 2^32, got {}", self.samples));
        }
        time_grid(self.horizon, self.grid_step)?;
        if !(self.window_factor.is_finite() && self.window_factor > 0.0) {
            return bad(format!("window factor must be positive, got {}", self.window_factor));
        }
        if !(self.fit_start > 0.0 && self.fit_start < 1.0) {
            return bad(format!("fit start must lie in (0, 1), got {}", self.fit_start));
        }
        if self.replicates < 1 || self.replicates >= 1 << 16 {
            return bad(format!("replicates must lie in [1, 65535], got {}", self.replicates));
        }
        if self.event_cap == 0 {
            return bad("event cap must be positive".into());
        }
        Ok(())
    }

    pub fn window(&self) -> f64 {
        self.window_factor * self.horizon
    }

    pub fn t_start(&self) -> f64 {
        self.fit_start * self.horizon
    }

    fn batches(&self) -> usize {
        BATCHES.min((self.samples / 2) as usize).max(1)
    }
}

#[cfg(feature = "parallel")]
pub(crate) fn map_indices<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Simulates one run (`cfg.samples` trajectories) and returns its batches.
///
/// Trajectory `i` draws from stream `(point, replicate, i)`.
pub fn run_batches(
    kind: Experiment,
    cfg: &ExperimentConfig,
    seed: u64,
    point: u32,
    replicate: u32,
) -> Result<Vec<MomentAccumulator>> {
    cfg.validate()?;
    let grid = time_grid(cfg.horizon, cfg.grid_step)?;
    let opts = EngineOptions { event_cap: cfg.event_cap, ..Default::default() };
    let sampler = match kind {
        Experiment::Type2Fixed { c } => Some(PhiSampler::new(c)?),
        Experiment::Type1 { mass } if !(mass.is_finite() && mass > 0.0) => {
            return Err(Error::Domain { what: "mass", value: mass })
        }
        _ => None,
    };
    let window = cfg.window();
    let one = |i: u64| -> Result<TrajectoryRecord> {
        let mut rng = RngStream::new(seed, stream_index(point, replicate, i));
        match kind {
            Experiment::Type1 { mass } => run_type1(sample_type1_state(&mut rng, mass, window)?, cfg.horizon, cfg.grid_step, &opts),
            Experiment::Type2Fixed { .. } => {
                let s = sample_type2_state_with(&mut rng, sampler.as_ref().expect("sampler"), window)?;
                run_type2(s, cfg.horizon, cfg.grid_step, &opts)
            }
            Experiment::Type2Mixed => run_type2(sample_type2_state_mixed(&mut rng, window)?.0, cfg.horizon, cfg.grid_step, &opts),
        }
    };
    let b = cfg.batches() as u64;
    let n = cfg.samples;
    map_indices(b as usize, |k| {
        let (lo, hi) = (n * k as u64 / b, n * (k as u64 + 1) / b);
        let mut acc = MomentAccumulator::new(grid.clone());
        for i in lo..hi {
            acc.add(&one(i)?.q)?;
        }
        Ok(acc)
    })
    .into_iter()
    .collect()
}

/// Fit-start fractions reported alongside every estimate.
pub const SENSITIVITY_FRACTIONS: [f64; 3] = [0.4, 0.5, 0.6];

/// Result of the full protocol at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Replicate mean and standard deviation of the slope.
    pub summary: SlopeEstimate,
    pub replicates: Vec<SlopeEstimate>,
    /// Variance curve pooled over every replicate.
    pub curve: VarianceCurve,
    /// Summaries refitted from `0.4 T`, `0.5 T` and `0.6 T`.
    pub sensitivity: Vec<SlopeEstimate>,
}

impl Estimate {
    /// Mean of the per-run (batch) standard errors.
    pub fn mean_run_stderr(&self) -> f64 {
        self.replicates.iter().map(|s| s.stderr).sum::<f64>() / self.replicates.len() as f64
    }
}

/// Runs `cfg.replicates` independent runs of `kind` and fits each tail.
pub fn estimate(kind: Experiment, cfg: &ExperimentConfig, seed: u64, point: u32) -> Result<Estimate> {
    cfg.validate()?;
    let mut pooled: Vec<MomentAccumulator> = Vec::new();
    let mut curves = Vec::with_capacity(cfg.replicates as usize);
    for r in 0..cfg.replicates {
        let batches = run_batches(kind, cfg, seed, point, r)?;
        curves.push(VarianceCurve::from_batches(&batches)?);
        pooled.extend(batches);
    }
    let fit_all = |t_start: f64| -> Result<Vec<SlopeEstimate>> { curves.iter().map(|c| fit_tail_slope(c, t_start)).collect() };
    let replicates = fit_all(cfg.t_start())?;
    let summary = if replicates.len() >= 2 {
        summarize(&replicates)
    } else {
        replicates[0]
    };
    let sensitivity = SENSITIVITY_FRACTIONS
        .iter()
        .map(|f| {
            let runs = fit_all(f * cfg.horizon)?;
            Ok(if runs.len() >= 2 { summarize(&runs) } else { runs[0] })
        })
        .collect::<Result<_>>()?;
    let mut total = MomentAccumulator::new(pooled[0].grid.clone());
    for b in &pooled {
        total.merge(b)?;
    }
    let (var, sem) = total.variance()?;
    let curve = VarianceCurve { grid: total.grid, var, sem, n: total.n, batch_var: Vec::new() };
    Ok(Estimate { summary, replicates, curve, sensitivity })
}

/// One row of a parameter sweep; failures are kept in the row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub result: Result<Estimate>,
}

/// `sigma^2_c` at each strength; point `k` uses stream block `k`.
pub fn sigma_c_sweep(c_values: &[f64], cfg: &ExperimentConfig, seed: u64) -> Vec<SweepRow> {
    sweep(c_values, "c", cfg, seed, |c| Experiment::Type2Fixed { c })
}

/// `sigma^2_M` at each mass.
pub fn sigma_m_sweep(m_values: &[f64], cfg: &ExperimentConfig, seed: u64) -> Vec<SweepRow> {
    sweep(m_values, "M", cfg, seed, |mass| Experiment::Type1 { mass })
}

fn sweep(values: &[f64], name: &'static str, cfg: &ExperimentConfig, seed: u64, kind: impl Fn(f64) -> Experiment) -> Vec<SweepRow> {
    values
        .iter()
        .enumerate()
        .map(|(k, &p)| SweepRow { param: p, result: estimate(kind(p), cfg, seed, k as u32).map_err(|e| e.at(name, p)) })
        .collect()
}

/// Direct estimate: every trajectory draws its own `c = |W z|`.
pub fn mixed_sigma_direct(cfg: &ExperimentConfig, seed: u64, point: u32) -> Result<Estimate> {
    estimate(Experiment::Type2Mixed, cfg, seed, point)
}

/// `int_a^b f(c) rho(c) dc`.
fn rho_weighted<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    let g = |c: f64| f(c) * rho_density(c).unwrap_or(0.0);
    Ok(integrate(g, a, b, 1e-9, 1e-13)?.value)
}

/// Weights `w_i` such that `sum w_i s_i` integrates against `rho` the
/// curve interpolating `s_i` linearly in `ln c`, extended as the constant
/// `s_0` below the first point. Also returns the `rho` mass below the first
/// point (already folded into `w_0`) and above the last.
pub fn quadrature_weights(c: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if c.len() < 2 || c[0] <= 0.0 || c.windows(2).any(|w| !(w[1] > w[0])) || !c[c.len() - 1].is_finite() {
        return Err(Error::InsufficientData("need at least two positive, increasing strengths".into()));
    }
    let mut w = vec![0.0; c.len()];
    let below = rho_weighted(|_| 1.0, 0.0, c[0])?;
    w[0] = below;
    for i in 0..c.len() - 1 {
        let (a, b) = (c[i], c[i + 1]);
        let span = (b / a).ln();
        w[i] += rho_weighted(|x| (b / x).ln() / span, a, b)?;
        w[i + 1] += rho_weighted(|x| (x / a).ln() / span, a, b)?;
    }
    let tail = integrate_to_infinity(|x| rho_density(x).unwrap_or(0.0), c[c.len() - 1], 1e-9, 1e-14)?.value;
    Ok((w, below, tail))
}

/// `sigma^2_mix = int sigma^2_c rho(c) dc` from a sweep sorted by `c`.
///
/// Between swept points the curve is interpolated linearly in `ln c`; below
/// the first point it is held constant and beyond the last it follows the
/// four-parameter fit. The error assumes independent sweep points.
pub fn mixed_sigma_quadrature(sweep: &[(f64, SlopeEstimate)]) -> Result<SlopeEstimate> {
    let c: Vec<f64> = sweep.iter().map(|p| p.0).collect();
    let (w, below, tail_mass) = quadrature_weights(&c)?;
    if below + tail_mass > MAX_UNCOVERED_MASS {
        return Err(Error::InsufficientData(format!(
            "sweep leaves rho mass {:.2e} uncovered (limit {MAX_UNCOVERED_MASS:.0e})",
            below + tail_mass
        )));
    }
    let last = c[c.len() - 1];
    let tail = integrate_to_infinity(
        |x| sigma_c_fit_eval(x).unwrap_or(FIT_A2) * rho_density(x).unwrap_or(0.0),
        last,
        1e-9,
        1e-14,
    )?
    .value;
    let sigma2 = w.iter().zip(sweep).map(|(wi, p)| wi * p.1.sigma2).sum::<f64>() + tail;
    let stderr = w.iter().zip(sweep).map(|(wi, p)| (wi * p.1.stderr).powi(2)).sum::<f64>().sqrt();
    Ok(SlopeEstimate { sigma2, stderr, t_start: sweep[0].1.t_start, horizon: sweep[0].1.horizon })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve_of(grid: Vec<f64>, var: Vec<f64>) -> VarianceCurve {
        let n = grid.len();
        VarianceCurve { grid, var, sem: vec![0.0; n], n: 100, batch_var: Vec::new() }
    }

    fn record(grid: &[f64], q: Vec<f64>) -> TrajectoryRecord {
        TrajectoryRecord { grid: grid.to_vec(), q, q_tilde: None, wz: None, snapshots: None, events: 0 }
    }

    #[test]
    fn fit_formula_landmarks() {
        assert!((sigma_c_fit_eval(0.0).unwrap() - 0.796).abs() < 1e-15);
        assert!((sigma_c_fit_eval(f64::INFINITY).unwrap() - 0.638).abs() < 1e-15);
        assert!((sigma_c_fit_eval(1e12).unwrap() - 0.638).abs() < 1e-6);
        assert!((sigma_c_fit_eval(FIT_C0).unwrap() - 0.717).abs() < 1e-12);
        assert!(sigma_c_fit_eval(-1.0).is_err());
    }

    #[test]
    fn identical_records_have_zero_variance() {
        let grid = [0.0, 1.0, 2.0];
        let recs: Vec<_> = (0..5).map(|_| record(&grid, vec![0.0, 0.3, -1.0])).collect();
        let c = variance_curve(&recs).unwrap();
        assert!(c.var.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(c.n, 5);
    }

    #[test]
    fn two_point_distribution() {
        let grid: Vec<f64> = (0..5).map(f64::from).collect();
        let n = 6;
        let recs: Vec<_> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                record(&grid, grid.iter().map(|t| s * t).collect())
            })
            .collect();
        let c = variance_curve(&recs).unwrap();
        for (t, v) in grid.iter().zip(&c.var) {
            assert!((v - t * t * n as f64 / (n as f64 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = record(&[0.0, 1.0], vec![0.0, 1.0]);
        let b = record(&[0.0, 2.0], vec![0.0, 1.0]);
        assert_eq!(variance_curve(&[a, b]), Err(Error::GridMismatch));
    }

    #[test]
    fn ols_recovers_lines() {
        let grid: Vec<f64> = (0..=200).map(|k| k as f64 * 0.1).collect();
        let line = curve_of(grid.clone(), grid.iter().map(|t| 0.1 + 0.8 * t).collect());
        let s = fit_tail_slope(&line, 10.0).unwrap();
        assert!((s.sigma2 - 0.8).abs() < 1e-12);
        assert!(s.stderr < 1e-10);
        let flat = curve_of(grid.clone(), vec![3.0; grid.len()]);
        assert!(fit_tail_slope(&flat, 10.0).unwrap().sigma2.abs() < 1e-12);
    }

    #[test]
    fn fit_needs_five_points() {
        let grid: Vec<f64> = (0..=10).map(f64::from).collect();
        let c = curve_of(grid.clone(), grid.clone());
        assert!(fit_tail_slope(&c, 7.0).is_err());
        assert!(fit_tail_slope(&c, 6.0).is_ok());
        assert!(fit_tail_slope(&c, 10.0).is_err());
    }

    #[test]
    fn replicate_error_of_constant_experiment() {
        let one = SlopeEstimate { sigma2: 0.7, stderr: 0.01, t_start: 10.0, horizon: 20.0 };
        let s = replicate_error(|_| Ok(one), 20).unwrap();
        assert!((s.sigma2 - 0.7).abs() < 1e-15);
        assert!(s.stderr < 1e-15);
        assert!(replicate_error(|_| Ok(one), 1).is_err());
    }

    #[test]
    fn constant_curve_integrates_to_itself() {
        let c = [1e-4, 0.01, 0.1, 1.0, 10.0, 100.0, 400.0];
        let (w, _, tail) = quadrature_weights(&c).unwrap();
        assert!((w.iter().sum::<f64>() + tail - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fit_input_reproduces_mixture() {
        // sigma^2_c from the fit, on a dense grid, integrates to about 0.74
        let c: Vec<f64> = (0..=60).map(|k| 1e-4 * 10f64.powf(k as f64 / 10.0)).collect();
        let sweep: Vec<_> = c
            .iter()
            .map(|&x| (x, SlopeEstimate { sigma2: sigma_c_fit_eval(x).unwrap(), stderr: 0.003, t_start: 10.0, horizon: 20.0 }))
            .collect();
        let m = mixed_sigma_quadrature(&sweep).unwrap();
        assert!((m.sigma2 - 0.74).abs() < 0.005, "{}", m.sigma2);
        assert!(m.stderr > 0.0 && m.stderr < 0.003);
    }

    #[test]
    fn coarse_coverage_rejected() {
        let s = SlopeEstimate { sigma2: 0.7, stderr: 0.0, t_start: 1.0, horizon: 2.0 };
        assert!(matches!(mixed_sigma_quadrature(&[(0.1, s), (100.0, s)]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = [
            ExperimentConfig { grid_step: 0.0, ..Default::default() },
            ExperimentConfig { samples: 1, ..Default::default() },
            ExperimentConfig { fit_start: 1.0, ..Default::default() },
            ExperimentConfig { window_factor: -1.0, ..Default::default() },
            ExperimentConfig { replicates: 0, ..Default::default() },
        ];
        for b in bad {
            assert!(matches!(b.validate(), Err(Error::Config(_))), "{b:?}");
        }
    }

    #[test]
    fn small_run_is_reproducible() {
        let cfg = ExperimentConfig { samples: 40, horizon: 2.0, grid_step: 0.1, replicates: 2, ..Default::default() };
        let a = estimate(Experiment::Type2Mixed, &cfg, 7, 0).unwrap();
        let b = estimate(Experiment::Type2Mixed, &cfg, 7, 0).unwrap();
        assert_eq!(a, b);
        assert!(a.summary.sigma2.is_finite());
        let c = estimate(Experiment::Type2Mixed, &cfg, 8, 0).unwrap();
        assert_ne!(a.summary.sigma2, c.summary.sigma2);
    }

    #[test]
    fn degenerate_two_sample_run() {
        let cfg = ExperimentConfig { samples: 2, horizon: 1.0, grid_step: 0.1, replicates: 2, ..Default::default() };
        let e = mixed_sigma_direct(&cfg, 1, 0).unwrap();
        assert!(e.summary.sigma2.is_finite() && e.summary.stderr.is_finite());
    }
}
