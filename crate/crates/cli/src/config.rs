//! Run settings from flags and an optional TOML file. Flags win.

use std::path::{Path, PathBuf};

use clap::Args;
use rayleigh_core::convergence::ConvergenceConfig;
use rayleigh_core::engine_type1::DEFAULT_EVENT_CAP;
use rayleigh_core::estimator::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Strengths swept by default: dense where `rho` has its mass, wide enough
/// that the mixed quadrature leaves less than 1e-3 of it uncovered.
pub const DEFAULT_C_GRID: [f64; 16] =
    [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0];
pub const DEFAULT_M_GRID: [f64; 7] = [0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0];
pub const DEFAULT_CONVERGE_MASSES: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Every tunable. `None` means "use the default for this command".
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Master seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Trajectories per replicate run.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    /// Time horizon T.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Observation grid step.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    /// Initial window half-width as a multiple of T.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_factor: Option<f64>,
    /// Tail fit starts at this fraction of T.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_start: Option<f64>,
    /// Independent replicate runs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u32>,
    /// Tagged particle mass (variance type1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    /// Interaction strength c (variance type2-fixed).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    /// Comma-separated strengths for `sweep c`.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_grid: Option<Vec<f64>>,
    /// Comma-separated masses for `sweep m` and `converge`.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_grid: Option<Vec<f64>>,
    /// Per-trajectory event budget.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_cap: Option<u64>,
    /// Random initial data draws (converge).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<u64>,
    /// Particles compared per side (converge).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub track: Option<usize>,
    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay!(base, top; seed, samples, horizon, grid_step, window_factor, fit_start, replicates, mass,
                 strength, c_grid, m_grid, event_cap, draws, track, out)
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Fills the experiment defaults in place so the metadata line records them.
    pub fn experiment(&mut self) -> Result<ExperimentConfig, CliError> {
        let d = ExperimentConfig::default();
        let cfg = ExperimentConfig {
            samples: *self.samples.get_or_insert(d.samples),
            horizon: *self.horizon.get_or_insert(d.horizon),
            grid_step: *self.grid_step.get_or_insert(d.grid_step),
            window_factor: *self.window_factor.get_or_insert(d.window_factor),
            fit_start: *self.fit_start.get_or_insert(d.fit_start),
            replicates: *self.replicates.get_or_insert(d.replicates),
            event_cap: *self.event_cap.get_or_insert(d.event_cap),
        };
        self.seed.get_or_insert(1);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn convergence(&mut self) -> Result<ConvergenceConfig, CliError> {
        let d = ConvergenceConfig::default();
        let masses = self.m_grid.get_or_insert_with(|| DEFAULT_CONVERGE_MASSES.to_vec()).clone();
        let mut rev = masses.clone();
        rev.reverse();
        // the study reads the list from heavy to light
        check_grid("mass", &rev).map_err(|_| CliError::Config(format!("mass list must be positive and strictly decreasing: {masses:?}")))?;
        let cfg = ConvergenceConfig {
            masses,
            horizon: *self.horizon.get_or_insert(d.horizon),
            grid_step: *self.grid_step.get_or_insert(d.grid_step),
            track: *self.track.get_or_insert(d.track),
            draws: *self.draws.get_or_insert(d.draws),
            window_factor: *self.window_factor.get_or_insert(d.window_factor),
            event_cap: *self.event_cap.get_or_insert(DEFAULT_EVENT_CAP),
        };
        self.seed.get_or_insert(1);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Sweep grids must be non-empty, positive, finite and strictly increasing.
pub fn check_grid(name: &str, grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(CliError::Config(format!("{name} grid is empty")));
    }
    if grid.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(CliError::Config(format!("{name} grid values must be positive and finite: {grid:?}")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(format!("{name} grid must be strictly increasing: {grid:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: Settings = toml::from_str("seed = 4\nsamples = 100\nc_grid = [0.1, 1.0]\n").unwrap();
        let flags = Settings { samples: Some(7), ..Default::default() };
        let s = file.overlay(flags);
        assert_eq!(s.seed, Some(4));
        assert_eq!(s.samples, Some(7));
        assert_eq!(s.c_grid, Some(vec![0.1, 1.0]));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Settings>("sampels = 3\n").is_err());
    }

    #[test]
    fn grids_are_checked() {
        assert!(check_grid("c", &[]).is_err());
        assert!(check_grid("c", &[1.0, 0.5]).is_err());
        assert!(check_grid("c", &[0.0, 1.0]).is_err());
        assert!(check_grid("c", &[0.1, 1.0]).is_ok());
    }

    #[test]
    fn defaults_are_recorded() {
        let mut s = Settings::default();
        let cfg = s.experiment().unwrap();
        assert_eq!(s.samples, Some(cfg.samples));
        assert_eq!(s.seed, Some(1));
        assert_eq!(s.replicates, Some(20));
    }
}
