//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every function returns a JSON string; the page parses it and draws on a
//! canvas. Failures come back as `{"error": "..."}` so the page can show them.

use rayleigh_core::convergence::{compare_trajectories, MatchedInitialData};
use rayleigh_core::estimator::{fit_tail_slope, run_batches, Experiment, ExperimentConfig, VarianceCurve};
use rayleigh_core::rng::RngStream;
use rayleigh_core::sampling::{phi_c_density, PhiSampler};
use rayleigh_core::{Result, SIGMA2_LOWER, SIGMA2_UPPER};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Empirical `Var(Q_t)` and its tail slope from one run.
///
/// `kind` is `type1` (param = mass), `type2` (param = c) or `mixed`.
#[wasm_bindgen]
pub fn variance_curve(kind: &str, param: f64, samples: u32, horizon: f64, seed: u64) -> String {
    let experiment = match kind {
        "type1" => Experiment::Type1 { mass: param },
        "type2" => Experiment::Type2Fixed { c: param },
        "mixed" => Experiment::Type2Mixed,
        other => return json!({ "error": format!("unknown kind {other}") }).to_string(),
    };
    respond((|| {
        let cfg = ExperimentConfig {
            samples: samples as u64,
            horizon,
            grid_step: horizon / 100.0,
            replicates: 1,
            ..Default::default()
        };
        let batches = run_batches(experiment, &cfg, seed, 0, 0)?;
        let curve = VarianceCurve::from_batches(&batches)?;
        let fit = fit_tail_slope(&curve, cfg.t_start())?;
        Ok(json!({
            "t": curve.grid,
            "var": curve.var,
            "sem": curve.sem,
            "sigma2": fit.sigma2,
            "stderr": fit.stderr,
            "t_start": fit.t_start,
            "bounds": [SIGMA2_LOWER, SIGMA2_UPPER],
        }))
    })())
}

/// Histogram of `n` draws of the pair separation at strength `c`, next to
/// its density at the bin centres.
#[wasm_bindgen]
pub fn separation_histogram(c: f64, n: u32, bins: u32, seed: u64) -> String {
    respond((|| {
        let sampler = PhiSampler::new(c)?;
        let mut rng = RngStream::new(seed, 0);
        let draws: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect::<Result<_>>()?;
        let bins = bins.max(1) as usize;
        let hi = draws.iter().cloned().fold(0.0, f64::max).min(c + 15.0).max(1e-9);
        let width = hi / bins as f64;
        let mut counts = vec![0u64; bins];
        for z in &draws {
            let k = (z / width) as usize;
            if k < bins {
                counts[k] += 1;
            }
        }
        let centres: Vec<f64> = (0..bins).map(|k| (k as f64 + 0.5) * width).collect();
        let empirical: Vec<f64> = counts.iter().map(|&k| k as f64 / (n.max(1) as f64 * width)).collect();
        let density: Vec<f64> = centres.iter().map(|&z| phi_c_density(c, z)).collect::<Result<_>>()?;
        Ok(json!({ "z": centres, "empirical": empirical, "density": density }))
    })())
}

/// Sup distance between the light-particle system and the pair system from
/// one matched draw, for each mass in `masses` (comma separated).
#[wasm_bindgen]
pub fn convergence_errors(masses: &str, horizon: f64, seed: u64) -> String {
    respond((|| {
        let masses: Vec<f64> = masses
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| rayleigh_core::Error::Config(format!("bad mass list: {e}")))?;
        let mut rng = RngStream::new(seed, 0);
        let data = MatchedInitialData::sample(&mut rng, 10.0 * horizon)?;
        let points = compare_trajectories(&data, &masses, horizon, horizon / 100.0, 3, 10_000_000)?;
        Ok(json!({
            "c": data.c(),
            "w": data.w,
            "z": data.z,
            "mass": masses,
            "sup_error": points.iter().map(|p| p.sup_error).collect::<Vec<_>>(),
            "wz_drift": points.iter().map(|p| p.wz_drift).collect::<Vec<_>>(),
        }))
    })())
}
