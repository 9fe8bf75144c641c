//! Brute-force fixed-step integrators used as oracles for the event-driven engines.
#![allow(dead_code)]

use rayleigh_core::engine_type1::collide_tagged;

/// Type I gas by fixed steps: every gas particle remembers on which side of
/// the tagged particle it lives; an overlap with closing velocity triggers
/// the collision law. Gas particles pass through each other.
///
/// Returns the tagged position and all positions (tagged included), sorted.
pub fn brute_type1(mass: f64, tagged: (f64, f64), gas: &[(f64, f64)], horizon: f64, dt: f64) -> (f64, Vec<f64>) {
    let (mut x0, mut v0) = tagged;
    let mut x: Vec<f64> = gas.iter().map(|p| p.0).collect();
    let mut v: Vec<f64> = gas.iter().map(|p| p.1).collect();
    let side: Vec<f64> = x.iter().map(|&xi| if xi > x0 { 1.0 } else { -1.0 }).collect();
    let steps = (horizon / dt).round() as u64;
    let h = horizon / steps as f64;
    for _ in 0..steps {
        x0 += v0 * h;
        for i in 0..x.len() {
            x[i] += v[i] * h;
        }
        // resolve in order of overlap depth so the deepest contact goes first
        loop {
            let hit = (0..x.len())
                .filter(|&i| side[i] * (x[i] - x0) < 0.0 && side[i] * (v[i] - v0) < 0.0)
                .max_by(|&a, &b| (side[a] * (x0 - x[a])).total_cmp(&(side[b] * (x0 - x[b]))));
            match hit {
                Some(i) => {
                    let (a, b) = collide_tagged(mass, v0, v[i]);
                    v0 = a;
                    v[i] = b;
                }
                None => break,
            }
        }
    }
    let mut all = x.clone();
    all.push(x0);
    all.sort_by(f64::total_cmp);
    (x0, all)
}

/// Type II gas by fixed steps: all particles are free except the two at
/// central ranks `n_left - 1` and `n_left`, which feel `c^2 / z^3` each
/// (so that `z'' = 2 c^2 / z^3`). Ranks are recomputed every step, which
/// plays the role of the swap rule. Velocity Verlet.
///
/// Returns the sorted `(position, velocity)` list.
pub fn brute_type2(c: f64, particles: &[(f64, f64)], n_left: usize, horizon: f64, dt: f64) -> Vec<(f64, f64)> {
    let mut p: Vec<(f64, f64)> = particles.to_vec();
    let n = p.len();
    let steps = (horizon / dt).round() as u64;
    let h = horizon / steps as f64;
    let forces = |p: &[(f64, f64)]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| p[a].0.total_cmp(&p[b].0));
        let (l, r) = (idx[n_left - 1], idx[n_left]);
        let z = p[r].0 - p[l].0;
        let f = c * c / (z * z * z);
        let mut a = vec![0.0; n];
        a[r] = f;
        a[l] = -f;
        a
    };
    let mut acc = forces(&p);
    for _ in 0..steps {
        for i in 0..n {
            p[i].1 += 0.5 * h * acc[i];
            p[i].0 += h * p[i].1;
        }
        acc = forces(&p);
        for i in 0..n {
            p[i].1 += 0.5 * h * acc[i];
        }
    }
    p.sort_by(|a, b| a.0.total_cmp(&b.0));
    p
}

/// Pearson chi-square p-value of `samples` against a continuous law given
/// by its quantile function, using `bins` equiprobable bins.
pub fn chi2_pvalue(samples: &[f64], inv_cdf: impl Fn(f64) -> f64, bins: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let edges: Vec<f64> = (1..bins).map(|k| inv_cdf(k as f64 / bins as f64)).collect();
    let mut counts = vec![0u64; bins];
    for &s in samples {
        counts[edges.partition_point(|&e| e < s)] += 1;
    }
    let expect = samples.len() as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&o| (o as f64 - expect).powi(2) / expect).sum();
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

/// Inverts a monotone CDF by bisection on `[lo, hi]`.
pub fn invert_cdf<F: Fn(f64) -> f64>(cdf: F, p: f64, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if cdf(m) < p {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
