//! Equilibrium densities and samplers for the stationary Gibbs measures.
//!
//! Both half-lines carry i.i.d. `Exp(1)` gaps and standard normal velocities.
//! The gap `z` between the two particles adjacent to the centre is `Γ(2)`
//! (Type I, and the mixed Type II measure) or `φ_c` (Type II at fixed `c`).


use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::engine_type1::TypeIState;
use crate::engine_type2::TypeIIState;
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::rng::RngStream;
use crate::trajectory::Side;

/// `sqrt(2 / pi)`, also `rho(0)`.
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

const DENSITY_REL_TOL: f64 = 1e-10;
/// Above this strength the rejection sampler is replaced by a CDF table.
pub const PHI_TABLE_THRESHOLD: f64 = 5.0;
pub const MAX_REJECTION_ATTEMPTS: u64 = 1_000_000;
const PHI_TABLE_CELLS: usize = 4096;
/// Log-density drop below the mode at which the integration range is cut.
const LOG_TAIL_CUT: f64 = 40.0;

/// One side of the gas seen from its innermost particle.
///
/// `particles[0]` sits at offset 0; offsets then grow away from the centre
/// (positive on the right, negative on the left). When `sentinel` is set the
/// last particle lies beyond the sampling window and marks the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineConfig {
    pub side: Side,
    pub particles: Vec<(f64, f64)>,
    pub sentinel: bool,
}

impl HalfLineConfig {
    /// A finite configuration with no truncation sentinel.
    pub fn finite(side: Side, particles: Vec<(f64, f64)>) -> Self {
        HalfLineConfig { side, particles, sentinel: false }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Checks that offsets start at 0 and move monotonically outward.
    pub fn is_valid(&self) -> bool {
        let s = self.side.sign();
        match self.particles.first() {
            None => true,
            Some(&(x0, _)) => {
                x0 == 0.0 && self.particles.windows(2).all(|w| s * (w[1].0 - w[0].0) >= 0.0)
            }
        }
    }
}

fn check_positive(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

fn check_nonnegative(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

/// `z e^{-z}`.
pub fn gamma2_density(z: f64) -> Result<f64> {
    check_positive("z", z)?;
    Ok(z * (-z).exp())
}

#[inline]
fn phi_kernel(c: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return if c == 0.0 { 1.0 } else { 0.0 };
    }
    (-z - 0.5 * c * c / (z * z)).exp()
}

/// Mode of `exp(-z - c^2/(2 z^2))`.
#[inline]
fn phi_mode(c: f64) -> f64 {
    c.powf(2.0 / 3.0)
}

/// Density of `|W ζ|` with `W` standard normal and `ζ ~ Γ(2)`:
/// `sqrt(2/pi) ∫_0^∞ exp(-z - c^2/(2 z^2)) dz`.
pub fn rho_density(c: f64) -> Result<f64> {
    check_nonnegative("c", c)?;
    let mode = phi_mode(c);
    // beyond 1.5*mode the integrand is below e^{-z}, and the peak is e^{-1.5 mode}
    let z_max = 1.5 * mode + LOG_TAIL_CUT;
    let f = |z: f64| phi_kernel(c, z);
    let mut total = 0.0;
    let pieces: &[(f64, f64)] = if mode > 0.0 { &[(0.0, mode), (mode, z_max)] } else { &[(0.0, z_max)] };
    for &(a, b) in pieces {
        total += integrate(f, a, b, DENSITY_REL_TOL, 0.0)?.value;
    }
    Ok(SQRT_2_OVER_PI * total)
}

/// Conditional density of `ζ` given `|W ζ| = c`, with its normaliser cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiDensity {
    c: f64,
    rho: f64,
}

impl PhiDensity {
    pub fn new(c: f64) -> Result<Self> {
        Ok(PhiDensity { c, rho: rho_density(c)? })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eval(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        SQRT_2_OVER_PI * phi_kernel(self.c, z) / self.rho
    }
}

pub fn phi_c_density(c: f64, z: f64) -> Result<f64> {
    check_nonnegative("c", c)?;
    check_positive("z", z)?;
    Ok(PhiDensity::new(c)?.eval(z))
}

#[derive(Debug, Clone)]
struct CdfTable {
    z: Vec<f64>,
    cdf: Vec<f64>,
}

/// Exact draws from `φ_c`.
///
/// Rejection from an `Exp(1)` proposal (accepted with probability
/// `exp(-c^2/(2 z^2))`) up to [`PHI_TABLE_THRESHOLD`]; inverse CDF on a
/// log-spaced table with linear interpolation above it.
#[derive(Debug, Clone)]
pub struct PhiSampler {
    c: f64,
    table: Option<CdfTable>,
}

impl PhiSampler {
    pub fn new(c: f64) -> Result<Self> {
        check_nonnegative("c", c)?;
        let table = if c > PHI_TABLE_THRESHOLD { Some(Self::build_table(c)?) } else { None };
        Ok(PhiSampler { c, table })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn uses_table(&self) -> bool {
        self.table.is_some()
    }

    fn build_table(c: f64) -> Result<CdfTable> {
        let mode = phi_mode(c);
        let cut = 1.5 * mode + LOG_TAIL_CUT;
        let z_lo = c / (2.0 * cut).sqrt();
        let z_hi = cut + mode;
        let ratio = (z_hi / z_lo).ln() / PHI_TABLE_CELLS as f64;
        let z: Vec<f64> = (0..=PHI_TABLE_CELLS).map(|k| z_lo * (ratio * k as f64).exp()).collect();
        let mut cdf = Vec::with_capacity(z.len());
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in z.windows(2) {
            acc += integrate(|x| phi_kernel(c, x), w[0], w[1], 1e-12, 0.0)?.value;
            cdf.push(acc);
        }
        for v in cdf.iter_mut() {
            *v /= acc;
        }
        Ok(CdfTable { z, cdf })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match &self.table {
            Some(t) => {
                let u: f64 = rng.random();
                let k = t.cdf.partition_point(|&p| p <= u).clamp(1, t.cdf.len() - 1);
                let (p0, p1) = (t.cdf[k - 1], t.cdf[k]);
                let frac = if p1 > p0 { (u - p0) / (p1 - p0) } else { 0.5 };
                Ok(t.z[k - 1] + frac * (t.z[k] - t.z[k - 1]))
            }
            None => {
                let half_c2 = 0.5 * self.c * self.c;
                for _ in 0..MAX_REJECTION_ATTEMPTS {
                    let z: f64 = rng.sample(Exp1);
                    if z <= 0.0 {
                        continue;
                    }
                    let e: f64 = rng.sample(Exp1);
                    if e >= half_c2 / (z * z) {
                        return Ok(z);
                    }
                }
                Err(Error::SamplerStall { c: self.c, attempts: MAX_REJECTION_ATTEMPTS })
            }
        }
    }
}

/// Draws one side of the gas: `Exp(1)` gaps and standard normal velocities,
/// stopping at the first particle farther than `window` from the first one
/// (kept as the sentinel).
pub fn sample_half_line<R: Rng + ?Sized>(rng: &mut R, side: Side, window: f64) -> Result<HalfLineConfig> {
    check_positive("window", window)?;
    let s = side.sign();
    let mut particles = Vec::with_capacity((window + 5.0 * window.sqrt()) as usize + 16);
    let mut dist = 0.0;
    loop {
        let v: f64 = rng.sample(StandardNormal);
        particles.push((s * dist, v));
        if dist > window {
            break;
        }
        let gap: f64 = rng.sample(Exp1);
        dist += gap;
    }
    Ok(HalfLineConfig { side, particles, sentinel: true })
}

fn gamma2<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let a: f64 = rng.sample(Exp1);
    let b: f64 = rng.sample(Exp1);
    a + b
}

/// Draws from the Type I Gibbs measure: `z ~ Γ(2)`, `u ~ U[-1, 1]`,
/// `V ~ N(0, 1/M)`, tagged particle at the origin.
pub fn sample_type1_state(rng: &mut RngStream, mass: f64, window: f64) -> Result<TypeIState> {
    check_positive("mass", mass)?;
    let z = gamma2(rng);
    let u = 2.0 * rng.random::<f64>() - 1.0;
    let w: f64 = rng.sample(StandardNormal);
    let right = sample_half_line(rng, Side::Right, window)?;
    let left = sample_half_line(rng, Side::Left, window)?;
    TypeIState::from_configuration(mass, w / mass.sqrt(), z, u, &right, &left)
}

/// Draws from the Type II Gibbs measure at fixed `c`, reusing a prepared sampler.
pub fn sample_type2_state_with(rng: &mut RngStream, sampler: &PhiSampler, window: f64) -> Result<TypeIIState> {
    let z = sampler.sample(rng)?;
    let right = sample_half_line(rng, Side::Right, window)?;
    let left = sample_half_line(rng, Side::Left, window)?;
    TypeIIState::from_configuration(sampler.c(), z, 0.0, &right, &left)
}

pub fn sample_type2_state_fixed_c(rng: &mut RngStream, c: f64, window: f64) -> Result<TypeIIState> {
    check_positive("c", c)?;
    let sampler = PhiSampler::new(c)?;
    sample_type2_state_with(rng, &sampler, window)
}

/// `c = |W z|`.
#[inline]
pub fn mixing_strength(w: f64, z: f64) -> f64 {
    (w * z).abs()
}

/// Draws from the mixed measure: `z ~ Γ(2)` and an independent `W ~ N(0, 1)`
/// set the strength `c = |W z|`.
pub fn sample_type2_state_mixed(rng: &mut RngStream, window: f64) -> Result<(TypeIIState, f64)> {
    let z = gamma2(rng);
    let w: f64 = rng.sample(StandardNormal);
    let c = mixing_strength(w, z);
    let right = sample_half_line(rng, Side::Right, window)?;
    let left = sample_half_line(rng, Side::Left, window)?;
    Ok((TypeIIState::from_configuration(c, z, 0.0, &right, &left)?, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule on [a, b]; independent of the adaptive scheme.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn gamma2_values() {
        assert!((gamma2_density(1.0).unwrap() - (-1f64).exp()).abs() < 1e-16);
        assert!(gamma2_density(1e-300).unwrap() < 1e-299);
        assert!(gamma2_density(0.0).is_err());
        assert!(gamma2_density(-1.0).is_err());
        let total = simpson(|z| if z > 0.0 { gamma2_density(z).unwrap() } else { 0.0 }, 0.0, 60.0, 20_000);
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rho_at_zero() {
        assert!((rho_density(0.0).unwrap() - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!(rho_density(-0.1).is_err());
        assert!(rho_density(f64::NAN).is_err());
    }

    #[test]
    fn rho_matches_simpson() {
        for c in [0.1, 1.0, 4.0, 30.0] {
            let oracle = SQRT_2_OVER_PI * simpson(|z| phi_kernel(c, z), 0.0, 1.5 * phi_mode(c) + 60.0, 200_000);
            let got = rho_density(c).unwrap();
            assert!((got - oracle).abs() < 1e-9 * oracle, "c={c}: {got} vs {oracle}");
        }
    }

    #[test]
    fn phi_at_zero_is_exponential() {
        for z in [0.1, 1.0, 3.0] {
            assert!((phi_c_density(0.0, z).unwrap() - (-z).exp()).abs() < 1e-12);
        }
        assert!(phi_c_density(1.0, 0.0).is_err());
        assert!(phi_c_density(-1.0, 1.0).is_err());
    }

    #[test]
    fn phi_normalised() {
        for c in [0.1, 1.0, 10.0] {
            let d = PhiDensity::new(c).unwrap();
            let total = simpson(|z| d.eval(z), 0.0, 80.0, 400_000);
            assert!((total - 1.0).abs() < 1e-8, "c={c}: {total}");
        }
    }

    #[test]
    fn half_line_shape() {
        let mut rng = RngStream::new(1, 0);
        let cfg = sample_half_line(&mut rng, Side::Left, 30.0).unwrap();
        assert!(cfg.is_valid());
        assert!(cfg.sentinel);
        let n = cfg.len();
        assert!(cfg.particles[n - 1].0 < -30.0);
        assert!(cfg.particles[n - 2].0 >= -30.0);
        assert!(sample_half_line(&mut rng, Side::Right, 0.0).is_err());
    }

    #[test]
    fn half_line_statistics() {
        let mut rng = RngStream::new(2, 0);
        let window = 50.0;
        let reps = 2_000;
        let (mut count, mut gaps, mut ngaps, mut vs, mut vs2, mut nv) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..reps {
            let cfg = sample_half_line(&mut rng, Side::Right, window).unwrap();
            // particles strictly inside the window beyond the first form a Poisson(window) count
            count += (cfg.len() - 2) as f64;
            for w in cfg.particles.windows(2) {
                gaps += w[1].0 - w[0].0;
                ngaps += 1.0;
            }
            for &(_, v) in &cfg.particles {
                vs += v;
                vs2 += v * v;
                nv += 1.0;
            }
        }
        let mean_count = count / reps as f64;
        assert!((mean_count - window).abs() < 3.0 * (window / reps as f64).sqrt(), "{mean_count}");
        let gmean = gaps / ngaps;
        assert!((gmean - 1.0).abs() < 3.0 / ngaps.sqrt());
        let vmean = vs / nv;
        assert!(vmean.abs() < 3.0 / nv.sqrt());
        let vvar = vs2 / nv - vmean * vmean;
        assert!((vvar - 1.0).abs() < 3.0 * 2f64.sqrt() / nv.sqrt());
    }

    #[test]
    fn type1_state_moments() {
        let n = 40_000;
        let mass = 4.0;
        let (mut v2, mut zsum, mut rsum) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let mut rng = RngStream::new(3, i);
            let s = sample_type1_state(&mut rng, mass, 2.0).unwrap();
            v2 += s.tagged.v * s.tagged.v;
            zsum += s.right.x - s.left.x;
            rsum += s.right.x;
            assert!(s.left.x <= 0.0 && s.right.x >= 0.0 && s.tagged.x == 0.0);
        }
        let n = n as f64;
        let var = v2 / n;
        assert!((var - 0.25).abs() < 3.0 * 2f64.sqrt() * 0.25 / n.sqrt(), "{var}");
        // Γ(2): mean 2, sd sqrt(2)
        assert!((zsum / n - 2.0).abs() < 3.0 * 2f64.sqrt() / n.sqrt());
        // z(1+u)/2 has mean 1 and variance E[z^2]E[(1+u)^2/4] - 1 = 6 * 1/3 - 1 = 1
        assert!((rsum / n - 1.0).abs() < 3.0 / n.sqrt());
    }

    #[test]
    fn rejection_sampler_small_c_mean() {
        // ∫ z φ_c(z) dz at c = 0.01 by Simpson
        let c = 0.01;
        let d = PhiDensity::new(c).unwrap();
        let oracle = simpson(|z| z * d.eval(z), 0.0, 80.0, 400_000);
        // φ_c tends to e^{-z} as c -> 0, so the mean tends to 1 (not the Γ(2) mean 2)
        assert!((oracle - 1.0).abs() < 0.02, "{oracle}");
        let sampler = PhiSampler::new(c).unwrap();
        assert!(!sampler.uses_table());
        let mut rng = RngStream::new(5, 0);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| sampler.sample(&mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - oracle).abs() < 0.02 * oracle, "{mean} vs {oracle}");
    }

    #[test]
    fn table_sampler_mean() {
        let c = 20.0;
        let sampler = PhiSampler::new(c).unwrap();
        assert!(sampler.uses_table());
        let d = PhiDensity::new(c).unwrap();
        let oracle = simpson(|z| z * d.eval(z), 0.0, 120.0, 400_000);
        let sd = (simpson(|z| (z - oracle).powi(2) * d.eval(z), 0.0, 120.0, 400_000)).sqrt();
        let mut rng = RngStream::new(6, 0);
        let n = 50_000;
        let xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng).unwrap()).collect();
        assert!(xs.iter().all(|&z| z > 0.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - oracle).abs() < 4.0 * sd / (n as f64).sqrt(), "{mean} vs {oracle}");
    }

    #[test]
    fn mixed_strength() {
        assert_eq!(mixing_strength(0.5, 2.0), 1.0);
        assert_eq!(mixing_strength(-0.5, 2.0), 1.0);
        let mut rng = RngStream::new(9, 1);
        let (s, c) = sample_type2_state_mixed(&mut rng, 5.0).unwrap();
        assert_eq!(s.pair.c, c);
        assert!(s.pair.z > 0.0);
    }

    #[test]
    fn reproducible_samples() {
        let a = sample_type1_state(&mut RngStream::new(11, 4), 0.3, 20.0).unwrap();
        let b = sample_type1_state(&mut RngStream::new(11, 4), 0.3, 20.0).unwrap();
        assert_eq!(a, b);
        let c = sample_type1_state(&mut RngStream::new(11, 5), 0.3, 20.0).unwrap();
        assert_ne!(a, c);
    }
}
