//! Small-mass limit of the Type I gas.
//!
//! A Type I run with `V = W / sqrt(M)` is compared, after dropping the tagged
//! particle, with the Type II run at `c = |W z|` started from the same
//! neighbours and half-lines. Also here: the `|W z|` drift along a run and
//! the one-cycle velocity expansion for small `M`.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::engine_type1::{collide_tagged, run_type1, EngineOptions, EventKind, Type1Sim, TypeIState, DEFAULT_EVENT_CAP};
use crate::engine_type2::{run_type2, SwapKind, TypeIIState};
use crate::error::{Error, Result};
use crate::estimator::{map_indices, ols};
use crate::rng::{stream_index, RngStream};
use crate::sampling::{mixing_strength, sample_half_line, HalfLineConfig};
use crate::trajectory::{time_grid, Observe, Side, Snapshot, TrajectoryRecord};

/// Draws with `|W|` below this are redrawn.
pub const MIN_ABS_W: f64 = 0.1;

/// Initial data shared by a Type I run (any mass) and its Type II limit.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedInitialData {
    pub right: HalfLineConfig,
    pub left: HalfLineConfig,
    pub z: f64,
    pub u: f64,
    pub w: f64,
}

impl MatchedInitialData {
    pub fn new(right: HalfLineConfig, left: HalfLineConfig, z: f64, u: f64, w: f64) -> Result<Self> {
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::Domain { what: "z", value: z });
        }
        if !(-1.0..=1.0).contains(&u) {
            return Err(Error::Domain { what: "u", value: u });
        }
        if !(w.is_finite() && w.abs() >= MIN_ABS_W) {
            return Err(Error::Domain { what: "W", value: w });
        }
        if right.is_empty() || left.is_empty() || right.side != Side::Right || left.side != Side::Left {
            return Err(Error::Config("both half-lines need at least one particle".into()));
        }
        Ok(MatchedInitialData { right, left, z, u, w })
    }

    /// `z ~ Γ(2)`, `u ~ U[-1, 1]`, `W ~ N(0, 1)` conditioned on `|W| >= 0.1`.
    pub fn sample(rng: &mut RngStream, window: f64) -> Result<Self> {
        let a: f64 = rng.sample(Exp1);
        let b: f64 = rng.sample(Exp1);
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let w = loop {
            let w: f64 = rng.sample(StandardNormal);
            if w.abs() >= MIN_ABS_W {
                break w;
            }
        };
        let right = sample_half_line(rng, Side::Right, window)?;
        let left = sample_half_line(rng, Side::Left, window)?;
        MatchedInitialData::new(right, left, a + b, u, w)
    }

    pub fn c(&self) -> f64 {
        mixing_strength(self.w, self.z)
    }

    pub fn type1(&self, mass: f64) -> Result<TypeIState> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Domain { what: "mass", value: mass });
        }
        TypeIState::from_configuration(mass, self.w / mass.sqrt(), self.z, self.u, &self.right, &self.left)
    }

    /// The limit system at `c = |W z|`, pair placed where the neighbours are.
    pub fn type2(&self) -> Result<TypeIIState> {
        self.type2_with(self.c())
    }

    pub fn type2_with(&self, c: f64) -> Result<TypeIIState> {
        TypeIIState::from_configuration(c, self.z, 0.5 * self.z * self.u, &self.right, &self.left)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub mass: f64,
    /// Largest distance over grid times between corresponding particles.
    pub sup_error: f64,
    /// Largest relative drift of `|W z|` along the Type I run.
    pub wz_drift: f64,
}

fn snapshot_distance(a: &Snapshot, b: &Snapshot) -> f64 {
    let mut d = (a.center - b.center).abs();
    for (x, y) in a.right.iter().zip(&b.right).chain(a.left.iter().zip(&b.left)) {
        d = d.max((x - y).abs());
    }
    d
}

fn sup_distance(a: &TrajectoryRecord, b: &TrajectoryRecord) -> Result<f64> {
    let (Some(sa), Some(sb)) = (&a.snapshots, &b.snapshots) else {
        return Err(Error::InsufficientData("runs carry no snapshots".into()));
    };
    if sa.len() != sb.len() {
        return Err(Error::GridMismatch);
    }
    Ok(sa.iter().zip(sb).map(|(x, y)| snapshot_distance(x, y)).fold(0.0, f64::max))
}

/// Runs Type II once and Type I at every mass in `masses`, comparing the
/// neighbour midpoint and `k` particles per side on the grid of step `step`.
pub fn compare_trajectories(
    data: &MatchedInitialData,
    masses: &[f64],
    horizon: f64,
    step: f64,
    k: usize,
    event_cap: u64,
) -> Result<Vec<ConvergencePoint>> {
    if k == 0 {
        return Err(Error::Config("need at least one tracked particle per side".into()));
    }
    let opts = EngineOptions { observe: Observe { q_tilde: false, wz: true, track: k }, event_cap };
    let limit = run_type2(data.type2()?, horizon, step, &opts).map_err(|e| e.at("c", data.c()))?;
    masses
        .iter()
        .map(|&m| {
            let run = data.type1(m).and_then(|s| run_type1(s, horizon, step, &opts)).map_err(|e| e.at("M", m))?;
            Ok(ConvergencePoint { mass: m, sup_error: sup_distance(&run, &limit)?, wz_drift: check_wz_invariant(&run)? })
        })
        .collect()
}

/// Largest `| |Wz|_i - |Wz|_0 | / |Wz|_0` over the recorded events.
pub fn check_wz_invariant(record: &TrajectoryRecord) -> Result<f64> {
    let wz = record.wz.as_deref().ok_or_else(|| Error::InsufficientData("run carries no W z record".into()))?;
    let first = wz.first().ok_or_else(|| Error::InsufficientData("empty W z record".into()))?.1.abs();
    if first == 0.0 {
        return Err(Error::Domain { what: "initial W z", value: 0.0 });
    }
    Ok(wz.iter().map(|&(_, x)| (x.abs() - first).abs() / first).fold(0.0, f64::max))
}

/// Least-squares slope of `ln(err)` against `ln(M)`.
pub fn rate_slope(masses: &[f64], errors: &[f64]) -> Result<f64> {
    if masses.len() != errors.len() || masses.len() < 2 {
        return Err(Error::InsufficientData("rate fit needs at least two masses".into()));
    }
    if masses.iter().chain(errors).any(|x| !(*x > 0.0)) {
        return Err(Error::InsufficientData("rate fit needs positive masses and errors".into()));
    }
    let x: Vec<f64> = masses.iter().map(|m| m.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(ols(&x, &y).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub masses: Vec<f64>,
    pub horizon: f64,
    pub grid_step: f64,
    pub track: usize,
    pub draws: u64,
    /// Half-line window as a multiple of the horizon.
    pub window_factor: f64,
    pub event_cap: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            masses: vec![1e-1, 1e-2, 1e-3],
            horizon: 5.0,
            grid_step: 0.05,
            track: 3,
            draws: 100,
            window_factor: 10.0,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.masses.is_empty() || self.masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::Config("mass list must be non-empty and positive".into()));
        }
        if self.draws == 0 || self.draws > u32::MAX as u64 {
            return Err(Error::Config(format!("draws out of range: {}", self.draws)));
        }
        if !(self.window_factor.is_finite() && self.window_factor > 0.0) {
            return Err(Error::Config(format!("window factor must be positive, got {}", self.window_factor)));
        }
        if self.track == 0 {
            return Err(Error::Config("need at least one tracked particle per side".into()));
        }
        time_grid(self.horizon, self.grid_step).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrawResult {
    pub c: f64,
    pub points: Vec<ConvergencePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub masses: Vec<f64>,
    pub draws: Vec<DrawResult>,
}

impl ConvergenceStudy {
    fn column<'a>(&'a self, i: usize, f: impl Fn(&ConvergencePoint) -> f64 + 'a) -> impl Iterator<Item = f64> + 'a {
        self.draws.iter().map(move |d| f(&d.points[i]))
    }

    /// Geometric mean of the sup error over draws, per mass.
    pub fn geometric_mean_errors(&self) -> Vec<f64> {
        let n = self.draws.len() as f64;
        (0..self.masses.len())
            .map(|i| (self.column(i, |p| p.sup_error.max(f64::MIN_POSITIVE).ln()).sum::<f64>() / n).exp())
            .collect()
    }

    /// Worst `|W z|` drift over draws, per mass.
    pub fn max_wz_drift(&self) -> Vec<f64> {
        (0..self.masses.len()).map(|i| self.column(i, |p| p.wz_drift).fold(0.0, f64::max)).collect()
    }

    /// Share of draws whose error strictly decreases along the mass list.
    pub fn fraction_monotone(&self) -> f64 {
        let ok = self.draws.iter().filter(|d| d.points.windows(2).all(|w| w[1].sup_error < w[0].sup_error)).count();
        ok as f64 / self.draws.len() as f64
    }

    /// Share of draws where the last mass beats the first.
    pub fn fraction_endpoint_decrease(&self) -> f64 {
        let ok = self.draws.iter().filter(|d| d.points.last().unwrap().sup_error < d.points[0].sup_error).count();
        ok as f64 / self.draws.len() as f64
    }

    pub fn rate_slope(&self) -> Result<f64> {
        rate_slope(&self.masses, &self.geometric_mean_errors())
    }
}

/// `cfg.draws` independent comparisons; draw `i` uses stream `(point, 0, i)`.
pub fn convergence_study(cfg: &ConvergenceConfig, seed: u64, point: u32) -> Result<ConvergenceStudy> {
    cfg.validate()?;
    let window = cfg.window_factor * cfg.horizon;
    let draws: Result<Vec<DrawResult>> = map_indices(cfg.draws as usize, |i| {
        let mut rng = RngStream::new(seed, stream_index(point, 0, i as u64));
        let data = MatchedInitialData::sample(&mut rng, window)?;
        let points = compare_trajectories(&data, &cfg.masses, cfg.horizon, cfg.grid_step, cfg.track, cfg.event_cap)?;
        Ok(DrawResult { c: data.c(), points })
    })
    .into_iter()
    .collect();
    Ok(ConvergenceStudy { masses: cfg.masses.clone(), draws: draws? })
}

/// Positions of all followed particles on the grid, Type I.
fn type1_positions(state: TypeIState, grid: &[f64], event_cap: u64) -> Result<Vec<Vec<f64>>> {
    let mut sim = Type1Sim::new(state, grid[grid.len() - 1], event_cap);
    let mut out = Vec::with_capacity(grid.len());
    loop {
        let ev = sim.peek();
        while out.len() < grid.len() && grid[out.len()] <= ev.time {
            out.push(sim.state().all_positions(grid[out.len()]));
        }
        if ev.kind == EventKind::Horizon {
            break;
        }
        sim.advance(ev)?;
    }
    while out.len() < grid.len() {
        out.push(sim.state().all_positions(grid[out.len()]));
    }
    Ok(out)
}

fn type2_positions(mut s: TypeIIState, grid: &[f64], event_cap: u64) -> Result<Vec<Vec<f64>>> {
    let end = grid[grid.len() - 1];
    let mut out = Vec::with_capacity(grid.len());
    loop {
        let ev = s.next_event(end)?;
        while out.len() < grid.len() && grid[out.len()] <= ev.time {
            out.push(s.all_positions(grid[out.len()]));
        }
        if ev.kind == SwapKind::Horizon {
            break;
        }
        if s.event_count >= event_cap {
            return Err(Error::InstabilityCap { cap: event_cap, time: ev.time });
        }
        s.apply(ev)?;
    }
    while out.len() < grid.len() {
        out.push(s.all_positions(grid[out.len()]));
    }
    Ok(out)
}

/// Equal-mass Type I gas against the Type II pair at strength `c`, both
/// started from the Type II configuration of `data`.
///
/// The Type I tagged particle takes the place of pair particle -1, its right
/// neighbour that of +1. Both systems are compared as sets of positions, so
/// as `c -> 0` the difference vanishes.
pub fn double_limit_error(data: &MatchedInitialData, c: f64, horizon: f64, step: f64, event_cap: u64) -> Result<f64> {
    if data.left.len() < 2 {
        return Err(Error::Config("left half-line needs two particles".into()));
    }
    let grid = time_grid(horizon, step)?;
    let pair = TypeIIState::from_configuration(c, data.z, 0.5 * data.z, &data.right, &data.left)?;
    let (tag_v, (gap, _)) = (data.left.particles[0].1, data.left.particles[1]);
    let gap = -gap;
    let (x1, v1) = data.left.particles[1];
    let left = HalfLineConfig {
        side: Side::Left,
        particles: data.left.particles[1..].iter().map(|&(x, v)| (x - x1, v)).collect(),
        sentinel: data.left.sentinel,
    };
    debug_assert_eq!(left.particles[0], (0.0, v1));
    let zi = data.z + gap;
    let u = if zi > 0.0 { 2.0 * data.z / zi - 1.0 } else { 1.0 };
    let gas = TypeIState::from_configuration(1.0, tag_v, zi, u, &data.right, &left)?;
    let a = type1_positions(gas, &grid, event_cap).map_err(|e| e.at("M", 1.0))?;
    let b = type2_positions(pair, &grid, event_cap).map_err(|e| e.at("c", c))?;
    let mut d: f64 = 0.0;
    for (xa, xb) in a.iter().zip(&b) {
        if xa.len() != xb.len() {
            return Err(Error::GridMismatch);
        }
        for (p, q) in xa.iter().zip(xb) {
            d = d.max((p - q).abs());
        }
    }
    Ok(d)
}

/// One entry of the small-mass velocity expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionResidual {
    pub name: &'static str,
    pub residual: f64,
    /// Claimed order: the residual is `O(M^order)`.
    pub order: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub mass: f64,
    pub entries: Vec<ExpansionResidual>,
    pub momentum_residual: f64,
    pub energy_residual: f64,
}

impl ExpansionReport {
    pub fn get(&self, name: &str) -> Option<&ExpansionResidual> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// One tagged cycle: starting in contact with particle -1 and moving right at
/// `V = W / sqrt(M)`, the tagged particle hits particle +1 (gap `z`) and
/// then particle -1, using the exact collision law.
///
/// Interval 1 is before the first collision, 2 between the two, 3 after.
pub fn cycle_expansion_check(mass: f64, w: f64, v_plus: f64, v_minus: f64, z: f64) -> Result<ExpansionReport> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Domain { what: "mass", value: mass });
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::Domain { what: "W", value: w });
    }
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Domain { what: "z", value: z });
    }
    let sm = mass.sqrt();
    let v0 = w / sm;
    if v0 <= v_plus {
        return Err(Error::Geometry("tagged particle does not reach particle +1".into()));
    }
    let t1 = z / (v0 - v_plus);
    let (v0_2, v1_2) = collide_tagged(mass, v0, v_plus);
    if v0_2 >= v_minus || v0_2 >= v1_2 {
        return Err(Error::Geometry("tagged particle does not return to particle -1".into()));
    }
    let t2 = t1 + (z + (v_plus - v_minus) * t1) / (v_minus - v0_2);
    let (v0_3, vm_3) = collide_tagged(mass, v0_2, v_minus);

    let p_before = mass * v0 + v_plus + v_minus;
    let p_after = mass * v0_3 + v1_2 + vm_3;
    let e_before = mass * v0 * v0 + v_plus * v_plus + v_minus * v_minus;
    let e_after = mass * v0_3 * v0_3 + v1_2 * v1_2 + vm_3 * vm_3;

    let dv0 = v0_3 - v0;
    let r = |name, residual, order| ExpansionResidual { name, residual, order };
    let entries = vec![
        r("v1_interval2", v1_2 - (v_plus + 2.0 * mass * v0), 1.0),
        r("v1_interval3", v1_2 - (v_plus + 2.0 * mass * v0), 1.0),
        r("v0_interval2", v0_2 - (-v0 + 2.0 * v_plus), 0.5),
        r("v0_interval3", v0_3 - (v0 - 2.0 * v_plus + 2.0 * v_minus), 0.5),
        r("vm1_interval2", 0.0, 0.5),
        r("vm1_interval3", vm_3 - (v_minus - 2.0 * mass * v0), 0.5),
        r("dt", t2 - 2.0 * z * sm / w, 1.0),
        r("dv1", (v1_2 - v_plus) - 2.0 * w * sm, 1.0),
        r("dvm1", (vm_3 - v_minus) + 2.0 * w * sm, 1.0),
        r("dv0", dv0 - (2.0 * v_minus - 2.0 * v_plus), 0.5),
        r("dW", sm * dv0 - sm * (2.0 * v_minus - 2.0 * v_plus), 1.0),
    ];
    Ok(ExpansionReport {
        mass,
        entries,
        momentum_residual: (p_after - p_before) / p_before.abs().max(1.0),
        energy_residual: (e_after - e_before) / e_before,
    })
}
