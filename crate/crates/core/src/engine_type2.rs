//! Event-driven equal-mass gas whose two central particles interact through
//! `c^2 / (2 z^2)`.
//!
//! The pair moves in closed form. Outer particles are free and pass through
//! each other, so the only events are an outer particle meeting a central
//! one; the two then trade labels and the newcomer joins the pair.

use crate::cms_pair::PairState;
use crate::engine_type1::EngineOptions;
use crate::error::{Error, Result};
use crate::sampling::HalfLineConfig;
use crate::trajectory::{time_grid, Ballistic, FreePool, Side, Snapshot, TrajectoryRecord};

/// Separation used when a swap would leave `z <= 0` through rounding.
pub const Z_CLAMP: f64 = 1e-12;
pub const MAX_CLAMPS: u32 = 10;
/// Relative slack of the crossing prefilter.
const PREFILTER_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapKind {
    Left(usize),
    Right(usize),
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapEvent {
    pub time: f64,
    pub kind: SwapKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeIIState {
    pub t: f64,
    /// Central pair, referenced at `t`.
    pub pair: PairState,
    pub right_pool: FreePool,
    pub left_pool: FreePool,
    pub right_sentinel: Option<usize>,
    pub left_sentinel: Option<usize>,
    pub event_count: u64,
    pub clamp_count: u32,
}

fn pool_from(cfg: &HalfLineConfig, offset: f64) -> (FreePool, Option<usize>) {
    let pool = FreePool::from_lines(cfg.side, cfg.particles[1..].iter().map(|&(x, v)| (offset + x, v)));
    let sentinel = (cfg.sentinel && !pool.is_empty()).then(|| pool.len() - 1);
    (pool, sentinel)
}

impl TypeIIState {
    /// Pair centred at `center` with separation `z`; the first particle of
    /// each half-line is the central particle on that side.
    pub fn from_configuration(c: f64, z: f64, center: f64, right: &HalfLineConfig, left: &HalfLineConfig) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::Domain { what: "c", value: c });
        }
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::Domain { what: "z", value: z });
        }
        if right.is_empty() || left.is_empty() || right.side != Side::Right || left.side != Side::Left {
            return Err(Error::Config("both half-lines need at least one particle".into()));
        }
        let xr = center + 0.5 * z;
        let xl = center - 0.5 * z;
        let pair = PairState::from_particles(0.0, (xl, left.particles[0].1), (xr, right.particles[0].1), c);
        let (right_pool, right_sentinel) = pool_from(right, xr);
        let (left_pool, left_sentinel) = pool_from(left, xl);
        Ok(TypeIIState {
            t: 0.0,
            pair,
            right_pool,
            left_pool,
            right_sentinel,
            left_sentinel,
            event_count: 0,
            clamp_count: 0,
        })
    }

    pub fn followed_momentum(&self) -> f64 {
        2.0 * self.pair.v_cm + self.right_pool.velocities().iter().chain(self.left_pool.velocities()).sum::<f64>()
    }

    /// Kinetic energy of every followed particle plus the pair potential.
    pub fn followed_energy(&self) -> f64 {
        self.pair.pair_energy()
            + 0.5 * self.right_pool.velocities().iter().chain(self.left_pool.velocities()).map(|v| v * v).sum::<f64>()
    }

    fn first_crossing(&self, side: Side, horizon: f64) -> Result<Option<(f64, usize)>> {
        let pool = match side {
            Side::Right => &self.right_pool,
            Side::Left => &self.left_pool,
        };
        let t = self.t;
        let s = side.sign();
        let (x_e, v_e) = self.pair.particle(side);
        // The edge x_{+1} is convex in time (x_{-1} concave), so it never
        // falls behind its tangent: whoever meets the tangent line has met
        // the edge by then. That bounds the event time from above.
        let upper = match pool.first_meeting(Ballistic::new(x_e, v_e, t), t) {
            Some((tu, _)) => tu.min(horizon),
            None => horizon,
        };
        // Over [t, upper] the edge stays inside its chord, so a line outside
        // both chord ends cannot reach it. The margin keeps rounding from
        // discarding a crossing that sits right at the end of the window.
        let edge_now = s * x_e;
        let edge_end = s * self.pair.propagate(upper - t).particle(side).0;
        let reach = edge_now.max(edge_end);
        let reach = reach + PREFILTER_MARGIN * (1.0 + reach.abs());
        let mut best: Option<(f64, usize)> = None;
        for j in pool.blocks_within(reach, upper).flatten() {
            let (pn, pe) = (s * pool.position(j, t), s * pool.position(j, upper));
            if pn.min(pe) > reach {
                continue;
            }
            if let Some(dt) = self.pair.crossing_time_with_free((pool.position(j, t), pool.velocity(j)), side)? {
                if best.is_none_or(|(b, _)| t + dt < b) {
                    best = Some((t + dt, j));
                }
            }
        }
        Ok(best)
    }

    /// Earliest swap no later than `horizon`; the left side wins ties.
    pub fn next_event(&self, horizon: f64) -> Result<SwapEvent> {
        let left = self.first_crossing(Side::Left, horizon)?;
        let right = self.first_crossing(Side::Right, horizon)?;
        let mut best = SwapEvent { time: horizon, kind: SwapKind::Horizon };
        if let Some((t, j)) = left {
            if t <= best.time {
                best = SwapEvent { time: t, kind: SwapKind::Left(j) };
            }
        }
        if let Some((t, j)) = right {
            if t < best.time || best.kind == SwapKind::Horizon && t <= best.time {
                best = SwapEvent { time: t, kind: SwapKind::Right(j) };
            }
        }
        Ok(best)
    }

    /// Propagates to the event time and performs the swap.
    pub fn apply(&mut self, event: SwapEvent) -> Result<()> {
        let te = event.time;
        let moved = self.pair.propagate(te - self.t);
        match event.kind {
            SwapKind::Horizon => self.pair = moved,
            SwapKind::Right(j) | SwapKind::Left(j) => {
                let (side, pool, sentinel) = match event.kind {
                    SwapKind::Right(_) => (Side::Right, &mut self.right_pool, self.right_sentinel),
                    _ => (Side::Left, &mut self.left_pool, self.left_sentinel),
                };
                if sentinel == Some(j) {
                    return Err(Error::InsufficientWindow { time: te });
                }
                let (x_out, v_out) = moved.particle(side);
                let w = pool.velocity(j);
                pool.set(j, x_out, v_out, te);
                // The newcomer sits exactly where the outgoing particle was,
                // so the separation carries over unchanged.
                let (_, v_stay) = moved.particle(match side {
                    Side::Right => Side::Left,
                    Side::Left => Side::Right,
                });
                let mut next = moved;
                next.v_cm = 0.5 * (v_stay + w);
                next.z_dot = side.sign() * (w - v_stay);
                if !(next.z > 0.0) && next.c > 0.0 {
                    self.clamp_count += 1;
                    if self.clamp_count > MAX_CLAMPS {
                        return Err(Error::SeparationCollapse { count: self.clamp_count });
                    }
                    next.z = Z_CLAMP;
                }
                self.pair = next;
            }
        }
        if event.kind != SwapKind::Horizon {
            self.event_count += 1;
        }
        self.t = te;
        Ok(())
    }

    /// Advances through the next event before `horizon`.
    pub fn step_to_next_event(&mut self, horizon: f64) -> Result<SwapEvent> {
        let ev = self.next_event(horizon)?;
        self.apply(ev)?;
        Ok(ev)
    }

    /// `(position, velocity)` of every followed particle at `t >= self.t`,
    /// sorted by position.
    pub fn all_particles(&self, t: f64) -> Vec<(f64, f64)> {
        let p = self.pair.propagate(t - self.t);
        let (l, r) = (p.particle(Side::Left), p.particle(Side::Right));
        let mut x: Vec<(f64, f64)> = [l, r]
            .into_iter()
            .chain(self.right_pool.iter().map(|b| (b.at(t), b.v)))
            .chain(self.left_pool.iter().map(|b| (b.at(t), b.v)))
            .collect();
        x.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        x
    }

    pub fn all_positions(&self, t: f64) -> Vec<f64> {
        self.all_particles(t).into_iter().map(|p| p.0).collect()
    }

    pub(crate) fn snapshot(&self, t: f64, k: usize) -> Snapshot {
        let p = self.pair.propagate(t - self.t);
        let (l, r) = p.positions();
        let mut right = vec![r];
        right.extend(self.right_pool.nearest(t, k.saturating_sub(1)));
        let mut left = vec![l];
        left.extend(self.left_pool.nearest(t, k.saturating_sub(1)));
        Snapshot { center: p.x_cm, right, left }
    }
}

/// Runs the Type II dynamics to `horizon`, recording the pair's centre of
/// mass displacement every `step`.
pub fn run_type2(initial: TypeIIState, horizon: f64, step: f64, opts: &EngineOptions) -> Result<TrajectoryRecord> {
    let grid = time_grid(horizon, step)?;
    let obs = opts.observe;
    let t0 = initial.t;
    let x0 = initial.pair.x_cm;
    let end = t0 + grid[grid.len() - 1];
    let mut q = Vec::with_capacity(grid.len());
    let mut snaps = (obs.track > 0).then(|| Vec::with_capacity(grid.len()));
    let mut wz = obs.wz.then(|| vec![(t0, initial.pair.c)]);

    let mut s = initial;
    let mut next = 0;
    loop {
        let ev = s.next_event(end)?;
        while next < grid.len() && t0 + grid[next] <= ev.time {
            let g = t0 + grid[next];
            q.push(s.pair.x_cm + s.pair.v_cm * (g - s.t) - x0);
            if let Some(sn) = snaps.as_mut() {
                sn.push(s.snapshot(g, obs.track));
            }
            next += 1;
        }
        if ev.kind == SwapKind::Horizon {
            s.apply(ev)?;
            break;
        }
        if s.event_count >= opts.event_cap {
            return Err(Error::InstabilityCap { cap: opts.event_cap, time: ev.time });
        }
        s.apply(ev)?;
        if let Some(w) = wz.as_mut() {
            w.push((ev.time, s.pair.c));
        }
    }
    while q.len() < grid.len() {
        let g = t0 + grid[q.len()];
        q.push(s.pair.x_cm + s.pair.v_cm * (g - s.t) - x0);
        if let Some(sn) = snaps.as_mut() {
            sn.push(s.snapshot(g, obs.track));
        }
    }
    Ok(TrajectoryRecord {
        grid,
        q_tilde: obs.q_tilde.then(|| q.clone()),
        q,
        wz,
        snapshots: snaps,
        events: s.event_count,
    })
}
