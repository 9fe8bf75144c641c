//! Event-driven Rayleigh gas: one tagged particle of mass `M` among unit
//! masses that pass through each other freely.
//!
//! Only the tagged particle and its two current neighbours interact. All
//! other particles are straight lines kept in two pools; when one of them
//! meets a neighbour the two trajectories trade labels (a relabel event),
//! which changes nothing physical.

use crate::error::{Error, Result};
use crate::sampling::HalfLineConfig;
use crate::trajectory::{time_grid, Ballistic, FreePool, Observe, Side, Snapshot, TrajectoryRecord};

pub const DEFAULT_EVENT_CAP: u64 = 10_000_000;

/// Outgoing velocities `(V, v)` of an elastic collision between the tagged
/// particle (mass `M`, velocity `V`) and a unit mass moving at `v`.
#[inline]
pub fn collide_tagged(mass: f64, v_tagged: f64, v_gas: f64) -> (f64, f64) {
    let inv = 1.0 / (mass + 1.0);
    let r = (mass - 1.0) * inv;
    (r * v_tagged + 2.0 * inv * v_gas, 2.0 * mass * inv * v_tagged - r * v_gas)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    TaggedLeftCollision,
    TaggedRightCollision,
    /// Left neighbour meets `left_pool[j]`.
    LeftRelabel(usize),
    RightRelabel(usize),
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Full Type I configuration in the lab frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeIState {
    pub t: f64,
    pub mass: f64,
    pub tagged: Ballistic,
    pub right: Ballistic,
    pub left: Ballistic,
    pub right_pool: FreePool,
    pub left_pool: FreePool,
    /// Pool slot holding the truncation sentinel, if any.
    pub right_sentinel: Option<usize>,
    pub left_sentinel: Option<usize>,
    pub event_count: u64,
}

fn pool_from(cfg: &HalfLineConfig, offset: f64) -> (Ballistic, FreePool, Option<usize>) {
    let (x0, v0) = cfg.particles[0];
    let first = Ballistic::new(offset + x0, v0, 0.0);
    let pool = FreePool::from_lines(cfg.side, cfg.particles[1..].iter().map(|&(x, v)| (offset + x, v)));
    let sentinel = (cfg.sentinel && !pool.is_empty()).then(|| pool.len() - 1);
    (first, pool, sentinel)
}

impl TypeIState {
    /// Tagged particle at the origin with velocity `velocity`; neighbours at
    /// `z(1+u)/2` and `-z(1-u)/2`, followed by the two half-lines.
    pub fn from_configuration(
        mass: f64,
        velocity: f64,
        z: f64,
        u: f64,
        right: &HalfLineConfig,
        left: &HalfLineConfig,
    ) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Domain { what: "mass", value: mass });
        }
        if !(z.is_finite() && z >= 0.0) {
            return Err(Error::Domain { what: "z", value: z });
        }
        if !(-1.0..=1.0).contains(&u) {
            return Err(Error::Domain { what: "u", value: u });
        }
        if right.is_empty() || left.is_empty() || right.side != Side::Right || left.side != Side::Left {
            return Err(Error::Config("both half-lines need at least one particle".into()));
        }
        let (rn, right_pool, right_sentinel) = pool_from(right, 0.5 * z * (1.0 + u));
        let (ln, left_pool, left_sentinel) = pool_from(left, -0.5 * z * (1.0 - u));
        Ok(TypeIState {
            t: 0.0,
            mass,
            tagged: Ballistic::new(0.0, velocity, 0.0),
            right: rn,
            left: ln,
            right_pool,
            left_pool,
            right_sentinel,
            left_sentinel,
            event_count: 0,
        })
    }

    /// Distance between the two neighbours at time `t`.
    pub fn neighbor_gap(&self, t: f64) -> f64 {
        self.right.at(t) - self.left.at(t)
    }

    /// `sqrt(M) V` times the neighbour gap, the small-mass invariant.
    pub fn wz(&self, t: f64) -> f64 {
        self.mass.sqrt() * self.tagged.v * self.neighbor_gap(t)
    }

    fn all_gas(&self) -> impl Iterator<Item = Ballistic> + '_ {
        [self.right, self.left].into_iter().chain(self.right_pool.iter()).chain(self.left_pool.iter())
    }

    pub fn followed_momentum(&self) -> f64 {
        self.mass * self.tagged.v + self.all_gas().map(|b| b.v).sum::<f64>()
    }

    pub fn followed_energy(&self) -> f64 {
        0.5 * self.mass * self.tagged.v * self.tagged.v + 0.5 * self.all_gas().map(|b| b.v * b.v).sum::<f64>()
    }

    fn tagged_right_time(&self) -> Option<f64> {
        let closing = self.tagged.v - self.right.v;
        (closing > 0.0).then(|| self.t + (self.right.at(self.t) - self.tagged.at(self.t)).max(0.0) / closing)
    }

    fn tagged_left_time(&self) -> Option<f64> {
        let closing = self.left.v - self.tagged.v;
        (closing > 0.0).then(|| self.t + (self.tagged.at(self.t) - self.left.at(self.t)).max(0.0) / closing)
    }

    /// Earliest meeting of the neighbour on `side` with a pool trajectory.
    pub fn relabel_time(&self, side: Side) -> Option<(f64, usize)> {
        match side {
            Side::Right => self.right_pool.first_meeting(self.right, self.t),
            Side::Left => self.left_pool.first_meeting(self.left, self.t),
        }
    }

    /// Next event no later than `horizon`. Ties go to collisions before
    /// relabels and to the left before the right.
    pub fn next_event(&self, horizon: f64) -> Event {
        let left_rel = self.relabel_time(Side::Left);
        let right_rel = self.relabel_time(Side::Right);
        self.pick(horizon, left_rel, right_rel)
    }

    fn pick(&self, horizon: f64, left_rel: Option<(f64, usize)>, right_rel: Option<(f64, usize)>) -> Event {
        let candidates = [
            self.tagged_left_time().map(|t| (t, EventKind::TaggedLeftCollision)),
            self.tagged_right_time().map(|t| (t, EventKind::TaggedRightCollision)),
            left_rel.map(|(t, j)| (t, EventKind::LeftRelabel(j))),
            right_rel.map(|(t, j)| (t, EventKind::RightRelabel(j))),
        ];
        let mut best = Event { time: horizon, kind: EventKind::Horizon };
        for (t, kind) in candidates.into_iter().flatten() {
            if t <= horizon && (t < best.time || best.kind == EventKind::Horizon && t == best.time) {
                best = Event { time: t, kind };
            }
        }
        best
    }

    /// Moves the system to `event.time` and performs the event.
    pub fn apply(&mut self, event: Event) -> Result<()> {
        let te = event.time;
        match event.kind {
            EventKind::Horizon => {}
            EventKind::TaggedRightCollision | EventKind::TaggedLeftCollision => {
                let x = self.tagged.at(te);
                let nb = if event.kind == EventKind::TaggedRightCollision { &mut self.right } else { &mut self.left };
                let (vt, vg) = collide_tagged(self.mass, self.tagged.v, nb.v);
                self.tagged = Ballistic::new(x, vt, te);
                *nb = Ballistic::new(x, vg, te);
            }
            EventKind::RightRelabel(j) | EventKind::LeftRelabel(j) => {
                let (nb, pool, sentinel) = match event.kind {
                    EventKind::RightRelabel(_) => (&mut self.right, &mut self.right_pool, self.right_sentinel),
                    _ => (&mut self.left, &mut self.left_pool, self.left_sentinel),
                };
                if sentinel == Some(j) {
                    return Err(Error::InsufficientWindow { time: te });
                }
                let x = nb.at(te);
                let incoming = Ballistic::new(x, pool.velocity(j), te);
                pool.set(j, x, nb.v, te);
                *nb = incoming;
            }
        }
        if event.kind != EventKind::Horizon {
            self.event_count += 1;
        }
        self.t = te;
        Ok(())
    }

    /// `(position, velocity)` of every followed particle at `t >= self.t`,
    /// sorted by position.
    pub fn all_particles(&self, t: f64) -> Vec<(f64, f64)> {
        let mut x: Vec<(f64, f64)> = [self.tagged, self.right, self.left]
            .into_iter()
            .chain(self.right_pool.iter())
            .chain(self.left_pool.iter())
            .map(|b| (b.at(t), b.v))
            .collect();
        x.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        x
    }

    pub fn all_positions(&self, t: f64) -> Vec<f64> {
        self.all_particles(t).into_iter().map(|p| p.0).collect()
    }

    pub(crate) fn snapshot(&self, t: f64, k: usize) -> Snapshot {
        let r = self.right.at(t);
        let l = self.left.at(t);
        let mut right = vec![r];
        right.extend(self.right_pool.nearest(t, k.saturating_sub(1)));
        let mut left = vec![l];
        left.extend(self.left_pool.nearest(t, k.saturating_sub(1)));
        Snapshot { center: 0.5 * (r + l), right, left }
    }
}

/// Steps a Type I state event by event, caching the pool scans that the
/// last event did not invalidate.
#[derive(Debug, Clone)]
pub struct Type1Sim {
    state: TypeIState,
    horizon: f64,
    event_cap: u64,
    left_rel: Option<Option<(f64, usize)>>,
    right_rel: Option<Option<(f64, usize)>>,
}

impl Type1Sim {
    pub fn new(state: TypeIState, horizon: f64, event_cap: u64) -> Self {
        Type1Sim { state, horizon, event_cap, left_rel: None, right_rel: None }
    }

    pub fn state(&self) -> &TypeIState {
        &self.state
    }

    pub fn into_state(self) -> TypeIState {
        self.state
    }

    /// The event that [`Type1Sim::advance`] would perform next.
    pub fn peek(&mut self) -> Event {
        let s = &self.state;
        let left = *self.left_rel.get_or_insert_with(|| s.relabel_time(Side::Left));
        let right = *self.right_rel.get_or_insert_with(|| s.relabel_time(Side::Right));
        s.pick(self.horizon, left, right)
    }

    pub fn advance(&mut self, event: Event) -> Result<()> {
        if self.state.event_count >= self.event_cap {
            return Err(Error::InstabilityCap { cap: self.event_cap, time: event.time });
        }
        self.state.apply(event)?;
        match event.kind {
            EventKind::TaggedLeftCollision | EventKind::LeftRelabel(_) => self.left_rel = None,
            EventKind::TaggedRightCollision | EventKind::RightRelabel(_) => self.right_rel = None,
            EventKind::Horizon => {}
        }
        Ok(())
    }

    /// Performs and returns the next event.
    pub fn step(&mut self) -> Result<Event> {
        let ev = self.peek();
        self.advance(ev)?;
        Ok(ev)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub observe: Observe,
    pub event_cap: u64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { observe: Observe::default(), event_cap: DEFAULT_EVENT_CAP }
    }
}

/// Runs the Type I dynamics to `horizon`, sampling the tagged displacement
/// `Q_t` (and whatever `opts.observe` asks for) every `step`.
pub fn run_type1(initial: TypeIState, horizon: f64, step: f64, opts: &EngineOptions) -> Result<TrajectoryRecord> {
    let grid = time_grid(horizon, step)?;
    let obs = opts.observe;
    let t0 = initial.t;
    let q0 = initial.tagged.at(t0);
    let m0 = 0.5 * (initial.right.at(t0) + initial.left.at(t0));
    let mut q = Vec::with_capacity(grid.len());
    let mut q_tilde = obs.q_tilde.then(|| Vec::with_capacity(grid.len()));
    let mut snaps = (obs.track > 0).then(|| Vec::with_capacity(grid.len()));
    let mut wz = obs.wz.then(|| vec![(t0, initial.wz(t0))]);

    let mut sim = Type1Sim::new(initial, t0 + grid[grid.len() - 1], opts.event_cap);
    let mut next = 0;
    loop {
        let ev = sim.peek();
        let s = sim.state();
        while next < grid.len() && t0 + grid[next] <= ev.time {
            let g = t0 + grid[next];
            q.push(s.tagged.at(g) - q0);
            if let Some(qt) = q_tilde.as_mut() {
                qt.push(0.5 * (s.right.at(g) + s.left.at(g)) - m0);
            }
            if let Some(sn) = snaps.as_mut() {
                sn.push(s.snapshot(g, obs.track));
            }
            next += 1;
        }
        if ev.kind == EventKind::Horizon {
            break;
        }
        sim.advance(ev)?;
        if let Some(w) = wz.as_mut() {
            if matches!(ev.kind, EventKind::TaggedLeftCollision | EventKind::TaggedRightCollision) {
                w.push((ev.time, sim.state().wz(ev.time)));
            }
        }
    }
    // grid points that coincide with the horizon to rounding
    while q.len() < grid.len() {
        let s = sim.state();
        let g = t0 + grid[q.len()];
        q.push(s.tagged.at(g) - q0);
        if let Some(qt) = q_tilde.as_mut() {
            qt.push(0.5 * (s.right.at(g) + s.left.at(g)) - m0);
        }
        if let Some(sn) = snaps.as_mut() {
            sn.push(s.snapshot(g, obs.track));
        }
    }
    Ok(TrajectoryRecord {
        grid,
        q,
        q_tilde,
        wz,
        snapshots: snaps,
        events: sim.state().event_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(side: Side, pts: &[(f64, f64)]) -> HalfLineConfig {
        HalfLineConfig::finite(side, pts.to_vec())
    }

    #[test]
    fn equal_masses_exchange() {
        assert_eq!(collide_tagged(1.0, 2.0, -1.0), (-1.0, 2.0));
    }

    #[test]
    fn collision_examples() {
        // unique solutions of momentum and energy conservation with reversed relative velocity
        let (v, w) = collide_tagged(3.0, 0.0, 2.0);
        assert!((v - 1.0).abs() < 1e-15 && (w + 1.0).abs() < 1e-15);
        let (v, w) = collide_tagged(1.0 / 3.0, 1.0, 0.0);
        assert!((v + 0.5).abs() < 1e-15 && (w - 0.5).abs() < 1e-15);
    }

    #[test]
    fn collision_conserves() {
        for &(m, a, b) in &[(0.01, 3.0, -0.2), (7.0, -1.0, 0.4), (1e-6, 1e3, 0.5)] {
            let (x, y) = collide_tagged(m, a, b);
            let p0 = m * a + b;
            let e0 = m * a * a + b * b;
            assert!((m * x + y - p0).abs() <= 1e-12 * p0.abs().max(1.0));
            assert!((m * x * x + y * y - e0).abs() <= 1e-12 * e0);
        }
    }

    #[test]
    fn first_event_right_collision() {
        let right = line(Side::Right, &[(0.0, 0.0), (5.0, 2.0)]);
        let left = line(Side::Left, &[(0.0, -3.0), (-5.0, -4.0)]);
        // u = 1 puts the right neighbour at z = 2 and the left one at 0
        let mut s = TypeIState::from_configuration(1.0, 1.0, 2.0, 1.0, &right, &left).unwrap();
        s.left = Ballistic::new(-1.0, -3.0, 0.0);
        let ev = s.next_event(100.0);
        assert_eq!(ev.kind, EventKind::TaggedRightCollision);
        assert!((ev.time - 2.0).abs() < 1e-15);
    }

    #[test]
    fn receding_scene_reaches_horizon() {
        let right = line(Side::Right, &[(0.0, 2.0), (1.0, 3.0)]);
        let left = line(Side::Left, &[(0.0, -2.0), (-1.0, -3.0)]);
        let s = TypeIState::from_configuration(1.0, 0.5, 2.0, 0.0, &right, &left).unwrap();
        assert_eq!(s.next_event(10.0), Event { time: 10.0, kind: EventKind::Horizon });
        let rec = run_type1(s, 3.0, 0.5, &EngineOptions::default()).unwrap();
        for (t, q) in rec.grid.iter().zip(&rec.q) {
            assert!((q - 0.5 * t).abs() < 1e-14);
        }
        assert_eq!(rec.events, 0);
    }

    #[test]
    fn equal_mass_takes_over_velocity() {
        let right = line(Side::Right, &[(0.0, -1.0)]);
        let left = line(Side::Left, &[(0.0, -5.0)]);
        let s = TypeIState::from_configuration(1.0, 1.0, 2.0, 1.0, &right, &left).unwrap();
        // neighbour at 2 moving at -1 meets the tagged particle at t = 1
        let rec = run_type1(s, 3.0, 0.5, &EngineOptions::default()).unwrap();
        for (t, q) in rec.grid.iter().zip(&rec.q) {
            let expect = if *t <= 1.0 { *t } else { 1.0 - (t - 1.0) };
            assert!((q - expect).abs() < 1e-14, "t={t}: {q} vs {expect}");
        }
    }

    #[test]
    fn relabel_swaps_trajectories() {
        // right neighbour at 1 moving +1, pool particle at 2 moving -1: meet at t = 0.5
        let right = line(Side::Right, &[(0.0, 1.0), (1.0, -1.0)]);
        let left = line(Side::Left, &[(0.0, -1.0)]);
        let mut s = TypeIState::from_configuration(1.0, 0.0, 2.0, 0.0, &right, &left).unwrap();
        let ev = s.next_event(10.0);
        assert_eq!(ev.kind, EventKind::RightRelabel(0));
        assert!((ev.time - 0.5).abs() < 1e-15);
        let p = s.followed_momentum();
        s.apply(ev).unwrap();
        assert_eq!(s.right.v, -1.0);
        assert_eq!(s.right_pool.velocity(0), 1.0);
        assert_eq!(s.followed_momentum(), p);
        assert!((s.right.at(0.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn sentinel_relabel_is_window_error() {
        let mut right = line(Side::Right, &[(0.0, 1.0), (1.0, -1.0)]);
        right.sentinel = true;
        let left = line(Side::Left, &[(0.0, -1.0)]);
        let s = TypeIState::from_configuration(1.0, 0.0, 2.0, 0.0, &right, &left).unwrap();
        let err = run_type1(s, 3.0, 0.1, &EngineOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientWindow { .. }));
    }

    #[test]
    fn event_cap_trips() {
        let right = line(Side::Right, &[(0.0, 0.0)]);
        let left = line(Side::Left, &[(0.0, 0.0)]);
        let s = TypeIState::from_configuration(1e-6, 1e3, 1.0, 0.0, &right, &left).unwrap();
        let opts = EngineOptions { event_cap: 100, ..Default::default() };
        assert!(matches!(run_type1(s, 1.0, 0.1, &opts), Err(Error::InstabilityCap { cap: 100, .. })));
    }

    #[test]
    fn tie_prefers_collision_then_left() {
        let right = line(Side::Right, &[(0.0, -1.0)]);
        let left = line(Side::Left, &[(0.0, 1.0)]);
        let s = TypeIState::from_configuration(1.0, 0.0, 2.0, 0.0, &right, &left).unwrap();
        assert_eq!(s.next_event(10.0).kind, EventKind::TaggedLeftCollision);
    }
}
