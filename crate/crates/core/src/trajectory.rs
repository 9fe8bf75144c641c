//! Free trajectories, observation grids and recorded paths shared by both engines.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// +1 on the right, -1 on the left.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

/// Uniform motion `x + v (t - t0)` in the lab frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ballistic {
    pub x: f64,
    pub v: f64,
    pub t0: f64,
}

impl Ballistic {
    pub fn new(x: f64, v: f64, t0: f64) -> Self {
        Ballistic { x, v, t0 }
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        self.x + self.v * (t - self.t0)
    }

    /// Same motion, re-anchored at time `t`.
    #[inline]
    pub fn rebased(&self, t: f64) -> Ballistic {
        Ballistic { x: self.at(t), v: self.v, t0: t }
    }
}

/// What a run records besides the displacement of the observation point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Observe {
    /// Displacement of the midpoint of the two particles adjacent to the centre.
    pub q_tilde: bool,
    /// `(t, W z)` at tagged collisions (Type I) or `(t, c)` at swaps (Type II).
    pub wz: bool,
    /// Number of particles per side whose positions are snapshotted on the grid.
    pub track: usize,
}

impl Observe {
    pub fn displacement_only() -> Self {
        Observe::default()
    }
}

/// Lab-frame positions of the particles nearest to the centre at one grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Midpoint of the particles of index -1 and +1.
    pub center: f64,
    /// Positions of particles +1, +2, ... (increasing).
    pub right: Vec<f64>,
    /// Positions of particles -1, -2, ... (decreasing).
    pub left: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub grid: Vec<f64>,
    pub q: Vec<f64>,
    pub q_tilde: Option<Vec<f64>>,
    pub wz: Option<Vec<(f64, f64)>>,
    pub snapshots: Option<Vec<Snapshot>>,
    pub events: u64,
}

impl TrajectoryRecord {
    pub fn horizon(&self) -> f64 {
        *self.grid.last().unwrap_or(&0.0)
    }
}

/// Observation times `0, dt, 2 dt, ...` up to and including `horizon`
/// (to within 1e-9 relative).
pub fn time_grid(horizon: f64, step: f64) -> Result<Vec<f64>> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Config(format!("grid step must be positive, got {step}")));
    }
    if step > horizon {
        return Err(Error::Config(format!("grid step {step} exceeds horizon {horizon}")));
    }
    let n = (horizon / step * (1.0 + 1e-9)).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * step).collect())
}

const BLOCK: usize = 32;

/// Free particles on one side, stored as `x = a + v t` in lab time.
///
/// Particles are grouped in blocks of 32 that remember their innermost
/// intercept and largest speed. No member of a block can be nearer than
/// `inner - speed * t` at time `t`, which lets scans skip whole blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct FreePool {
    side: Side,
    a: Vec<f64>,
    v: Vec<f64>,
    inner: Vec<f64>,
    speed: Vec<f64>,
}

impl FreePool {
    pub fn new(side: Side) -> Self {
        FreePool::with_capacity(side, 0)
    }

    pub fn with_capacity(side: Side, n: usize) -> Self {
        FreePool {
            side,
            a: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
            inner: Vec::with_capacity(n / BLOCK + 1),
            speed: Vec::with_capacity(n / BLOCK + 1),
        }
    }

    /// Pool of the lines `x0 + v t` given as `(x0, v)` pairs.
    pub fn from_lines(side: Side, lines: impl ExactSizeIterator<Item = (f64, f64)>) -> Self {
        let n = lines.len();
        let mut pool = FreePool::with_capacity(side, n);
        for (x, v) in lines {
            pool.a.push(x);
            pool.v.push(v);
        }
        let sg = side.sign();
        for (ca, cv) in pool.a.chunks(BLOCK).zip(pool.v.chunks(BLOCK)) {
            pool.inner.push(ca.iter().fold(f64::INFINITY, |m, &x| m.min(sg * x)));
            pool.speed.push(cv.iter().fold(0.0, |m: f64, &v| m.max(v.abs())));
        }
        pool
    }

    pub fn side(&self) -> Side {
        self.side
    }

    fn widen(&mut self, j: usize) {
        let b = j / BLOCK;
        if b == self.inner.len() {
            self.inner.push(f64::INFINITY);
            self.speed.push(0.0);
        }
        self.inner[b] = self.inner[b].min(self.side.sign() * self.a[j]);
        self.speed[b] = self.speed[b].max(self.v[j].abs());
    }

    pub fn push(&mut self, b: Ballistic) {
        self.a.push(b.x - b.v * b.t0);
        self.v.push(b.v);
        self.widen(self.a.len() - 1);
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    #[inline]
    pub fn position(&self, j: usize, t: f64) -> f64 {
        self.a[j] + self.v[j] * t
    }

    #[inline]
    pub fn velocity(&self, j: usize) -> f64 {
        self.v[j]
    }

    pub fn get(&self, j: usize) -> Ballistic {
        Ballistic::new(self.a[j], self.v[j], 0.0)
    }

    /// Replaces particle `j` by the line through `x` at time `t` with speed `v`.
    pub fn set(&mut self, j: usize, x: f64, v: f64, t: f64) {
        self.a[j] = x - v * t;
        self.v[j] = v;
        self.widen(j);
    }

    pub fn iter(&self) -> impl Iterator<Item = Ballistic> + '_ {
        self.a.iter().zip(&self.v).map(|(&a, &v)| Ballistic::new(a, v, 0.0))
    }

    pub fn velocities(&self) -> &[f64] {
        &self.v
    }

    /// Index ranges of the blocks whose members could be at signed
    /// distance `<= reach` from the origin at some time in `[0, t]`.
    pub fn blocks_within(&self, reach: f64, t: f64) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        let n = self.len();
        (0..self.inner.len())
            .filter(move |&b| self.inner[b] - self.speed[b] * t <= reach)
            .map(move |b| b * BLOCK..((b + 1) * BLOCK).min(n))
    }

    /// Earliest time `>= t` at which `line` meets a pool particle lying
    /// outside it, with the index of that particle.
    pub fn first_meeting(&self, line: Ballistic, t: f64) -> Option<(f64, usize)> {
        let s = self.side.sign();
        let xn = s * line.at(t);
        let vn = s * line.v;
        let mut best = f64::INFINITY;
        let mut idx = usize::MAX;
        for b in 0..self.inner.len() {
            let fastest = vn + self.speed[b];
            if fastest <= 0.0 {
                continue;
            }
            let bound = (self.inner[b] - self.speed[b] * t - xn).max(0.0) / fastest;
            if bound >= best {
                continue;
            }
            let end = ((b + 1) * BLOCK).min(self.len());
            for j in b * BLOCK..end {
                let v = self.v[j];
                let closing = vn - s * v;
                if closing > 0.0 {
                    let d = (s * (self.a[j] + v * t) - xn).max(0.0) / closing;
                    if d < best {
                        best = d;
                        idx = j;
                    }
                }
            }
        }
        (idx != usize::MAX).then_some((t + best, idx))
    }

    /// Positions at time `t` of the `k` particles nearest to the centre,
    /// ordered outward.
    pub fn nearest(&self, t: f64, k: usize) -> Vec<f64> {
        let mut pos: Vec<f64> = (0..self.len()).map(|j| self.position(j, t)).collect();
        match self.side {
            Side::Right => pos.sort_unstable_by(f64::total_cmp),
            Side::Left => pos.sort_unstable_by(|a, b| b.total_cmp(a)),
        }
        pos.truncate(k);
        pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_horizon() {
        let g = time_grid(20.0, 0.1).unwrap();
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], 0.0);
        assert!((g[200] - 20.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_rejects_bad_steps() {
        assert!(time_grid(1.0, 0.0).is_err());
        assert!(time_grid(1.0, -0.1).is_err());
        assert!(time_grid(0.0, 0.1).is_err());
        assert!(time_grid(1.0, 2.0).is_err());
    }

    #[test]
    fn rebase_keeps_the_line() {
        let b = Ballistic::new(1.0, -2.0, 0.5);
        let r = b.rebased(3.0);
        for t in [0.0, 1.0, 7.5] {
            assert!((b.at(t) - r.at(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn nearest_positions_sorted_outward() {
        let mut pool = FreePool::new(Side::Right);
        let mut left = FreePool::new(Side::Left);
        for x in [5.0, 2.0, 3.0] {
            pool.push(Ballistic::new(x, 0.0, 0.0));
            left.push(Ballistic::new(-x, 0.0, 0.0));
        }
        assert_eq!(pool.nearest(0.0, 2), vec![2.0, 3.0]);
        assert_eq!(left.nearest(0.0, 2), vec![-2.0, -3.0]);
    }

    #[test]
    fn first_meeting_picks_earliest() {
        let mut pool = FreePool::new(Side::Right);
        pool.push(Ballistic::new(4.0, -1.0, 0.0)); // meets x = 0 line at t = 4
        pool.push(Ballistic::new(3.0, 1.0, 0.0)); // never
        pool.push(Ballistic::new(6.0, -2.0, 0.0)); // t = 3
        let line = Ballistic::new(0.0, 0.0, 0.0);
        assert_eq!(pool.first_meeting(line, 0.0), Some((3.0, 2)));
        let mut mirrored = FreePool::new(Side::Left);
        for b in pool.iter() {
            mirrored.push(Ballistic::new(-b.x, -b.v, 0.0));
        }
        assert_eq!(mirrored.first_meeting(line, 0.0), Some((3.0, 2)));
        assert_eq!(pool.first_meeting(Ballistic::new(0.0, -5.0, 0.0), 0.0), None);
    }

    #[test]
    fn set_reanchors() {
        let mut pool = FreePool::new(Side::Right);
        pool.push(Ballistic::new(1.0, 2.0, 0.5));
        assert!((pool.position(0, 0.5) - 1.0).abs() < 1e-15);
        pool.set(0, 7.0, -1.0, 3.0);
        assert!((pool.position(0, 4.0) - 6.0).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn block_skipping_is_exact(seed in 0u64..1000, t in 0.0f64..20.0, xn in -3.0f64..3.0, vn in -3.0f64..3.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let side = if seed % 2 == 0 { Side::Right } else { Side::Left };
            let mut pool = FreePool::new(side);
            let mut x = 0.0;
            for _ in 0..150 {
                x += rng.random::<f64>() * 2.0;
                pool.push(Ballistic::new(side.sign() * (3.0 + x), rng.random::<f64>() * 6.0 - 3.0, 0.0));
            }
            for k in 0..5 {
                let j = rng.random_range(0..pool.len());
                pool.set(j, side.sign() * (3.0 + k as f64), rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * t);
            }
            let line = Ballistic::new(xn, vn, t);
            let mut brute: Option<(f64, usize)> = None;
            for (j, p) in pool.iter().enumerate() {
                let s = side.sign();
                let closing = s * (vn - p.v);
                if closing > 0.0 {
                    let d = (s * (p.at(t) - xn)).max(0.0) / closing;
                    if brute.is_none_or(|(b, _)| t + d < b) {
                        brute = Some((t + d, j));
                    }
                }
            }
            proptest::prop_assert_eq!(pool.first_meeting(line, t), brute);
        }
    }
}
