//! Closed-form motion of two unit masses repelling through `U(z) = c^2 / (2 z^2)`.
//!
//! The relative coordinate obeys `z'' = 2 c^2 / z^3`, so with
//! `K = z'^2 / 2 + c^2 / z^2` conserved, `d^2(z^2)/dt^2 = 4K` and
//!
//! ```text
//! z(t)^2 = (z + z' t)^2 + 2 (c t / z)^2
//! ```
//!
//! The second form is a sum of squares and stays accurate near turning points.
//! The centre of mass moves uniformly.

use crate::error::{Error, Result};
use crate::trajectory::Side;

/// Roots closer to zero than this are reported as "now".
pub const ROOT_EPS: f64 = 1e-12;
/// Relative discriminant band treated as a tangency.
pub const TANGENCY_EPS: f64 = 1e-12;
/// Relative gap below which a free particle counts as touching the pair.
pub const CONTACT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairState {
    pub t_ref: f64,
    pub x_cm: f64,
    pub v_cm: f64,
    /// Separation `x_{+1} - x_{-1}`.
    pub z: f64,
    pub z_dot: f64,
    /// Interaction strength; `c = 0` is a hard-core (specular) pair.
    pub c: f64,
}

impl PairState {
    pub fn from_particles(t: f64, left: (f64, f64), right: (f64, f64), c: f64) -> Self {
        PairState {
            t_ref: t,
            x_cm: 0.5 * (left.0 + right.0),
            v_cm: 0.5 * (left.1 + right.1),
            z: right.0 - left.0,
            z_dot: right.1 - left.1,
            c,
        }
    }

    /// `K = z'^2 / 2 + c^2 / z^2`, twice the energy of the relative motion.
    #[inline]
    pub fn relative_energy(&self) -> f64 {
        0.5 * self.z_dot * self.z_dot + self.potential_term()
    }

    /// `c^2 / z^2`, taken as 0 for a hard-core pair.
    #[inline]
    fn potential_term(&self) -> f64 {
        if self.c == 0.0 {
            0.0
        } else {
            self.c * self.c / (self.z * self.z)
        }
    }

    /// Kinetic plus potential energy of both particles.
    #[inline]
    pub fn pair_energy(&self) -> f64 {
        self.v_cm * self.v_cm + 0.25 * self.z_dot * self.z_dot + 0.5 * self.potential_term()
    }

    /// Positions of particles -1 and +1.
    #[inline]
    pub fn positions(&self) -> (f64, f64) {
        (self.x_cm - 0.5 * self.z, self.x_cm + 0.5 * self.z)
    }

    /// Velocities of particles -1 and +1.
    #[inline]
    pub fn velocities(&self) -> (f64, f64) {
        (self.v_cm - 0.5 * self.z_dot, self.v_cm + 0.5 * self.z_dot)
    }

    /// `(position, velocity)` of the central particle on `side`.
    #[inline]
    pub fn particle(&self, side: Side) -> (f64, f64) {
        let s = 0.5 * side.sign();
        (self.x_cm + s * self.z, self.v_cm + s * self.z_dot)
    }

    /// Exact state after `dt >= 0`.
    pub fn propagate(&self, dt: f64) -> PairState {
        let lin = self.z + self.z_dot * dt;
        let bend = if self.c == 0.0 { 0.0 } else { self.c * dt / self.z };
        let z = (lin * lin + 2.0 * bend * bend).sqrt();
        let z_dot = if z > 0.0 {
            (self.z_dot * lin + 2.0 * self.potential_term() * dt) / z
        } else {
            // hard-core contact; leave with the reflected velocity
            self.z_dot.abs()
        };
        PairState {
            t_ref: self.t_ref + dt,
            x_cm: self.x_cm + self.v_cm * dt,
            v_cm: self.v_cm,
            z,
            z_dot,
            c: self.c,
        }
    }

    /// Smallest separation reached at or after `t_ref`.
    pub fn min_separation(&self) -> f64 {
        if self.z_dot >= 0.0 {
            self.z
        } else {
            self.c / self.relative_energy().sqrt()
        }
    }

    /// Time after `t_ref` at which the central particle on `side` meets the
    /// free particle `(position, velocity)` given at `t_ref`.
    ///
    /// Squaring `z(t) = 2 g(t)`, where `g` is the free particle's distance
    /// from the centre of mass, gives a quadratic in `t`; roots with `g < 0`
    /// belong to the mirror image and are dropped. A free particle already
    /// touching the pair yields `Some(0.0)` unless it is moving away.
    pub fn crossing_time_with_free(&self, free: (f64, f64), side: Side) -> Result<Option<f64>> {
        let (p, w) = free;
        let (a, b) = match side {
            Side::Right => (p - self.x_cm, w - self.v_cm),
            Side::Left => (self.x_cm - p, self.v_cm - w),
        };
        let z = self.z;
        let gap = 2.0 * a - z;
        let tol = CONTACT_EPS * z.abs().max(a.abs()).max(1.0);
        if gap < -tol {
            return Err(Error::WrongSide {
                position: p,
                pair_edge: self.particle(side).0,
            });
        }
        let two_k = 2.0 * self.relative_energy();
        let qa = two_k - 4.0 * b * b;
        let qb = 2.0 * z * self.z_dot - 8.0 * a * b;

        if gap <= tol {
            // touching: D(t) = 2 g(t) - z(t) is concave, so it goes negative
            // immediately unless it starts out increasing
            if 2.0 * b - self.z_dot <= 0.0 {
                return Ok(Some(0.0));
            }
            if qa == 0.0 {
                return Ok(None);
            }
            let t = -qb / qa;
            return Ok((t > ROOT_EPS && a + b * t >= 0.0).then_some(t));
        }

        let qc = (z - 2.0 * a) * (z + 2.0 * a);
        let mut roots = [f64::NAN; 2];
        if qa == 0.0 {
            if qb != 0.0 {
                roots[0] = -qc / qb;
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            let scale = qb * qb + (4.0 * qa * qc).abs();
            if disc < -TANGENCY_EPS * scale {
                return Ok(None);
            } else if disc <= TANGENCY_EPS * scale {
                roots[0] = -qb / (2.0 * qa);
            } else {
                let sq = disc.sqrt();
                let q = -0.5 * (qb + qb.signum() * sq);
                roots[0] = q / qa;
                if q != 0.0 {
                    roots[1] = qc / q;
                }
            }
        }
        if roots[1] < roots[0] {
            roots.swap(0, 1);
        }
        Ok(roots
            .into_iter()
            .filter(|r| r.is_finite() && *r > -ROOT_EPS)
            .map(|r| if r < ROOT_EPS { 0.0 } else { r })
            .find(|&r| a + b * r >= 0.0))
    }
}

pub fn propagate_pair(s: &PairState, dt: f64) -> PairState {
    s.propagate(dt)
}

pub fn pair_energy(s: &PairState) -> f64 {
    s.pair_energy()
}

pub fn crossing_time_with_free(s: &PairState, free: (f64, f64), side: Side) -> Result<Option<f64>> {
    s.crossing_time_with_free(free, side)
}
