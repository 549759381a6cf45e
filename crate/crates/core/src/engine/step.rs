//! The synchronous update rule.
//!
//! For particle `i` with neighbor set `N = {j : dist(i, j) < r_perception}`:
//!
//! * `N` empty: `a` is a random unit vector times the steering magnitude.
//! * otherwise `a = w_c (<x>_N - x_i) + w_a (<v>_N - v_i) + w_s sum_j (x_i - x_j) / max(d_ij^2, eps)`,
//!   plus, with probability `p_random_steer`, a random steering vector.
//!
//! Then `v += a`, `v` is capped at `v_max`, relaxed toward `v_normal` by the
//! pacekeeping weight, `x += v` and the boundary rule is applied.

use rand::Rng;
use rayon::prelude::*;

use super::{Neighbors, Particle, World};
use crate::evolution::{self, TransmissionRecord};
use crate::geometry::{self, Space, Vector, ZERO};
use crate::morphogenesis;
use crate::rng::{substream, Stream};

pub const EPSILON: f64 = 1e-6;

/// What happened during one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    /// Index of the step that was executed (the world's step count before it).
    pub step: u64,
    pub collisions: usize,
    pub transmissions: Vec<TransmissionRecord>,
    pub differentiations: usize,
    pub adoptions: usize,
    pub environment: Vec<evolution::EnvironmentEvent>,
}

/// New `(position, velocity)` of particle `i`, read entirely from `particles`.
#[inline]
pub fn particle_motion(
    i: usize,
    particles: &[Particle],
    neighbors: &Neighbors<'_>,
    space: &Space,
    steer_magnitude: f64,
    seed: u64,
    step: u64,
) -> (Vector, Vector) {
    let p = &particles[i];
    let k = &p.active;
    let mut count = 0usize;
    let mut sum_dx = ZERO;
    let mut sum_v = ZERO;
    let mut sep = ZERO;
    neighbors.for_each_within(p.position, k.r_perception(), Some(i), |j, d, d2| {
        count += 1;
        let vj = particles[j].velocity;
        let inv = 1.0 / d2.max(EPSILON);
        for c in 0..3 {
            sum_dx[c] += d[c];
            sum_v[c] += vj[c];
            sep[c] -= d[c] * inv;
        }
    });
    let mut rng = substream(seed, step, i as u64, Stream::Motion);
    let mut a = if count == 0 {
        geometry::scale(geometry::random_unit(&mut rng, space.dim), steer_magnitude)
    } else {
        let inv_n = 1.0 / count as f64;
        let mut a = ZERO;
        for c in 0..3 {
            a[c] = k.w_cohesion() * sum_dx[c] * inv_n
                + k.w_alignment() * (sum_v[c] * inv_n - p.velocity[c])
                + k.w_separation() * sep[c];
        }
        a
    };
    if count > 0 && rng.random::<f64>() < k.p_random_steer() {
        a = geometry::add(a, geometry::scale(geometry::random_unit(&mut rng, space.dim), steer_magnitude));
    }
    let mut v = geometry::add(p.velocity, a);
    let s = geometry::norm(v);
    if s > k.v_max() {
        v = geometry::scale(v, k.v_max() / s);
    }
    let s = geometry::norm(v);
    let wp = k.w_pacekeeping();
    v = geometry::scale(v, wp * k.v_normal() / s.max(EPSILON) + (1.0 - wp));
    let s = geometry::norm(v);
    if s > k.v_max() {
        v = geometry::scale(v, k.v_max() / s);
    }
    let mut x = geometry::add(p.position, v);
    space.confine(&mut x, &mut v);
    (x, v)
}

impl World {
    /// Advance one synchronous step: motion, class hooks, collisions, environment.
    pub fn step(&mut self) -> StepReport {
        let step = self.step_count();
        let mut report = StepReport { step, ..StepReport::default() };
        let space = *self.space();
        let seed = self.config().seed;
        let steer = self.config().steer_magnitude;
        let search = self.config().neighbor_search;

        let positions: Vec<Vector> = self.particles().iter().map(|p| p.position).collect();
        let max_r = self.particles().iter().map(|p| p.active.r_perception()).fold(0.0, f64::max);
        let updates: Vec<(Vector, Vector)> = {
            let neighbors = Neighbors::build(search, &positions, &space, max_r);
            let particles = self.particles();
            (0..particles.len())
                .into_par_iter()
                .with_min_len(256)
                .map(|i| particle_motion(i, particles, &neighbors, &space, steer, seed, step))
                .collect()
        };
        for (p, (x, v)) in self.particles_mut().iter_mut().zip(updates) {
            p.position = x;
            p.velocity = v;
        }

        let class = self.config().class;
        let competition = self.config().competition;
        let needs_index = class == crate::morphogenesis::SwarmClass::InfoSharing || competition.is_some();
        if needs_index || class >= crate::morphogenesis::SwarmClass::Redifferentiable {
            let positions: Vec<Vector> = self.particles().iter().map(|p| p.position).collect();
            let max_r = self.particles().iter().map(|p| p.active.r_perception()).fold(0.0, f64::max);
            let radius = max_r.max(self.config().collision_radius).max(self.config().info_share_radius);
            let neighbors = if needs_index {
                Neighbors::build(search, &positions, &space, radius)
            } else {
                Neighbors::BruteForce { positions: &[], space }
            };
            morphogenesis::apply_class_hooks(self, &neighbors, &mut report);
            if let Some(rule) = competition {
                evolution::collide_and_transmit(self, rule, &neighbors, &mut report);
            }
        }

        self.advance_step_count();
        if !self.config().environment.is_empty() {
            let schedule = self.config().environment.clone();
            evolution::perturb_environment(self, &schedule, &mut report);
        }
        report
    }
}
