//! d-vector arithmetic and boundary handling shared by 2D and 3D worlds.
//!
//! Vectors always carry three components; in a 2D world the third component
//! is zero and stays zero, so both dimensionalities run the same code.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type Vector = [f64; 3];

pub const ZERO: Vector = [0.0; 3];

#[inline]
pub fn add(a: Vector, b: Vector) -> Vector {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vector, b: Vector) -> Vector {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vector, s: f64) -> Vector {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vector, b: Vector) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm_sq(a: Vector) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: Vector) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn cross(a: Vector, b: Vector) -> Vector {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Unit vector uniformly distributed on the sphere of the given dimension.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
    loop {
        let mut v = ZERO;
        for c in v.iter_mut().take(dim) {
            *c = rng.sample(StandardNormal);
        }
        let n = norm(v);
        if n > 1e-12 {
            return scale(v, 1.0 / n);
        }
    }
}

/// Point uniformly distributed in the ball of `radius` around `center`.
pub fn random_in_ball<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    center: Vector,
    radius: f64,
) -> Vector {
    let dir = random_unit(rng, dim);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dim as f64);
    add(center, scale(dir, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Toroidal,
    Open,
}

/// Dimensionality, per-axis extent and boundary rule of a world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Space {
    pub dim: usize,
    pub extent: Vector,
    pub boundary: Boundary,
}

impl Space {
    pub fn new(dim: usize, extent: Vector, boundary: Boundary) -> Self {
        let mut extent = extent;
        if dim == 2 {
            extent[2] = 0.0;
        }
        Space { dim, extent, boundary }
    }

    pub fn center(&self) -> Vector {
        scale(self.extent, 0.5)
    }

    /// Displacement `to - from` under the boundary rule (minimal image when toroidal).
    #[inline]
    pub fn delta(&self, from: Vector, to: Vector) -> Vector {
        let mut d = sub(to, from);
        if self.boundary == Boundary::Toroidal {
            for (k, c) in d.iter_mut().enumerate().take(self.dim) {
                let l = self.extent[k];
                if *c > 0.5 * l {
                    *c -= l;
                } else if *c < -0.5 * l {
                    *c += l;
                }
            }
        }
        d
    }

    #[inline]
    pub fn distance_sq(&self, a: Vector, b: Vector) -> f64 {
        norm_sq(self.delta(a, b))
    }

    /// Bring a position back inside the extent; reflects `velocity` on open walls.
    pub fn confine(&self, position: &mut Vector, velocity: &mut Vector) {
        for k in 0..self.dim {
            let l = self.extent[k];
            match self.boundary {
                Boundary::Toroidal => {
                    let mut x = position[k].rem_euclid(l);
                    // rem_euclid can round up to exactly l
                    if x >= l {
                        x = 0.0;
                    }
                    position[k] = x;
                }
                Boundary::Open => {
                    if position[k] < 0.0 {
                        position[k] = 0.0;
                        velocity[k] = velocity[k].abs();
                    } else if position[k] > l {
                        position[k] = l;
                        velocity[k] = -velocity[k].abs();
                    }
                }
            }
        }
    }

    pub fn contains(&self, p: Vector) -> bool {
        (0..self.dim).all(|k| match self.boundary {
            Boundary::Toroidal => p[k] >= 0.0 && p[k] < self.extent[k],
            Boundary::Open => p[k] >= 0.0 && p[k] <= self.extent[k],
        }) && (self.dim == 3 || p[2] == 0.0)
    }

    /// Uniform random position inside the extent.
    pub fn random_position<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let mut p = ZERO;
        for k in 0..self.dim {
            p[k] = rng.random::<f64>() * self.extent[k];
        }
        p
    }
}
