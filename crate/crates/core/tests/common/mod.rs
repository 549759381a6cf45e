//! Direct-definition oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use swarm_chemistry::evolution::compete_rng;
use swarm_chemistry::geometry::{Boundary, Space, Vector};
use swarm_chemistry::recipe::RecipeSampler;
use swarm_chemistry::{CompetitionRule, Recipe, World, WorldConfig};

pub fn dist2(space: &Space, a: Vector, b: Vector) -> f64 {
    let mut s = 0.0;
    for k in 0..space.dim {
        let mut d = (b[k] - a[k]).abs();
        if space.boundary == Boundary::Toroidal {
            d = d.min(space.extent[k] - d);
        }
        s += d * d;
    }
    s
}

pub fn brute_neighbors(positions: &[Vector], space: &Space, i: usize, r: f64) -> Vec<usize> {
    (0..positions.len()).filter(|&j| j != i && dist2(space, positions[i], positions[j]) < r * r).collect()
}

fn min_image(space: &Space, from: Vector, to: Vector) -> Vector {
    let mut d = [0.0; 3];
    for k in 0..space.dim {
        let mut x = to[k] - from[k];
        if space.boundary == Boundary::Toroidal {
            let l = space.extent[k];
            if x > l / 2.0 {
                x -= l;
            } else if x < -l / 2.0 {
                x += l;
            }
        }
        d[k] = x;
    }
    d
}

fn speed(v: Vector) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Winner of the pair `(a, b)` straight from each rule's definition.
pub fn compete_oracle(world: &World, a: usize, b: usize, rule: CompetitionRule) -> usize {
    let ps = world.particles();
    let space = world.space();
    let (sa, sb) = match rule {
        CompetitionRule::Faster => (speed(ps[a].velocity), speed(ps[b].velocity)),
        CompetitionRule::Slower => (-speed(ps[a].velocity), -speed(ps[b].velocity)),
        CompetitionRule::FromBehind => {
            let d = min_image(space, ps[a].position, ps[b].position);
            let n = speed(d);
            if n == 0.0 {
                (0.0, 0.0)
            } else {
                let u = [d[0] / n, d[1] / n, d[2] / n];
                let dot = |v: Vector| v[0] * u[0] + v[1] * u[1] + v[2] * u[2];
                (dot(ps[a].velocity).max(0.0), (-dot(ps[b].velocity)).max(0.0))
            }
        }
        CompetitionRule::Majority => {
            let count = |i: usize| {
                let r = ps[i].active.r_perception();
                (0..ps.len())
                    .filter(|&j| {
                        j != i && ps[j].type_id == ps[i].type_id && dist2(space, ps[i].position, ps[j].position) < r * r
                    })
                    .count() as f64
            };
            (count(a), count(b))
        }
    };
    if sa > sb {
        a
    } else if sb > sa {
        b
    } else if compete_rng(world.config().seed, world.step_count(), a, b).random::<bool>() {
        a
    } else {
        b
    }
}

/// Random world for competition checks: few types (so majority counts tie
/// sometimes), random velocities, and a share of exactly equal speeds.
pub fn random_compete_world(seed: u64) -> World {
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let dim = if seed % 2 == 0 { 2 } else { 3 };
    let boundary = if seed % 3 == 0 { Boundary::Open } else { Boundary::Toroidal };
    let cfg = WorldConfig { seed, dimensionality: dim, extent: vec![200.0; dim], boundary, ..Default::default() };
    let mut w = World::new(cfg).unwrap();
    let sampler = RecipeSampler { max_types: 3, ..Default::default() };
    let n = rng.random_range(10..80);
    let recipe: Recipe = sampler.recipe(n, &mut rng);
    w.spawn(&recipe, [100.0; 3], 100.0).unwrap();
    let space = *w.space();
    for p in w.particles_mut() {
        p.position = space.random_position(&mut rng);
        let mut v = [0.0; 3];
        for x in v.iter_mut().take(dim) {
            *x = rng.random_range(-5.0..5.0);
        }
        if rng.random::<f64>() < 0.3 {
            v = [3.0, 0.0, 0.0];
        }
        p.velocity = v;
    }
    w
}

/// Min-max scaling with zero-range columns removed.
pub fn naive_normalize(vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = vs[0].len();
    let mut keep = Vec::new();
    for k in 0..d {
        let lo = vs.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min);
        let hi = vs.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            keep.push((k, lo, hi));
        }
    }
    vs.iter().map(|v| keep.iter().map(|&(k, lo, hi)| (v[k] - lo) / (hi - lo)).collect()).collect()
}

/// Enumerate every grid cell (at most 3 dimensions) and count the occupied ones.
pub fn naive_coverage(normalized: &[Vec<f64>], res: u32) -> usize {
    let d = normalized[0].len();
    assert!(d <= 3);
    let bin = |x: f64| ((x * res as f64).floor() as i64).clamp(0, res as i64 - 1);
    let total = (res as usize).pow(d as u32);
    let mut occupied = 0;
    for cell in 0..total {
        let mut coords = Vec::with_capacity(d);
        let mut c = cell;
        for _ in 0..d {
            coords.push((c % res as usize) as i64);
            c /= res as usize;
        }
        if normalized.iter().any(|v| v.iter().zip(&coords).all(|(x, q)| bin(*x) == *q)) {
            occupied += 1;
        }
    }
    occupied
}

pub fn naive_mean_pairwise(vs: &[Vec<f64>]) -> f64 {
    let n = vs.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += vs[i].iter().zip(&vs[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            }
        }
    }
    sum / (n * (n - 1)) as f64
}

fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

pub fn naive_entropy(vs: &[Vec<f64>], lambda: f64) -> f64 {
    let n = vs.len() as f64;
    let d = vs[0].len();
    let mean: Vec<f64> = (0..d).map(|k| vs.iter().map(|v| v[k]).sum::<f64>() / n).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in 0..d {
            cov[a][b] = vs.iter().map(|v| (v[a] - mean[a]) * (v[b] - mean[b])).sum::<f64>() / (n - 1.0);
        }
        cov[a][a] += lambda;
    }
    0.5 * ((2.0 * std::f64::consts::PI * std::f64::consts::E).powi(d as i32) * det(cov)).ln()
}

pub fn random_vectors(rng: &mut Pcg64Mcg, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-3.0..7.0)).collect()).collect()
}

use swarm_chemistry::analytics::Frame;
use swarm_chemistry::engine::{Counters, TypeRegistry};

pub fn synthetic_frame(step: u64, space: Space, positions: Vec<Vector>, velocities: Vec<Vector>) -> Frame {
    let n = positions.len();
    Frame { step, space, positions, velocities, type_ids: vec![0; n], counters: Counters::default() }
}

pub fn one_type_registry() -> TypeRegistry {
    let mut t = TypeRegistry::default();
    t.intern(swarm_chemistry::KineticParams::new([50.0, 5.0, 10.0, 0.5, 0.5, 10.0, 0.1, 0.5]));
    t
}

/// A 10x6 lattice (spacing 2) whose left and right halves drift apart at
/// 2 units per step each, observed every step for `steps` steps.
pub fn fission_trajectory(steps: u64) -> Vec<Frame> {
    let space = Space::new(2, [1000.0, 1000.0, 0.0], Boundary::Open);
    (0..=steps)
        .map(|t| {
            let mut pos = Vec::new();
            let mut vel = Vec::new();
            for k in 0..60 {
                let (col, row) = (k % 10, k / 10);
                let dir = if col < 5 { -2.0 } else { 2.0 };
                pos.push([490.0 + col as f64 * 2.0 + dir * t as f64, 500.0 + row as f64 * 2.0, 0.0]);
                vel.push([dir, 0.0, 0.0]);
            }
            synthetic_frame(t, space, pos, vel)
        })
        .collect()
}

/// Malformed recipe texts and the error each must produce: `empty`,
/// `syntax line:column` or `range <first field>`.
pub const MALFORMED: &[(&str, &str)] = &[
    ("", "empty"),
    ("   \n# nothing\n", "empty"),
    ("(1, 2, 3, 0.1, 0.1, 1, 0.1, 0.5)", "syntax 1:1"),
    ("10 (1, 2, 3, 0.1, 0.1, 1, 0.1, 0.5)", "syntax 1:4"),
    ("10 * 1, 2, 3, 0.1, 0.1, 1, 0.1, 0.5)", "syntax 1:6"),
    ("10 * (1, 2, 3, 0.1, 0.1, 1, 0.1)", "syntax 1:32"),
    ("10 * (1, 2, 3, 0.1, 0.1, 1, 0.1, 0.5", "syntax 1:37"),
    ("10 * (1, 2, x, 0.1, 0.1, 1, 0.1, 0.5)", "syntax 1:13"),
    ("10 * (1, 2, 3..4, 0.1, 0.1, 1, 0.1, 0.5)", "syntax 1:13"),
    ("10 * (1, 2, 3, 0.1, 0.1, 1, 0.1, 0.5) extra", "syntax 1:39"),
    ("ten * (1, 2, 3, 0.1, 0.1, 1, 0.1, 0.5)", "syntax 1:1"),
    ("1 * (1, 2, 3, 0.1, 0.1, 1, 0.1, 0.5)\n2 * (1; 2)", "syntax 2:7"),
    ("0 * (1, 2, 3, 0.1, 0.1, 1, 0.1, 0.5)", "range count"),
    ("-3 * (1, 2, 3, 0.1, 0.1, 1, 0.1, 0.5)", "range count"),
    ("99999999 * (1, 2, 3, 0.1, 0.1, 1, 0.1, 0.5)", "range count"),
    ("5 * (400, 2, 3, 0.1, 0.1, 1, 0.1, 0.5)", "range r_perception"),
    ("5 * (40, 9, 3, 0.1, 0.1, 1, 0.1, 0.5)", "range v_normal"),
    ("5 * (40, 2, 3, 1.5, 0.1, 1, 0.1, 0.5)", "range w_cohesion"),
    ("5 * (40, 2, 3, 0.1, -0.1, 1, 0.1, 0.5)", "range w_alignment"),
    ("5 * (40, 2, 3, 0.1, 0.1, 101, 0.1, 0.5)", "range w_separation"),
    ("5 * (40, 2, 3, 0.1, 0.1, 1, 0.9, 0.5)", "range p_random_steer"),
    ("5 * (40, 2, 3, 0.1, 0.1, 1, 0.1, 2)", "range w_pacekeeping"),
    ("5 * (40, 2, 3, 0.1, 0.1, 1, 0.1, 1e999)", "range w_pacekeeping"),
    ("1 * (1, 2, 3, 0.1, 0.1, 1, 0.1, 0.5)\n\n3 * (1, 2, 50, 0.1, 0.1, 1, 0.1, 0.5)", "range v_max"),
];
