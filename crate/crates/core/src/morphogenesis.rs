//! The four morphogenetic system classes and their per-step hooks.
//!
//! Each class adds one capability to the previous one: a homogeneous swarm
//! has one type; a heterogeneous swarm mixes types; a re-differentiable swarm
//! lets particles redraw their type from the recipe they carry; an
//! information-sharing swarm additionally copies recipes from neighbors and
//! biases the redraw toward types that are locally under-represented.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Neighbors, Particle, StepReport, World};
use crate::recipe::{KineticParams, Recipe};
use crate::rng::{substream, Stream, SubRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub enum SwarmClass {
    #[serde(rename = "homogeneous")]
    Homogeneous,
    #[default]
    #[serde(rename = "heterogeneous")]
    Heterogeneous,
    #[serde(rename = "rediff", alias = "redifferentiable")]
    Redifferentiable,
    #[serde(rename = "infoshare", alias = "info_sharing")]
    InfoSharing,
}

impl SwarmClass {
    pub const ALL: [SwarmClass; 4] = [
        SwarmClass::Homogeneous,
        SwarmClass::Heterogeneous,
        SwarmClass::Redifferentiable,
        SwarmClass::InfoSharing,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SwarmClass::Homogeneous => "homogeneous",
            SwarmClass::Heterogeneous => "heterogeneous",
            SwarmClass::Redifferentiable => "rediff",
            SwarmClass::InfoSharing => "infoshare",
        }
    }
}

impl std::str::FromStr for SwarmClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "homogeneous" => Ok(SwarmClass::Homogeneous),
            "heterogeneous" => Ok(SwarmClass::Heterogeneous),
            "rediff" | "redifferentiable" => Ok(SwarmClass::Redifferentiable),
            "infoshare" | "info_sharing" => Ok(SwarmClass::InfoSharing),
            other => Err(format!("unknown swarm class '{other}'")),
        }
    }
}

/// Index of a recipe entry drawn with probability proportional to `weights`
/// (entry counts when `None`).
pub fn draw_entry<R: Rng + ?Sized>(recipe: &Recipe, weights: Option<&[f64]>, rng: &mut R) -> usize {
    let base: Vec<f64>;
    let w = match weights {
        Some(w) => w,
        None => {
            base = recipe.entries().iter().map(|e| e.count as f64).collect();
            &base
        }
    };
    let total: f64 = w.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, x) in w.iter().enumerate() {
        acc += x;
        if u < acc {
            return k;
        }
    }
    // rounding at the top end
    w.iter().rposition(|x| *x > 0.0).unwrap_or(w.len() - 1)
}

/// Quota-filling weights: `(desired - observed local fraction)+` per entry,
/// falling back to the desired fractions when nothing is under-represented.
pub fn quota_weights(recipe: &Recipe, local_types: &[KineticParams]) -> Vec<f64> {
    let total = recipe.total_count() as f64;
    let desired: Vec<f64> = recipe.entries().iter().map(|e| e.count as f64 / total).collect();
    if local_types.is_empty() {
        return desired;
    }
    let n = local_types.len() as f64;
    let weights: Vec<f64> = recipe
        .entries()
        .iter()
        .zip(&desired)
        .map(|(e, d)| {
            let observed = local_types.iter().filter(|t| **t == e.params).count() as f64 / n;
            (d - observed).max(0.0)
        })
        .collect();
    if weights.iter().sum::<f64>() > 0.0 {
        weights
    } else {
        desired
    }
}

/// With probability `p_differentiate`, redraw the active type from the carried
/// recipe. Returns the new parameters when a draw happened.
pub fn differentiate<R: Rng + ?Sized>(
    p: &Particle,
    p_differentiate: f64,
    weights: Option<&[f64]>,
    rng: &mut R,
) -> Option<KineticParams> {
    if rng.random::<f64>() >= p_differentiate {
        return None;
    }
    let k = draw_entry(&p.recipe, weights, rng);
    Some(p.recipe.entries()[k].params)
}

/// With probability `p_share`, adopt the recipe of a uniformly chosen neighbor.
pub fn share_information<R: Rng + ?Sized>(
    neighbors: &[&Particle],
    p_share: f64,
    rng: &mut R,
) -> Option<Arc<Recipe>> {
    if rng.random::<f64>() >= p_share || neighbors.is_empty() {
        return None;
    }
    let j = rng.random_range(0..neighbors.len());
    Some(Arc::clone(&neighbors[j].recipe))
}

#[derive(Debug, Clone, Default)]
struct HookOutcome {
    recipe: Option<Arc<Recipe>>,
    params: Option<KineticParams>,
}

fn diff_rng(seed: u64, step: u64, i: usize) -> SubRng {
    substream(seed, step, i as u64, Stream::Differentiate)
}

/// Run the class-specific hook on every particle, reading the post-motion state.
pub fn apply_class_hooks(world: &mut World, neighbors: &Neighbors<'_>, report: &mut StepReport) {
    let class = world.config().class;
    if class < SwarmClass::Redifferentiable {
        return;
    }
    let seed = world.config().seed;
    let step = report.step;
    let p_diff = world.config().p_differentiate;
    let share_r = world.config().info_share_radius;
    let particles = world.particles();
    let outcomes: Vec<HookOutcome> = (0..particles.len())
        .into_par_iter()
        .with_min_len(512)
        .map(|i| {
            let p = &particles[i];
            let mut out = HookOutcome::default();
            if class == SwarmClass::InfoSharing {
                let mut share = substream(seed, step, i as u64, Stream::Share);
                if share.random::<f64>() < p_diff {
                    let local = local_particles(particles, neighbors, i, share_r);
                    if !local.is_empty() {
                        let j = share.random_range(0..local.len());
                        out.recipe = Some(Arc::clone(&local[j].recipe));
                    }
                }
            }
            let mut rng = diff_rng(seed, step, i);
            if rng.random::<f64>() < p_diff {
                let recipe: &Recipe = out.recipe.as_deref().unwrap_or(&p.recipe);
                let weights = if class == SwarmClass::InfoSharing {
                    let local: Vec<KineticParams> =
                        local_particles(particles, neighbors, i, share_r).iter().map(|q| q.active).collect();
                    Some(quota_weights(recipe, &local))
                } else {
                    None
                };
                let k = draw_entry(recipe, weights.as_deref(), &mut rng);
                out.params = Some(recipe.entries()[k].params);
            }
            out
        })
        .collect();
    commit(world, outcomes, report);
}

fn local_particles<'a>(particles: &'a [Particle], neighbors: &Neighbors<'_>, i: usize, r: f64) -> Vec<&'a Particle> {
    let mut ids = Vec::new();
    neighbors.for_each_within(particles[i].position, r, Some(i), |j, _, _| ids.push(j));
    ids.sort_unstable();
    ids.into_iter().map(|j| &particles[j]).collect()
}

fn commit(world: &mut World, outcomes: Vec<HookOutcome>, report: &mut StepReport) {
    for (i, out) in outcomes.into_iter().enumerate() {
        if let Some(r) = out.recipe {
            if *r != *world.particles()[i].recipe {
                report.adoptions += 1;
            }
            world.particles_mut()[i].recipe = r;
        }
        if let Some(params) = out.params {
            let id = world.intern_type(params);
            let p = &mut world.particles_mut()[i];
            if id != p.type_id {
                p.adopt_type(params, id);
                report.differentiations += 1;
            }
        }
    }
    world.counters_mut().differentiations += report.differentiations as u64;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::WorldConfig;
    use crate::recipe::parse_recipe;
    use crate::rng::seeded;

    const A: &str = "(50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)";
    const B: &str = "(20, 1, 2, 0.1, 0.2, 3, 0, 1)";

    fn particle(recipe: &Recipe) -> Particle {
        let params = recipe.entries()[0].params;
        Particle {
            position: [1.0, 2.0, 0.0],
            velocity: [1.0, 0.0, 0.0],
            active: params,
            type_id: 0,
            recipe: Arc::new(recipe.clone()),
        }
    }

    #[test]
    fn zero_probability_never_redraws() {
        let r = parse_recipe(&format!("5 * {A}\n5 * {B}")).unwrap();
        let p = particle(&r);
        let mut rng = seeded(1, Stream::Differentiate);
        for _ in 0..1000 {
            assert_eq!(differentiate(&p, 0.0, None, &mut rng), None);
        }
    }

    #[test]
    fn single_entry_redraw_is_noop() {
        let r = parse_recipe(&format!("5 * {A}")).unwrap();
        let p = particle(&r);
        let mut rng = seeded(2, Stream::Differentiate);
        assert_eq!(differentiate(&p, 1.0, None, &mut rng), Some(p.active));
        let mut q = p.clone();
        q.adopt_type(p.active, 0);
        assert_eq!(q, p);
    }

    #[test]
    fn count_weighted_draw_frequency() {
        let r = parse_recipe(&format!("75 * {A}\n25 * {B}")).unwrap();
        let a = parse_recipe(&format!("1 * {A}")).unwrap().entries()[0].params;
        let p = particle(&r);
        let mut hits = 0;
        for t in 0..10_000u64 {
            let mut rng = substream(77, t, 0, Stream::Differentiate);
            if differentiate(&p, 1.0, None, &mut rng) == Some(a) {
                hits += 1;
            }
        }
        let f = hits as f64 / 10_000.0;
        assert!((f - 0.75).abs() <= 0.02, "{f}");
    }

    #[test]
    fn quota_weights_favor_missing_types() {
        let r = parse_recipe(&format!("50 * {A}\n50 * {B}")).unwrap();
        let a = r.entries().iter().find(|e| e.params.r_perception() == 50.0).unwrap().params;
        let w = quota_weights(&r, &[a, a, a]);
        let ia = r.entries().iter().position(|e| e.params == a).unwrap();
        assert_eq!(w[ia], 0.0);
        assert!((w[1 - ia] - 0.5).abs() < 1e-12);
        assert_eq!(quota_weights(&r, &[]), vec![0.5, 0.5]);
    }

    #[test]
    fn sharing_without_neighbors_is_noop() {
        let mut rng = seeded(3, Stream::Share);
        assert!(share_information(&[], 1.0, &mut rng).is_none());
    }

    #[test]
    fn sharing_adopts_common_recipe() {
        let r = parse_recipe(&format!("5 * {A}\n5 * {B}")).unwrap();
        let other = parse_recipe(&format!("5 * {B}")).unwrap();
        let n1 = particle(&other);
        let n2 = particle(&other);
        let mut rng = seeded(4, Stream::Share);
        let got = share_information(&[&n1, &n2], 1.0, &mut rng).unwrap();
        assert_eq!(*got, other);
        assert_ne!(*got, r);
    }

    #[test]
    fn class_order_is_cumulative() {
        assert!(SwarmClass::Homogeneous < SwarmClass::Heterogeneous);
        assert!(SwarmClass::Heterogeneous < SwarmClass::Redifferentiable);
        assert!(SwarmClass::Redifferentiable < SwarmClass::InfoSharing);
        for c in SwarmClass::ALL {
            assert_eq!(c.name().parse::<SwarmClass>().unwrap(), c);
        }
    }

    #[test]
    fn heterogeneous_histogram_constant() {
        let cfg = WorldConfig { class: SwarmClass::Heterogeneous, seed: 5, ..WorldConfig::default() };
        let mut w = World::new(cfg).unwrap();
        w.spawn(&parse_recipe(&format!("30 * {A}\n20 * {B}")).unwrap(), [400.0, 400.0, 0.0], 60.0)
            .unwrap();
        let h0 = w.type_histogram();
        for _ in 0..100 {
            w.step();
            assert_eq!(w.type_histogram(), h0);
        }
    }
}
