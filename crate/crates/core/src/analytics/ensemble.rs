//! Ensembles of random-recipe runs and class-by-class diversity comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diversity::{bootstrap_diversity_pooled, BootstrapConfig, BootstrapDistribution, Normalizer};
use super::features::{AnalyticsError, BehaviorVector, FeatureRegistry};
use super::{run_and_measure, MeasureError, WindowConfig};
use crate::engine::{World, WorldConfig};
use crate::morphogenesis::SwarmClass;
use crate::recipe::{ParamRanges, Recipe, RecipeSampler};
use crate::rng::{mix64, substream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub runs: usize,
    pub particles: u32,
    pub steps: u64,
    pub spawn_radius: f64,
    pub world: WorldConfig,
    pub window: WindowConfig,
    pub registry: FeatureRegistry,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            runs: 500,
            particles: 300,
            steps: 2000,
            spawn_radius: 150.0,
            world: WorldConfig::default(),
            window: WindowConfig::default(),
            registry: FeatureRegistry::default(),
        }
    }
}

/// Random recipe for run `run`. Runs with the same index share one draw
/// across classes; the homogeneous class keeps only the most populous type.
pub fn ensemble_recipe(seed: u64, run: u64, particles: u32, ranges: &ParamRanges, class: SwarmClass) -> Recipe {
    let mut rng = substream(seed, run, 0, Stream::Batch);
    let sampler = RecipeSampler { ranges: *ranges, ..Default::default() };
    let r = sampler.recipe(particles, &mut rng);
    if class == SwarmClass::Homogeneous {
        let top = r.entries().iter().max_by_key(|e| e.count).expect("non-empty");
        return Recipe::single(particles, top.params);
    }
    r
}

/// Behavior vectors of `spec.runs` independent runs of one class, in run order.
pub fn run_ensemble(spec: &EnsembleSpec, class: SwarmClass, seed: u64) -> Result<Vec<BehaviorVector>, MeasureError> {
    (0..spec.runs as u64)
        .into_par_iter()
        .map(|run| {
            let world_cfg = WorldConfig { seed: mix64(seed ^ mix64(run)), class, ..spec.world.clone() };
            let mut world = World::new(world_cfg).expect("validated world config");
            let recipe = ensemble_recipe(seed, run, spec.particles, &spec.world.ranges, class);
            let center = world.space().center();
            world.spawn(&recipe, center, spec.spawn_radius).expect("spawn within limits");
            run_and_measure(&mut world, spec.steps, &spec.window, &spec.registry)
        })
        .collect()
}

/// Bootstrap every group on one shared scale, fitted on all groups pooled.
pub fn compare_groups<L: Clone>(
    groups: &[(L, Vec<BehaviorVector>)],
    config: &BootstrapConfig,
    seed: u64,
) -> Result<Vec<(L, BootstrapDistribution)>, AnalyticsError> {
    let pooled: Vec<&[f64]> = groups.iter().flat_map(|(_, vs)| vs.iter().map(|v| v.values.as_slice())).collect();
    let normalizer = Normalizer::fit(&pooled)?;
    groups
        .iter()
        .enumerate()
        .map(|(k, (label, vs))| {
            let mut rng = substream(seed, k as u64, 1, Stream::Bootstrap);
            Ok((label.clone(), bootstrap_diversity_pooled(vs, &normalizer, config, &mut rng)?))
        })
        .collect()
}
