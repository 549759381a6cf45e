//! Behavior vectors, diversity measurement and object harvesting.

pub mod cluster;
pub mod diversity;
pub mod ensemble;
pub mod features;
pub mod harvest;
pub mod trajectory;

use serde::{Deserialize, Serialize};

pub use cluster::{connected_components, UnionFind};
pub use diversity::{
    bootstrap_diversity, bootstrap_diversity_pooled, diversity_coverage, diversity_entropy, diversity_mean_pairwise,
    diversity_report, gaussian_entropy, median, BootstrapConfig, BootstrapDistribution, DiversityReport, Normalizer,
};
pub use ensemble::{compare_groups, ensemble_recipe, run_ensemble, EnsembleSpec};
pub use features::{centroid, compute_behavior_vector, AnalyticsError, BehaviorVector, Feature, FeatureRegistry};
pub use harvest::{harvest_to_text, HarvestConfig, HarvestTracker, HarvestedObject};
pub use trajectory::{Frame, FrameRecorder};

use crate::engine::{run, RunError, World};

/// Which frames of a run feed the behavior vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    /// Trailing steps of the run.
    pub window: u64,
    /// Sampling interval inside the window.
    pub sample: u64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { window: 200, sample: 5 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MeasureError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

/// Advance `world` by `n_steps` and evaluate the registry on the trailing window.
pub fn run_and_measure(
    world: &mut World,
    n_steps: u64,
    window: &WindowConfig,
    registry: &FeatureRegistry,
) -> Result<BehaviorVector, MeasureError> {
    let target = world.step_count() + n_steps;
    let mut rec = FrameRecorder::new(window.sample, target.saturating_sub(window.window));
    run(world, n_steps, &mut [&mut rec])?;
    Ok(compute_behavior_vector(&rec.frames, registry)?)
}
