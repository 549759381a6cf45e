//! Kinetic core: particles, worlds, the neighbor index and the per-step update.

mod index;
pub mod run;
mod snapshot;
mod step;

pub use index::{NeighborIndex, NeighborSearch, Neighbors};
pub use run::{run, FnObserver, Observer, ObserverFailure, RunError};
pub use snapshot::{fnv1a, load_snapshot, save_snapshot, state_hash, SnapshotError, SNAPSHOT_VERSION};
pub use step::{particle_motion, StepReport, EPSILON};

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{CompetitionRule, Perturbation};
use crate::geometry::{self, Boundary, Space, Vector};
use crate::morphogenesis::SwarmClass;
use crate::recipe::{KineticParams, MutationConfig, ParamRanges, Recipe};
use crate::rng::{substream, Stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid world configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("a homogeneous world admits only single-type recipes (got {types} types)")]
    HomogeneousMultiType { types: usize },
    #[error("spawning {requested} particles would exceed the population limit {limit}")]
    PopulationExceeded { requested: usize, limit: usize },
}

/// Everything that fixes a world's dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    pub dimensionality: usize,
    pub extent: Vec<f64>,
    pub boundary: Boundary,
    pub seed: u64,
    pub class: SwarmClass,
    pub competition: Option<CompetitionRule>,
    pub mutation: MutationConfig,
    pub collision_radius: f64,
    pub p_differentiate: f64,
    pub info_share_radius: f64,
    /// Magnitude of random steering (world units per step squared).
    pub steer_magnitude: f64,
    pub max_population: usize,
    pub ranges: ParamRanges,
    pub environment: Vec<Perturbation>,
    pub neighbor_search: NeighborSearch,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            dimensionality: 2,
            extent: vec![800.0, 800.0],
            boundary: Boundary::Toroidal,
            seed: 0,
            class: SwarmClass::Heterogeneous,
            competition: None,
            mutation: MutationConfig::default(),
            collision_radius: 10.0,
            p_differentiate: 0.005,
            info_share_radius: 50.0,
            steer_magnitude: 0.5,
            max_population: 100_000,
            ranges: ParamRanges::default(),
            environment: Vec::new(),
            neighbor_search: NeighborSearch::Grid,
        }
    }
}

impl WorldConfig {
    /// Every problem found, as `(field path, message)` pairs.
    pub fn problems(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if !(self.dimensionality == 2 || self.dimensionality == 3) {
            out.push(("dimensionality".into(), format!("must be 2 or 3, got {}", self.dimensionality)));
        } else if self.extent.len() != self.dimensionality {
            out.push((
                "extent".into(),
                format!("expected {} components, got {}", self.dimensionality, self.extent.len()),
            ));
        }
        for (k, e) in self.extent.iter().enumerate() {
            if !(e.is_finite() && *e > 0.0) {
                out.push((format!("extent[{k}]"), format!("must be > 0, got {e}")));
            }
        }
        for (name, r) in [
            ("collision_radius", self.collision_radius),
            ("info_share_radius", self.info_share_radius),
            ("steer_magnitude", self.steer_magnitude),
        ] {
            if !(r.is_finite() && r >= 0.0) {
                out.push((name.into(), format!("must be >= 0, got {r}")));
            }
        }
        if !(0.0..=1.0).contains(&self.p_differentiate) {
            out.push(("p_differentiate".into(), format!("probability {} outside [0, 1]", self.p_differentiate)));
        }
        for (f, m) in self.mutation.problems() {
            out.push((format!("mutation.{f}"), m));
        }
        for (f, m) in self.ranges.problems() {
            out.push((format!("ranges.{f}"), m));
        }
        for (i, p) in self.environment.iter().enumerate() {
            for (f, m) in p.problems() {
                out.push((format!("environment[{i}].{f}"), m));
            }
        }
        out
    }

    pub fn space(&self) -> Space {
        let mut e = [0.0; 3];
        for (k, x) in self.extent.iter().take(3).enumerate() {
            e[k] = *x;
        }
        Space::new(self.dimensionality, e, self.boundary)
    }
}

/// Interns kinetic parameter tuples; equal tuples share one id.
#[derive(Debug, Clone, Default)]
pub struct TypeRegistry {
    params: Vec<KineticParams>,
    ids: HashMap<KineticParams, u32>,
}

impl TypeRegistry {
    pub fn intern(&mut self, p: KineticParams) -> u32 {
        if let Some(&id) = self.ids.get(&p) {
            return id;
        }
        let id = self.params.len() as u32;
        self.params.push(p);
        self.ids.insert(p, id);
        id
    }

    pub fn id_of(&self, p: &KineticParams) -> Option<u32> {
        self.ids.get(p).copied()
    }

    pub fn get(&self, id: u32) -> &KineticParams {
        &self.params[id as usize]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn all(&self) -> &[KineticParams] {
        &self.params
    }
}

impl PartialEq for TypeRegistry {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vector,
    pub velocity: Vector,
    pub active: KineticParams,
    pub type_id: u32,
    pub recipe: Arc<Recipe>,
}

impl Particle {
    /// Switch to a new active type; direction kept, speed set to the new `v_normal`.
    pub fn adopt_type(&mut self, params: KineticParams, type_id: u32) {
        if type_id == self.type_id {
            return;
        }
        let s = geometry::norm(self.velocity);
        if s > 0.0 {
            self.velocity = geometry::scale(self.velocity, params.v_normal() / s);
        }
        self.active = params;
        self.type_id = type_id;
    }

    pub fn speed(&self) -> f64 {
        geometry::norm(self.velocity)
    }
}

/// Running totals of informational events.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub collisions: u64,
    pub transmissions: u64,
    pub differentiations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    config: WorldConfig,
    space: Space,
    particles: Vec<Particle>,
    types: TypeRegistry,
    step_count: u64,
    spawn_count: u64,
    counters: Counters,
}

impl World {
    pub fn new(config: WorldConfig) -> Result<Self, EngineError> {
        let problems = config.problems();
        if !problems.is_empty() {
            return Err(EngineError::Config(problems.into_iter().map(|(f, m)| format!("{f}: {m}")).collect()));
        }
        let space = config.space();
        Ok(World {
            config,
            space,
            particles: Vec::new(),
            types: TypeRegistry::default(),
            step_count: 0,
            spawn_count: 0,
            counters: Counters::default(),
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    /// Direct access for scripted scenarios; callers keep positions inside the extent.
    pub fn particles_mut(&mut self) -> &mut [Particle] {
        &mut self.particles
    }

    pub fn types(&self) -> &TypeRegistry {
        &self.types
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn intern_type(&mut self, p: KineticParams) -> u32 {
        self.types.intern(p)
    }

    /// Add `total_count(recipe)` particles uniformly in the ball around `center`.
    ///
    /// Velocities point in random directions with the type's `v_normal` speed.
    /// Every new particle carries `recipe`.
    pub fn spawn(&mut self, recipe: &Recipe, center: Vector, radius: f64) -> Result<Range<usize>, EngineError> {
        self.spawn_shared(Arc::new(recipe.clone()), center, radius)
    }

    pub fn spawn_shared(&mut self, recipe: Arc<Recipe>, center: Vector, radius: f64) -> Result<Range<usize>, EngineError> {
        let total = recipe.total_count() as usize;
        if self.particles.len() + total > self.config.max_population {
            return Err(EngineError::PopulationExceeded {
                requested: self.particles.len() + total,
                limit: self.config.max_population,
            });
        }
        if self.config.class == SwarmClass::Homogeneous {
            if recipe.len() > 1 {
                return Err(EngineError::HomogeneousMultiType { types: recipe.len() });
            }
            let p = recipe.entries()[0].params;
            if self.particles.iter().any(|q| q.active != p) {
                return Err(EngineError::HomogeneousMultiType { types: 2 });
            }
        }
        let dim = self.space.dim;
        let mut rng = substream(self.config.seed, self.spawn_count, 0, Stream::Spawn);
        self.spawn_count += 1;
        let start = self.particles.len();
        let radius = radius.max(0.0);
        for entry in recipe.entries() {
            let type_id = self.types.intern(entry.params);
            for _ in 0..entry.count {
                let mut position = if radius > 0.0 {
                    geometry::random_in_ball(&mut rng, dim, center, radius)
                } else {
                    center
                };
                if dim == 2 {
                    position[2] = 0.0;
                }
                let mut velocity = geometry::scale(geometry::random_unit(&mut rng, dim), entry.params.v_normal());
                self.space.confine(&mut position, &mut velocity);
                self.particles.push(Particle {
                    position,
                    velocity,
                    active: entry.params,
                    type_id,
                    recipe: Arc::clone(&recipe),
                });
            }
        }
        Ok(start..self.particles.len())
    }

    /// Distinct carried recipes, in first-seen particle order.
    pub fn distinct_recipes(&self) -> Vec<Arc<Recipe>> {
        let mut seen: HashMap<&Recipe, ()> = HashMap::new();
        let mut out = Vec::new();
        for p in &self.particles {
            if seen.insert(&p.recipe, ()).is_none() {
                out.push(Arc::clone(&p.recipe));
            }
        }
        out
    }

    /// Histogram of active type ids, indexed by id.
    pub fn type_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.types.len()];
        for p in &self.particles {
            h[p.type_id as usize] += 1;
        }
        h
    }

    pub(crate) fn set_space(&mut self, space: Space) {
        self.space = space;
    }

    pub(crate) fn counters_mut(&mut self) -> &mut Counters {
        &mut self.counters
    }

    pub(crate) fn from_parts(
        config: WorldConfig,
        space: Space,
        particles: Vec<Particle>,
        types: TypeRegistry,
        step_count: u64,
        spawn_count: u64,
        counters: Counters,
    ) -> Self {
        World { config, space, particles, types, step_count, spawn_count, counters }
    }

    pub(crate) fn spawn_count(&self) -> u64 {
        self.spawn_count
    }

    pub(crate) fn advance_step_count(&mut self) {
        self.step_count += 1;
    }

    pub(crate) fn boundary_swapped(&self) -> Boundary {
        match self.space.boundary {
            Boundary::Toroidal => Boundary::Open,
            Boundary::Open => Boundary::Toroidal,
        }
    }
}
