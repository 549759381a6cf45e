//! Candidate populations for interactive evolution.
//!
//! Passive use: the user picks favorites with `select` and the population is
//! refilled with offspring. Active use: `mix` and `mutate` append hand-made
//! candidates.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frame::encode_frame;
use crate::engine::{World, WorldConfig};
use crate::morphogenesis::SwarmClass;
use crate::recipe::{mix_recipes, mutate_recipe, MutationConfig, Recipe, RecipeSampler};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IecConfig {
    pub population: usize,
    /// Upper bound on population size between selections.
    pub max_population: usize,
    pub thumbnail_cap: u64,
    pub thumbnail_steps: u64,
    pub thumbnail_frame_interval: u64,
    pub mutation: MutationConfig,
}

impl Default for IecConfig {
    fn default() -> Self {
        IecConfig {
            population: 9,
            max_population: 36,
            thumbnail_cap: 150,
            thumbnail_steps: 300,
            thumbnail_frame_interval: 30,
            mutation: MutationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IecError {
    #[error("unknown candidate {0}")]
    UnknownCandidate(u64),
    #[error("population bound violated: {0}")]
    Bounds(String),
    #[error("thumbnail run failed: {0}")]
    Thumbnail(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u64,
    pub recipe: Recipe,
    /// Parent candidate ids.
    pub parents: Vec<u64>,
}

/// Encoded frames of a short reduced-size run of one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Thumbnail {
    pub candidate: u64,
    pub frames: Vec<Vec<u8>>,
}

#[derive(Debug, Clone)]
pub struct IecPopulation {
    pub config: IecConfig,
    seed: u64,
    ops: u64,
    next_id: u64,
    pub generation: u64,
    candidates: Vec<Candidate>,
}

impl IecPopulation {
    /// Random initial population drawn from `sampler`.
    pub fn random(config: IecConfig, sampler: &RecipeSampler, seed: u64) -> Self {
        let mut rng = substream(seed, 0, u64::MAX, Stream::Iec);
        let total = config.thumbnail_cap.clamp(1, u32::MAX as u64) as u32;
        let recipes: Vec<Recipe> = (0..config.population).map(|_| sampler.recipe(total, &mut rng)).collect();
        Self::from_recipes(config, recipes, seed)
    }

    pub fn from_recipes(config: IecConfig, recipes: Vec<Recipe>, seed: u64) -> Self {
        let mut pop = IecPopulation { config, seed, ops: 0, next_id: 0, generation: 0, candidates: Vec::new() };
        for r in recipes {
            pop.push(r, Vec::new());
        }
        pop
    }

    fn push(&mut self, recipe: Recipe, parents: Vec<u64>) -> &Candidate {
        let id = self.next_id;
        self.next_id += 1;
        self.candidates.push(Candidate { id, recipe, parents });
        self.candidates.last().unwrap()
    }

    fn rng(&mut self) -> crate::rng::SubRng {
        self.ops += 1;
        substream(self.seed, self.ops, self.generation, Stream::Iec)
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn get(&self, id: u64) -> Result<&Candidate, IecError> {
        self.candidates.iter().find(|c| c.id == id).ok_or(IecError::UnknownCandidate(id))
    }

    /// Keep the selected candidates and refill to `population` with offspring:
    /// a mix of two random selected parents when at least two were chosen,
    /// then mutation.
    pub fn select(&mut self, ids: &[u64], ranges: &crate::recipe::ParamRanges) -> Result<Vec<Candidate>, IecError> {
        if ids.is_empty() {
            return Err(IecError::Bounds("select needs at least one candidate".into()));
        }
        let mut seen = HashSet::new();
        let mut chosen = Vec::new();
        for &id in ids {
            if seen.insert(id) {
                chosen.push(self.get(id)?.clone());
            }
        }
        if chosen.len() > self.config.population {
            return Err(IecError::Bounds(format!(
                "{} selected but the population holds {}",
                chosen.len(),
                self.config.population
            )));
        }
        let mut rng = self.rng();
        self.generation += 1;
        let mut next = chosen.clone();
        let mut offspring = Vec::new();
        while next.len() + offspring.len() < self.config.population {
            let a = &chosen[rand::Rng::random_range(&mut rng, 0..chosen.len())];
            let (recipe, parents) = if chosen.len() >= 2 {
                let b = &chosen[rand::Rng::random_range(&mut rng, 0..chosen.len())];
                (mix_recipes(&a.recipe, &b.recipe, &mut rng), vec![a.id, b.id])
            } else {
                (a.recipe.clone(), vec![a.id])
            };
            let recipe = mutate_recipe(&recipe, &self.config.mutation, ranges, &mut rng);
            offspring.push((recipe, parents));
        }
        self.candidates = std::mem::take(&mut next);
        for (r, p) in offspring {
            self.push(r, p);
        }
        Ok(self.candidates.clone())
    }

    fn room(&self) -> Result<(), IecError> {
        if self.candidates.len() >= self.config.max_population {
            return Err(IecError::Bounds(format!("population already at its maximum {}", self.config.max_population)));
        }
        Ok(())
    }

    pub fn mix(&mut self, a: u64, b: u64) -> Result<Candidate, IecError> {
        self.room()?;
        let ra = self.get(a)?.recipe.clone();
        let rb = self.get(b)?.recipe.clone();
        let mut rng = self.rng();
        let recipe = mix_recipes(&ra, &rb, &mut rng);
        Ok(self.push(recipe, vec![a, b]).clone())
    }

    pub fn mutate(&mut self, id: u64, ranges: &crate::recipe::ParamRanges) -> Result<Candidate, IecError> {
        self.room()?;
        let r = self.get(id)?.recipe.clone();
        let mut rng = self.rng();
        let recipe = mutate_recipe(&r, &self.config.mutation, ranges, &mut rng);
        Ok(self.push(recipe, vec![id]).clone())
    }

    /// Short reduced-size run of one candidate in a world like `base`.
    pub fn thumbnail(&self, id: u64, base: &WorldConfig) -> Result<Thumbnail, IecError> {
        let c = self.get(id)?;
        let config = WorldConfig {
            seed: crate::rng::mix64(self.seed ^ id.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
            class: base.class.max(SwarmClass::Heterogeneous),
            competition: None,
            environment: Vec::new(),
            ..base.clone()
        };
        let mut world = World::new(config).map_err(|e| IecError::Thumbnail(e.to_string()))?;
        let center = world.space().center();
        let recipe = c.recipe.capped(self.config.thumbnail_cap);
        world.spawn(&recipe, center, 100.0).map_err(|e| IecError::Thumbnail(e.to_string()))?;
        let interval = self.config.thumbnail_frame_interval.max(1);
        let mut frames = vec![encode_frame(&world)];
        for _ in 0..self.config.thumbnail_steps {
            world.step();
            if world.step_count() % interval == 0 {
                frames.push(encode_frame(&world));
            }
        }
        Ok(Thumbnail { candidate: id, frames })
    }
}
