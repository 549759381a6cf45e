//! Heterogeneous swarm chemistry.
//!
//! Recipe-parameterized self-propelled particles in 2D or 3D, the four
//! morphogenetic system classes, collision-driven recipe evolution with
//! pluggable competition rules, behavioral-diversity analytics, object
//! harvesting, persistence, and a session service for interactive evolution.

pub mod analytics;
pub mod cli;
pub mod engine;
pub mod evolution;
pub mod geometry;
pub mod io;
pub mod morphogenesis;
pub mod recipe;
pub mod rng;
pub mod service;

pub use engine::{Particle, StepReport, World, WorldConfig};
pub use evolution::CompetitionRule;
pub use morphogenesis::SwarmClass;
pub use recipe::{parse_recipe, serialize_recipe, KineticParams, MutationConfig, Recipe};
