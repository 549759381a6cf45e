//! Collision-driven recipe transmission over a fixed population.
//!
//! When two particles come closer than the collision radius, a competition
//! rule picks a winner; the loser receives a (possibly mutated) copy of the
//! winner's recipe and immediately redraws its type from it. No particle is
//! ever created or removed.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{Neighbors, NeighborIndex, Particle, StepReport, World};
use crate::geometry::{self, Boundary, Space};
use crate::morphogenesis::draw_entry;
use crate::recipe::{mutate_recipe, MutationConfig, ParamRanges};
use crate::rng::{substream, Stream, SubRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompetitionRule {
    #[serde(rename = "faster")]
    Faster,
    #[serde(rename = "slower")]
    Slower,
    #[serde(rename = "behind", alias = "from_behind")]
    FromBehind,
    #[serde(rename = "majority")]
    Majority,
}

impl CompetitionRule {
    pub const ALL: [CompetitionRule; 4] =
        [CompetitionRule::Faster, CompetitionRule::Slower, CompetitionRule::FromBehind, CompetitionRule::Majority];

    pub fn name(&self) -> &'static str {
        match self {
            CompetitionRule::Faster => "faster",
            CompetitionRule::Slower => "slower",
            CompetitionRule::FromBehind => "behind",
            CompetitionRule::Majority => "majority",
        }
    }
}

impl std::str::FromStr for CompetitionRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "faster" => Ok(CompetitionRule::Faster),
            "slower" => Ok(CompetitionRule::Slower),
            "behind" | "from_behind" => Ok(CompetitionRule::FromBehind),
            "majority" => Ok(CompetitionRule::Majority),
            other => Err(format!("unknown competition rule '{other}'")),
        }
    }
}

/// Unordered colliding pair, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub a: usize,
    pub b: usize,
    pub step: u64,
}

/// One recipe transmission, as written to the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRecord {
    pub step: u64,
    pub pair: (usize, usize),
    pub rule: CompetitionRule,
    pub winner: usize,
    pub mutated: bool,
}

/// All pairs closer than `radius`, sorted by index pair.
pub fn detect_collisions_with(
    particles: &[Particle],
    neighbors: &Neighbors<'_>,
    radius: f64,
    step: u64,
) -> Vec<CollisionEvent> {
    let mut events = Vec::new();
    for (i, p) in particles.iter().enumerate() {
        let mut found: Vec<usize> = Vec::new();
        neighbors.for_each_within(p.position, radius, Some(i), |j, _, _| {
            if j > i {
                found.push(j);
            }
        });
        found.sort_unstable();
        events.extend(found.into_iter().map(|j| CollisionEvent { a: i, b: j, step }));
    }
    events
}

/// Collisions in the current state of `world` at its collision radius.
pub fn detect_collisions(world: &World) -> Vec<CollisionEvent> {
    let positions: Vec<_> = world.particles().iter().map(|p| p.position).collect();
    let radius = world.config().collision_radius;
    let neighbors = Neighbors::build(world.config().neighbor_search, &positions, world.space(), radius);
    detect_collisions_with(world.particles(), &neighbors, radius, world.step_count())
}

/// Number of other particles with the same type id within `i`'s own perception radius.
pub fn same_type_neighbors(particles: &[Particle], neighbors: &Neighbors<'_>, i: usize) -> usize {
    let p = &particles[i];
    let mut n = 0;
    neighbors.for_each_within(p.position, p.active.r_perception(), Some(i), |j, _, _| {
        if particles[j].type_id == p.type_id {
            n += 1;
        }
    });
    n
}

/// Generator for the tie-break of one pair in one step.
pub fn compete_rng(seed: u64, step: u64, a: usize, b: usize) -> SubRng {
    substream(seed, step, ((a as u64) << 32) ^ b as u64, Stream::Compete)
}

/// Generator for the mutation and redraw of one transmission.
pub fn transmit_rng(seed: u64, step: u64, a: usize, b: usize) -> SubRng {
    substream(seed, step, ((a as u64) << 32) ^ b as u64, Stream::Transmit)
}

/// Rule score of each contestant; the larger score wins, ties go to a coin flip.
fn scores(
    event: &CollisionEvent,
    rule: CompetitionRule,
    particles: &[Particle],
    space: &Space,
    neighbors: &Neighbors<'_>,
) -> (f64, f64) {
    let (pa, pb) = (&particles[event.a], &particles[event.b]);
    match rule {
        CompetitionRule::Faster => (pa.speed(), pb.speed()),
        CompetitionRule::Slower => (-pa.speed(), -pb.speed()),
        CompetitionRule::FromBehind => {
            let ab = space.delta(pa.position, pb.position);
            let d = geometry::norm(ab);
            if d == 0.0 {
                (0.0, 0.0)
            } else {
                let u = geometry::scale(ab, 1.0 / d);
                let closing_a = geometry::dot(pa.velocity, u).max(0.0);
                let closing_b = (-geometry::dot(pb.velocity, u)).max(0.0);
                (closing_a, closing_b)
            }
        }
        CompetitionRule::Majority => (
            same_type_neighbors(particles, neighbors, event.a) as f64,
            same_type_neighbors(particles, neighbors, event.b) as f64,
        ),
    }
}

/// Decide which particle of the pair transmits its recipe.
///
/// * `Faster` / `Slower`: larger / smaller speed wins.
/// * `FromBehind`: larger positive velocity component toward the other particle wins.
/// * `Majority`: more same-type neighbors within the contestant's own perception radius wins.
///
/// Ties are settled by one uniform coin flip from `rng`.
pub fn compete_with<R: Rng + ?Sized>(
    event: &CollisionEvent,
    rule: CompetitionRule,
    particles: &[Particle],
    space: &Space,
    neighbors: &Neighbors<'_>,
    rng: &mut R,
) -> usize {
    let (sa, sb) = scores(event, rule, particles, space, neighbors);
    if sa > sb {
        event.a
    } else if sb > sa {
        event.b
    } else if rng.random::<bool>() {
        event.a
    } else {
        event.b
    }
}

/// `compete_with` on the current state of `world`.
pub fn compete<R: Rng + ?Sized>(event: &CollisionEvent, rule: CompetitionRule, world: &World, rng: &mut R) -> usize {
    let positions: Vec<_> = world.particles().iter().map(|p| p.position).collect();
    let max_r = world.particles().iter().map(|p| p.active.r_perception()).fold(0.0, f64::max);
    let neighbors = match world.config().neighbor_search {
        crate::engine::NeighborSearch::Grid => Neighbors::Grid(NeighborIndex::build(&positions, world.space(), max_r)),
        crate::engine::NeighborSearch::BruteForce => Neighbors::BruteForce { positions: &positions, space: *world.space() },
    };
    compete_with(event, rule, world.particles(), world.space(), &neighbors, rng)
}

/// Copy the winner's recipe (mutated) into the loser, which then redraws its type.
///
/// Returns whether the transmitted copy differs from the winner's recipe.
pub fn transmit<R: Rng + ?Sized>(
    world: &mut World,
    event: &CollisionEvent,
    winner: usize,
    mutation: &MutationConfig,
    ranges: &ParamRanges,
    rng: &mut R,
) -> bool {
    let loser = if winner == event.a { event.b } else { event.a };
    let source = Arc::clone(&world.particles()[winner].recipe);
    let copy = mutate_recipe(&source, mutation, ranges, rng);
    let mutated = copy != *source;
    let recipe = if mutated { Arc::new(copy) } else { source };
    let k = draw_entry(&recipe, None, rng);
    let params = recipe.entries()[k].params;
    let id = world.intern_type(params);
    let p = &mut world.particles_mut()[loser];
    p.recipe = recipe;
    if id != p.type_id {
        p.adopt_type(params, id);
        world.counters_mut().differentiations += 1;
    }
    world.counters_mut().transmissions += 1;
    mutated
}

/// Detect, compete and transmit for one step. Each particle takes part in at
/// most one transmission per step; later events touching it are dropped.
pub fn collide_and_transmit(world: &mut World, rule: CompetitionRule, neighbors: &Neighbors<'_>, report: &mut StepReport) {
    let seed = world.config().seed;
    let step = report.step;
    let radius = world.config().collision_radius;
    let events = detect_collisions_with(world.particles(), neighbors, radius, step);
    report.collisions = events.len();
    world.counters_mut().collisions += events.len() as u64;

    let mut busy = vec![false; world.len()];
    let mut decided = Vec::new();
    for e in &events {
        if busy[e.a] || busy[e.b] {
            continue;
        }
        busy[e.a] = true;
        busy[e.b] = true;
        let mut rng = compete_rng(seed, step, e.a, e.b);
        let winner = compete_with(e, rule, world.particles(), world.space(), neighbors, &mut rng);
        decided.push((*e, winner));
    }
    let mutation = world.config().mutation;
    let ranges = world.config().ranges;
    for (e, winner) in decided {
        let mut rng = transmit_rng(seed, step, e.a, e.b);
        let mutated = transmit(world, &e, winner, &mutation, &ranges, &mut rng);
        report.transmissions.push(TransmissionRecord { step, pair: (e.a, e.b), rule, winner, mutated });
    }
}

/// A scheduled change of the environment, applied every `period` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    /// Move `floor(fraction * n)` randomly chosen particles to uniform random positions.
    Scatter { period: u64, fraction: f64 },
    /// Multiply the extent (and all positions) by `factor`.
    RescaleExtent { period: u64, factor: f64 },
    /// Toggle between toroidal and open boundaries.
    SwapBoundary { period: u64 },
}

impl Perturbation {
    pub fn period(&self) -> u64 {
        match self {
            Perturbation::Scatter { period, .. }
            | Perturbation::RescaleExtent { period, .. }
            | Perturbation::SwapBoundary { period } => *period,
        }
    }

    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.period() == 0 {
            out.push(("period", "must be >= 1".to_string()));
        }
        match self {
            Perturbation::Scatter { fraction, .. } if !(0.0..=1.0).contains(fraction) => {
                out.push(("fraction", format!("{fraction} outside [0, 1]")));
            }
            Perturbation::RescaleExtent { factor, .. } if !(factor.is_finite() && *factor > 0.0) => {
                out.push(("factor", format!("must be > 0, got {factor}")));
            }
            _ => {}
        }
        out
    }
}

/// Schedule file: a list of `[[perturbation]]` tables.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSchedule {
    #[serde(default)]
    pub perturbation: Vec<Perturbation>,
}

impl EnvironmentSchedule {
    pub fn parse(text: &str) -> Result<Self, String> {
        let s: EnvironmentSchedule = toml::from_str(text).map_err(|e| e.to_string())?;
        let problems: Vec<String> = s
            .perturbation
            .iter()
            .enumerate()
            .flat_map(|(i, p)| p.problems().into_iter().map(move |(f, m)| format!("perturbation[{i}].{f}: {m}")))
            .collect();
        if problems.is_empty() {
            Ok(s)
        } else {
            Err(problems.join("; "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentEvent {
    pub step: u64,
    pub kind: String,
    pub moved: usize,
}

/// Apply every perturbation whose period divides the world's step count.
pub fn perturb_environment(world: &mut World, schedule: &[Perturbation], report: &mut StepReport) {
    let step = world.step_count();
    if step == 0 {
        return;
    }
    for (slot, p) in schedule.iter().enumerate() {
        if step % p.period() != 0 {
            continue;
        }
        let event = match p {
            Perturbation::Scatter { fraction, .. } => {
                let n = world.len();
                let k = ((fraction * n as f64).floor() as usize).min(n);
                let mut rng = substream(world.config().seed, step, slot as u64, Stream::Environment);
                let mut order: Vec<usize> = (0..n).collect();
                for t in 0..k {
                    let j = rng.random_range(t..n);
                    order.swap(t, j);
                }
                let space = *world.space();
                for &i in &order[..k] {
                    let pos = space.random_position(&mut rng);
                    world.particles_mut()[i].position = pos;
                }
                EnvironmentEvent { step, kind: "scatter".into(), moved: k }
            }
            Perturbation::RescaleExtent { factor, .. } => {
                let old = *world.space();
                let new = Space::new(old.dim, geometry::scale(old.extent, *factor), old.boundary);
                world.set_space(new);
                for q in world.particles_mut() {
                    q.position = geometry::scale(q.position, *factor);
                    new.confine(&mut q.position, &mut q.velocity);
                }
                EnvironmentEvent { step, kind: "rescale_extent".into(), moved: world.len() }
            }
            Perturbation::SwapBoundary { .. } => {
                let old = *world.space();
                let boundary = world.boundary_swapped();
                let new = Space::new(old.dim, old.extent, boundary);
                world.set_space(new);
                EnvironmentEvent {
                    step,
                    kind: match boundary {
                        Boundary::Toroidal => "boundary_toroidal".into(),
                        Boundary::Open => "boundary_open".into(),
                    },
                    moved: 0,
                }
            }
        };
        tracing::debug!(step, kind = %event.kind, moved = event.moved, "environment perturbation");
        report.environment.push(event);
    }
}
