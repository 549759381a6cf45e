//! Tracking persistent clusters and reconstructing their recipes.
//!
//! Each observation clusters the particles at the link radius and keeps
//! components with at least `min_object_size` members. Components inherit the
//! identity of the previous track they overlap most. When several components
//! claim the same track, that track ends and each claimant starts a new
//! identity whose `parent` is the ended track.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cluster::connected_components;
use super::features::centroid;
use super::trajectory::Frame;
use crate::engine::{Observer, ObserverFailure, StepReport, TypeRegistry, World};
use crate::geometry::{self, Vector, ZERO};
use crate::recipe::{serialize_recipe, Recipe};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarvestConfig {
    pub link_radius: f64,
    pub min_object_size: usize,
    /// Steps an identity must persist before it is reported.
    pub min_lifetime: u64,
    /// Observe every this many steps when used as an observer.
    pub interval: u64,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        HarvestConfig { link_radius: 30.0, min_object_size: 10, min_lifetime: 0, interval: 10 }
    }
}

impl HarvestConfig {
    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.link_radius.is_finite() && self.link_radius > 0.0) {
            out.push(("link_radius", format!("must be positive, got {}", self.link_radius)));
        }
        if self.min_object_size == 0 {
            out.push(("min_object_size", "must be at least 1".into()));
        }
        if self.interval == 0 {
            out.push(("interval", "must be at least 1".into()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarvestedObject {
    pub id: u64,
    pub parent: Option<u64>,
    pub recipe: Recipe,
    pub member_count: usize,
    pub members: Vec<usize>,
    pub centroid: Vector,
    pub mean_velocity: Vector,
    pub first_seen: u64,
    pub last_seen: u64,
    /// Mean Jaccard overlap of membership between consecutive observations.
    pub stability_score: f64,
}

#[derive(Debug, Clone)]
struct Track {
    object: HarvestedObject,
    overlap_sum: f64,
    observations: u64,
}

#[derive(Debug, Clone, Default)]
pub struct HarvestTracker {
    pub config: HarvestConfig,
    next_id: u64,
    live: Vec<Track>,
    /// Latest state of every identity ever created, live or ended.
    history: BTreeMap<u64, HarvestedObject>,
}

/// Recipe whose entries are the histogram of the members' active types.
pub fn reconstruct_recipe(type_ids: &[u32], members: &[usize], types: &TypeRegistry) -> Recipe {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for &i in members {
        *counts.entry(type_ids[i]).or_default() += 1;
    }
    Recipe::new(counts.into_iter().map(|(t, c)| (c, *types.get(t)))).expect("non-empty member set")
}

fn jaccard(a: &[usize], b: &[usize]) -> (usize, f64) {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - common;
    (common, if union == 0 { 0.0 } else { common as f64 / union as f64 })
}

impl HarvestTracker {
    pub fn new(config: HarvestConfig) -> Self {
        HarvestTracker { config, ..Default::default() }
    }

    pub fn observe(&mut self, world: &World) -> Vec<HarvestedObject> {
        self.observe_frame(&Frame::capture(world), world.types())
    }

    /// Update identities from one frame and return the objects that are
    /// currently live and old enough.
    pub fn observe_frame(&mut self, frame: &Frame, types: &TypeRegistry) -> Vec<HarvestedObject> {
        let comps: Vec<Vec<usize>> = connected_components(&frame.positions, &frame.space, self.config.link_radius)
            .into_iter()
            .filter(|c| c.len() >= self.config.min_object_size)
            .collect();

        // best previous track for each component: most shared members, then lowest id
        let mut best: Vec<Option<(usize, usize, f64)>> = Vec::with_capacity(comps.len());
        for c in &comps {
            let mut pick: Option<(usize, usize, f64)> = None;
            for (t, track) in self.live.iter().enumerate() {
                let (common, jac) = jaccard(c, &track.object.members);
                if common == 0 {
                    continue;
                }
                let better = match pick {
                    None => true,
                    Some((pt, pc, _)) => {
                        common > pc || (common == pc && track.object.id < self.live[pt].object.id)
                    }
                };
                if better {
                    pick = Some((t, common, jac));
                }
            }
            best.push(pick);
        }
        let mut claims: HashMap<usize, usize> = HashMap::new();
        for b in best.iter().flatten() {
            *claims.entry(b.0).or_default() += 1;
        }

        let step = frame.step;
        let mut next_live = Vec::with_capacity(comps.len());
        for (c, b) in comps.into_iter().zip(best) {
            let (parent, continued) = match b {
                Some((t, _, jac)) if claims[&t] == 1 => (None, Some((t, jac))),
                Some((t, _, _)) => (Some(self.live[t].object.id), None),
                None => (None, None),
            };
            let recipe = reconstruct_recipe(&frame.type_ids, &c, types);
            let centroid = centroid(&c.iter().map(|&i| frame.positions[i]).collect::<Vec<_>>(), &frame.space);
            let mut vsum = ZERO;
            for &i in &c {
                vsum = geometry::add(vsum, frame.velocities[i]);
            }
            let mean_velocity = geometry::scale(vsum, 1.0 / c.len() as f64);
            let track = match continued {
                Some((t, jac)) => {
                    let prev = &self.live[t];
                    let overlap_sum = prev.overlap_sum + jac;
                    let observations = prev.observations + 1;
                    Track {
                        object: HarvestedObject {
                            id: prev.object.id,
                            parent: prev.object.parent,
                            recipe,
                            member_count: c.len(),
                            members: c,
                            centroid,
                            mean_velocity,
                            first_seen: prev.object.first_seen,
                            last_seen: step,
                            stability_score: overlap_sum / (observations - 1) as f64,
                        },
                        overlap_sum,
                        observations,
                    }
                }
                None => {
                    let id = self.next_id;
                    self.next_id += 1;
                    Track {
                        object: HarvestedObject {
                            id,
                            parent,
                            recipe,
                            member_count: c.len(),
                            members: c,
                            centroid,
                            mean_velocity,
                            first_seen: step,
                            last_seen: step,
                            stability_score: 1.0,
                        },
                        overlap_sum: 0.0,
                        observations: 1,
                    }
                }
            };
            self.history.insert(track.object.id, track.object.clone());
            next_live.push(track);
        }
        self.live = next_live;
        self.current()
    }

    /// Live objects that have persisted at least `min_lifetime` steps.
    pub fn current(&self) -> Vec<HarvestedObject> {
        self.live
            .iter()
            .filter(|t| t.object.last_seen - t.object.first_seen >= self.config.min_lifetime)
            .map(|t| t.object.clone())
            .collect()
    }

    /// Every identity seen so far, ordered by id.
    pub fn history(&self) -> Vec<HarvestedObject> {
        self.history.values().cloned().collect()
    }

    /// Identities that persisted at least `min_lifetime` steps, ordered by id.
    pub fn harvested(&self) -> Vec<HarvestedObject> {
        self.history
            .values()
            .filter(|o| o.last_seen - o.first_seen >= self.config.min_lifetime)
            .cloned()
            .collect()
    }
}

impl Observer for HarvestTracker {
    fn observe(&mut self, world: &World, _report: &StepReport) -> Result<(), ObserverFailure> {
        if world.step_count() % self.config.interval.max(1) == 0 {
            HarvestTracker::observe(self, world);
        }
        Ok(())
    }
}

/// Harvested recipes in the recipe grammar, each preceded by provenance comments.
pub fn harvest_to_text(run_id: &str, objects: &[HarvestedObject]) -> String {
    let mut out = String::new();
    for o in objects {
        let _ = writeln!(out, "# run {run_id} object {} steps {}..{}", o.id, o.first_seen, o.last_seen);
        match o.parent {
            Some(p) => {
                let _ = writeln!(out, "# parent {p} members {} stability {:.4}", o.member_count, o.stability_score);
            }
            None => {
                let _ = writeln!(out, "# members {} stability {:.4}", o.member_count, o.stability_score);
            }
        }
        out.push_str(&serialize_recipe(&o.recipe));
        out.push('\n');
    }
    out
}
