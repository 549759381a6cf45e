//! Variation operators: mutation, crossover (mix) and random recipe sampling.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Bounds, KineticParams, ParamRanges, Recipe, RecipeEntry, MAX_ENTRY_COUNT};

/// Rates and scales of the mutation operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MutationConfig {
    /// Probability that each parameter of each entry is perturbed.
    pub p_point: f64,
    /// Standard deviation of the multiplicative perturbation `x * (1 + N(0, s))`.
    pub point_sigma_rel: f64,
    /// Probability per entry of adding a perturbed copy of it.
    pub p_duplicate_entry: f64,
    /// Probability per entry of removing it (never empties the recipe).
    pub p_delete_entry: f64,
    /// Probability per entry of rescaling its count.
    pub p_resize_count: f64,
    /// Standard deviation of the multiplicative count rescale.
    pub count_resize_rel: f64,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig::with_rate(0.1)
    }
}

impl MutationConfig {
    /// Configuration that never changes anything.
    pub fn none() -> Self {
        MutationConfig::with_rate(0.0)
    }

    /// Point rate `rate`; structural rates scaled from it.
    pub fn with_rate(rate: f64) -> Self {
        MutationConfig {
            p_point: rate,
            point_sigma_rel: 0.1,
            p_duplicate_entry: rate * 0.1,
            p_delete_entry: rate * 0.1,
            p_resize_count: rate * 0.5,
            count_resize_rel: 0.2,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.p_point == 0.0
            && self.p_duplicate_entry == 0.0
            && self.p_delete_entry == 0.0
            && self.p_resize_count == 0.0
    }

    /// Problems as `(field, message)` pairs.
    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        for (name, p) in [
            ("p_point", self.p_point),
            ("p_duplicate_entry", self.p_duplicate_entry),
            ("p_delete_entry", self.p_delete_entry),
            ("p_resize_count", self.p_resize_count),
        ] {
            if !(0.0..=1.0).contains(&p) {
                out.push((name, format!("probability {p} outside [0, 1]")));
            }
        }
        for (name, s) in [("point_sigma_rel", self.point_sigma_rel), ("count_resize_rel", self.count_resize_rel)] {
            if !(s > 0.0 && s.is_finite()) {
                out.push((name, format!("scale {s} must be > 0")));
            }
        }
        out
    }
}

fn perturb<R: Rng + ?Sized>(x: f64, sigma: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    x * (1.0 + sigma * z)
}

/// Apply point, resize, duplicate and delete mutations, then clamp into `ranges`.
///
/// Entries are visited in canonical order so the draw sequence is fixed for a
/// given recipe and generator state.
pub fn mutate_recipe<R: Rng + ?Sized>(
    r: &Recipe,
    cfg: &MutationConfig,
    ranges: &ParamRanges,
    rng: &mut R,
) -> Recipe {
    if cfg.is_identity() {
        return r.clone();
    }
    let mut kept: Vec<RecipeEntry> = Vec::with_capacity(r.len() + 1);
    let mut copies: Vec<RecipeEntry> = Vec::new();
    let mut doomed: Vec<bool> = Vec::with_capacity(r.len());
    for e in r.entries() {
        let mut values = e.params.to_array();
        for v in values.iter_mut() {
            if rng.random::<f64>() < cfg.p_point {
                *v = perturb(*v, cfg.point_sigma_rel, rng);
            }
        }
        let mut count = e.count;
        if rng.random::<f64>() < cfg.p_resize_count {
            let scaled = perturb(count as f64, cfg.count_resize_rel, rng).round();
            count = scaled.clamp(1.0, MAX_ENTRY_COUNT as f64) as u32;
        }
        let params = KineticParams::clamped(values, ranges);
        if rng.random::<f64>() < cfg.p_duplicate_entry {
            let mut dup = params.to_array();
            for v in dup.iter_mut() {
                *v = perturb(*v, cfg.point_sigma_rel, rng);
            }
            copies.push(RecipeEntry { count, params: KineticParams::clamped(dup, ranges) });
        }
        doomed.push(rng.random::<f64>() < cfg.p_delete_entry);
        kept.push(RecipeEntry { count, params });
    }
    let mut remaining = kept.len() + copies.len();
    let mut out: Vec<RecipeEntry> = Vec::with_capacity(remaining);
    for (e, delete) in kept.into_iter().zip(doomed) {
        if delete && remaining > 1 {
            remaining -= 1;
        } else {
            out.push(e);
        }
    }
    out.extend(copies);
    Recipe::from_entries_unchecked(out)
}

/// Uniform crossover over the union of both parents' entries.
///
/// Parameter tuples present in both parents are always inherited (with the
/// count of a random parent when the counts differ); tuples unique to one
/// parent are inherited with probability 1/2. An empty draw is repeated.
pub fn mix_recipes<R: Rng + ?Sized>(a: &Recipe, b: &Recipe, rng: &mut R) -> Recipe {
    let mut genes: BTreeMap<[u64; 8], (Option<RecipeEntry>, Option<RecipeEntry>)> = BTreeMap::new();
    for e in a.entries() {
        genes.entry(e.params.key()).or_default().0 = Some(*e);
    }
    for e in b.entries() {
        genes.entry(e.params.key()).or_default().1 = Some(*e);
    }
    // visit in canonical order, not bit order
    let mut genes: Vec<_> = genes.into_values().collect();
    genes.sort_by(|x, y| {
        let px = x.0.or(x.1).unwrap().params;
        let py = y.0.or(y.1).unwrap().params;
        px.canonical_cmp(&py)
    });
    loop {
        let mut out = Vec::with_capacity(genes.len());
        for gene in &genes {
            match gene {
                (Some(x), Some(y)) if x.count == y.count => out.push(*x),
                (Some(x), Some(y)) => out.push(if rng.random::<bool>() { *x } else { *y }),
                (Some(x), None) | (None, Some(x)) => {
                    if rng.random::<bool>() {
                        out.push(*x);
                    }
                }
                (None, None) => unreachable!(),
            }
        }
        if !out.is_empty() {
            return Recipe::from_entries_unchecked(out);
        }
    }
}

/// Draws random recipes with parameters uniform within sampling bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecipeSampler {
    pub ranges: ParamRanges,
    pub min_types: usize,
    pub max_types: usize,
}

impl Default for RecipeSampler {
    fn default() -> Self {
        RecipeSampler { ranges: ParamRanges::default(), min_types: 1, max_types: 10 }
    }
}

impl RecipeSampler {
    pub fn params<R: Rng + ?Sized>(&self, rng: &mut R) -> KineticParams {
        let u = |b: Bounds, rng: &mut R| b.min + (b.max - b.min) * rng.random::<f64>();
        let r = &self.ranges;
        let v_normal = u(r.v_normal, rng);
        let v_max = u(Bounds::new(v_normal.max(r.v_max.min), r.v_max.max.max(v_normal)), rng);
        KineticParams::clamped(
            [
                u(r.r_perception, rng),
                v_normal,
                v_max,
                u(r.w_cohesion, rng),
                u(r.w_alignment, rng),
                u(r.w_separation, rng),
                u(r.p_random_steer, rng),
                u(r.w_pacekeeping, rng),
            ],
            r,
        )
    }

    /// Random recipe whose counts sum to exactly `total` (`total >= n_types`).
    pub fn recipe_with_types<R: Rng + ?Sized>(&self, n_types: usize, total: u32, rng: &mut R) -> Recipe {
        let n = n_types.clamp(1, total.max(1) as usize);
        let mut cuts: Vec<u32> = Vec::with_capacity(n + 1);
        cuts.push(0);
        // n-1 distinct cut points in 1..total
        let mut pool: Vec<u32> = (1..total).collect();
        for i in 0..n - 1 {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
            cuts.push(pool[i]);
        }
        cuts.push(total);
        cuts.sort_unstable();
        let entries: Vec<RecipeEntry> = cuts
            .windows(2)
            .map(|w| RecipeEntry { count: w[1] - w[0], params: self.params(rng) })
            .collect();
        Recipe::from_entries_unchecked(entries)
    }

    pub fn recipe<R: Rng + ?Sized>(&self, total: u32, rng: &mut R) -> Recipe {
        let n = rng.random_range(self.min_types..=self.max_types.max(self.min_types));
        self.recipe_with_types(n, total, rng)
    }
}
