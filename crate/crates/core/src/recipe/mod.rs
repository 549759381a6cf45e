//! Recipes: the genome of a heterogeneous swarm.
//!
//! A recipe is an ordered list of `(count, KineticParams)` pairs. Values are
//! always kept in canonical form: parameters clamped to their legal range and
//! rounded to six significant digits, entries sorted lexicographically on the
//! parameter tuple, and entries with identical parameters merged.

mod grammar;
mod variation;

pub use grammar::{parse_recipe, parse_recipe_with, serialize_recipe};
pub use variation::{mix_recipes, mutate_recipe, MutationConfig, RecipeSampler};

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest count a single recipe entry may hold.
pub const MAX_ENTRY_COUNT: u32 = 1_000_000;

pub const PARAM_NAMES: [&str; 8] = [
    "r_perception",
    "v_normal",
    "v_max",
    "w_cohesion",
    "w_alignment",
    "w_separation",
    "p_random_steer",
    "w_pacekeeping",
];

/// Round to six significant digits, the precision of the text form.
pub fn quantize(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { 0.0 } else { x + 0.0 };
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// Closed interval of legal values for one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub const fn new(min: f64, max: f64) -> Self {
        Bounds { min, max }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        if x.is_nan() {
            self.min
        } else {
            x.clamp(self.min, self.max)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }
}

/// Legal range of every kinetic parameter. Construction clamps into these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamRanges {
    pub r_perception: Bounds,
    pub v_normal: Bounds,
    pub v_max: Bounds,
    pub w_cohesion: Bounds,
    pub w_alignment: Bounds,
    pub w_separation: Bounds,
    pub p_random_steer: Bounds,
    pub w_pacekeeping: Bounds,
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges {
            r_perception: Bounds::new(0.0, 300.0),
            v_normal: Bounds::new(0.0, 20.0),
            v_max: Bounds::new(0.0, 40.0),
            w_cohesion: Bounds::new(0.0, 1.0),
            w_alignment: Bounds::new(0.0, 1.0),
            w_separation: Bounds::new(0.0, 100.0),
            p_random_steer: Bounds::new(0.0, 0.5),
            w_pacekeeping: Bounds::new(0.0, 1.0),
        }
    }
}

impl ParamRanges {
    pub fn as_array(&self) -> [Bounds; 8] {
        [
            self.r_perception,
            self.v_normal,
            self.v_max,
            self.w_cohesion,
            self.w_alignment,
            self.w_separation,
            self.p_random_steer,
            self.w_pacekeeping,
        ]
    }

    /// Problems with the ranges themselves, as `(field, message)` pairs.
    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        for (name, b) in PARAM_NAMES.iter().zip(self.as_array()) {
            if !(b.min.is_finite() && b.max.is_finite()) || b.min < 0.0 || b.min > b.max {
                out.push((*name, format!("invalid range [{}, {}]", b.min, b.max)));
            }
        }
        for (name, b) in [("p_random_steer", self.p_random_steer), ("w_pacekeeping", self.w_pacekeeping)] {
            if b.max > 1.0 {
                out.push((name, format!("upper bound {} exceeds 1", b.max)));
            }
        }
        out
    }
}

/// One particle type's behavioral parameters.
///
/// Fields are private: every value is clamped, rounded to the text precision
/// and has `v_normal <= v_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 8]", into = "[f64; 8]")]
pub struct KineticParams {
    r_perception: f64,
    v_normal: f64,
    v_max: f64,
    w_cohesion: f64,
    w_alignment: f64,
    w_separation: f64,
    p_random_steer: f64,
    w_pacekeeping: f64,
}

/// A parameter outside its legal range.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeViolation {
    pub field: &'static str,
    pub value: f64,
    pub min: f64,
    pub max: f64,
}

impl fmt::Display for RangeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {} outside [{}, {}]", self.field, self.value, self.min, self.max)
    }
}

impl KineticParams {
    /// Build from the 8-tuple in grammar order, clamping into `ranges`.
    pub fn clamped(values: [f64; 8], ranges: &ParamRanges) -> Self {
        let bounds = ranges.as_array();
        let mut v = [0.0; 8];
        for k in 0..8 {
            v[k] = quantize(bounds[k].clamp(values[k]));
        }
        if v[1] > v[2] {
            v[1] = v[2];
        }
        KineticParams::from_canonical(v)
    }

    /// Build with the default legal ranges.
    pub fn new(values: [f64; 8]) -> Self {
        Self::clamped(values, &ParamRanges::default())
    }

    /// Check `values` without clamping; returns every violated field.
    pub fn check(values: [f64; 8], ranges: &ParamRanges) -> Result<Self, Vec<RangeViolation>> {
        let mut violations = Vec::new();
        for ((name, b), x) in PARAM_NAMES.iter().zip(ranges.as_array()).zip(values) {
            if !x.is_finite() || !b.contains(x) {
                violations.push(RangeViolation { field: name, value: x, min: b.min, max: b.max });
            }
        }
        if violations.is_empty() && values[1] > values[2] {
            violations.push(RangeViolation {
                field: "v_normal",
                value: values[1],
                min: 0.0,
                max: values[2],
            });
        }
        if violations.is_empty() {
            Ok(Self::clamped(values, ranges))
        } else {
            Err(violations)
        }
    }

    fn from_canonical(v: [f64; 8]) -> Self {
        KineticParams {
            r_perception: v[0],
            v_normal: v[1],
            v_max: v[2],
            w_cohesion: v[3],
            w_alignment: v[4],
            w_separation: v[5],
            p_random_steer: v[6],
            w_pacekeeping: v[7],
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.r_perception,
            self.v_normal,
            self.v_max,
            self.w_cohesion,
            self.w_alignment,
            self.w_separation,
            self.p_random_steer,
            self.w_pacekeeping,
        ]
    }

    #[inline]
    pub fn r_perception(&self) -> f64 {
        self.r_perception
    }
    #[inline]
    pub fn v_normal(&self) -> f64 {
        self.v_normal
    }
    #[inline]
    pub fn v_max(&self) -> f64 {
        self.v_max
    }
    #[inline]
    pub fn w_cohesion(&self) -> f64 {
        self.w_cohesion
    }
    #[inline]
    pub fn w_alignment(&self) -> f64 {
        self.w_alignment
    }
    #[inline]
    pub fn w_separation(&self) -> f64 {
        self.w_separation
    }
    #[inline]
    pub fn p_random_steer(&self) -> f64 {
        self.p_random_steer
    }
    #[inline]
    pub fn w_pacekeeping(&self) -> f64 {
        self.w_pacekeeping
    }

    /// Bit pattern of the tuple; equal params have equal keys.
    pub fn key(&self) -> [u64; 8] {
        self.to_array().map(f64::to_bits)
    }

    /// Lexicographic total order on the parameter tuple.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.to_array(), other.to_array());
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

impl TryFrom<[f64; 8]> for KineticParams {
    type Error = String;

    fn try_from(values: [f64; 8]) -> Result<Self, Self::Error> {
        KineticParams::check(values, &ParamRanges::default()).map_err(|v| {
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
        })
    }
}

impl From<KineticParams> for [f64; 8] {
    fn from(p: KineticParams) -> Self {
        p.to_array()
    }
}

impl Eq for KineticParams {}

impl Hash for KineticParams {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RecipeEntry {
    pub count: u32,
    pub params: KineticParams,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecipeError {
    #[error("empty recipe")]
    Empty,
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("range violation at line {line}: {}", list_violations(.violations))]
    Range {
        line: usize,
        violations: Vec<RangeViolation>,
    },
}

fn list_violations(v: &[RangeViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl RecipeError {
    /// Names of the fields a range error refers to.
    pub fn fields(&self) -> Vec<&'static str> {
        match self {
            RecipeError::Range { violations, .. } => violations.iter().map(|v| v.field).collect(),
            _ => Vec::new(),
        }
    }
}

/// Canonical recipe. Entries are non-empty, sorted and merged; every count is positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Recipe {
    entries: Vec<RecipeEntry>,
}

impl Recipe {
    pub fn new(entries: impl IntoIterator<Item = (u32, KineticParams)>) -> Result<Self, RecipeError> {
        let mut list: Vec<RecipeEntry> = Vec::new();
        for (count, params) in entries {
            if count == 0 {
                return Err(RecipeError::Range {
                    line: 0,
                    violations: vec![RangeViolation {
                        field: "count",
                        value: 0.0,
                        min: 1.0,
                        max: MAX_ENTRY_COUNT as f64,
                    }],
                });
            }
            list.push(RecipeEntry { count, params });
        }
        if list.is_empty() {
            return Err(RecipeError::Empty);
        }
        Ok(Self::canonicalize(list))
    }

    /// Single-entry recipe.
    pub fn single(count: u32, params: KineticParams) -> Self {
        Recipe::new([(count.max(1), params)]).expect("non-empty")
    }

    fn canonicalize(mut list: Vec<RecipeEntry>) -> Self {
        list.sort_by(|a, b| a.params.canonical_cmp(&b.params));
        let mut merged: Vec<RecipeEntry> = Vec::with_capacity(list.len());
        for e in list {
            match merged.last_mut() {
                Some(last) if last.params == e.params => {
                    last.count = last.count.saturating_add(e.count).min(MAX_ENTRY_COUNT);
                }
                _ => merged.push(RecipeEntry {
                    count: e.count.min(MAX_ENTRY_COUNT),
                    params: e.params,
                }),
            }
        }
        Recipe { entries: merged }
    }

    pub(crate) fn from_entries_unchecked(list: Vec<RecipeEntry>) -> Self {
        debug_assert!(!list.is_empty());
        Self::canonicalize(list)
    }

    pub fn entries(&self) -> &[RecipeEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total_count(&self) -> u64 {
        self.entries.iter().map(|e| e.count as u64).sum()
    }

    /// Recipe with counts rescaled so the total is at most `cap`, each count at least 1.
    pub fn capped(&self, cap: u64) -> Recipe {
        let total = self.total_count();
        if total <= cap {
            return self.clone();
        }
        let list = self
            .entries
            .iter()
            .map(|e| RecipeEntry {
                count: ((e.count as f64 * cap as f64 / total as f64).floor() as u32).max(1),
                params: e.params,
            })
            .collect();
        Recipe::from_entries_unchecked(list)
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_recipe(self))
    }
}

impl std::str::FromStr for Recipe {
    type Err = RecipeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_recipe(s)
    }
}

impl Serialize for Recipe {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&serialize_recipe(self))
    }
}

impl<'de> Deserialize<'de> for Recipe {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_recipe(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: [f64; 8]) -> KineticParams {
        KineticParams::new(v)
    }

    #[test]
    fn clamping_enforces_ranges_and_speed_order() {
        let k = p([500.0, 30.0, 10.0, 2.0, -1.0, 150.0, 0.9, 1.5]);
        assert_eq!(k.to_array(), [300.0, 10.0, 10.0, 1.0, 0.0, 100.0, 0.5, 1.0]);
        let k = p([f64::NAN; 8]);
        assert!(k.to_array().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn quantize_keeps_six_significant_digits() {
        assert_eq!(quantize(93.123456789), 93.1235);
        assert_eq!(quantize(0.000123456789), 0.000123457);
        assert_eq!(quantize(quantize(1.0 / 3.0)), quantize(1.0 / 3.0));
    }

    #[test]
    fn canonical_order_and_merge() {
        let a = p([10.0, 1.0, 2.0, 0.1, 0.1, 1.0, 0.0, 0.5]);
        let b = p([5.0, 1.0, 2.0, 0.1, 0.1, 1.0, 0.0, 0.5]);
        let r1 = Recipe::new([(3, a), (2, b), (4, a)]).unwrap();
        let r2 = Recipe::new([(2, b), (7, a)]).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.entries()[0].params, b);
        assert_eq!(r1.total_count(), 9);
    }

    #[test]
    fn empty_and_zero_count_rejected() {
        assert_eq!(Recipe::new(std::iter::empty()), Err(RecipeError::Empty));
        let err = Recipe::new([(0, p([1.0; 8]))]).unwrap_err();
        assert_eq!(err.fields(), vec!["count"]);
    }

    #[test]
    fn capped_preserves_entries() {
        let a = p([10.0, 1.0, 2.0, 0.1, 0.1, 1.0, 0.0, 0.5]);
        let b = p([5.0, 1.0, 2.0, 0.1, 0.1, 1.0, 0.0, 0.5]);
        let r = Recipe::new([(900, a), (3, b)]).unwrap();
        let c = r.capped(150);
        assert!(c.total_count() <= 150);
        assert_eq!(c.len(), 2);
    }
}
