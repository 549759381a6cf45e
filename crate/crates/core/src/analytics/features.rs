//! Behavior vectors: structural and dynamic characteristics of a run window.
//!
//! Per-frame features are averaged over the frames of the window; change
//! rates, event rates, turning and persistence are computed across it.
//! Positions are centered on the (circular, when toroidal) centroid and
//! measured with boundary-aware displacements, so structural features do not
//! depend on where the swarm sits in the world.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cluster::connected_components;
use super::trajectory::Frame;
use crate::engine::NeighborIndex;
use crate::geometry::{self, Boundary, Space, Vector, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("window too short: need at least 2 frames spanning at least one step, got {0} frames")]
    WindowTooShort(usize),
    #[error("need at least {needed} behavior vectors, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("behavior vectors have inconsistent lengths")]
    Ragged,
    #[error("subsample {subsample} larger than the {available} available runs")]
    Subsample { subsample: usize, available: usize },
}

/// One registry entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    ClusterCount,
    MeanClusterSize,
    ClusterSizeVariance,
    LargestClusterFraction,
    RadiusOfGyration,
    BoundingVolume,
    MeanNearestNeighborDistance,
    MeanPairwiseDistance,
    LocalDensityVariance,
    DistinctTypes,
    TypeEntropy,
    MeanSpeed,
    SpeedVariance,
    Polarization,
    AngularMomentum,
    CentroidDrift,
    TurningRate,
    KineticEnergy,
    ClusterCountChangeRate,
    GyrationChangeRate,
    CollisionRate,
    RedifferentiationRate,
    LargestClusterPersistence,
    WithinClusterPolarization,
}

impl Feature {
    pub fn name(&self) -> &'static str {
        match self {
            Feature::ClusterCount => "cluster_count",
            Feature::MeanClusterSize => "mean_cluster_size",
            Feature::ClusterSizeVariance => "cluster_size_variance",
            Feature::LargestClusterFraction => "largest_cluster_fraction",
            Feature::RadiusOfGyration => "radius_of_gyration",
            Feature::BoundingVolume => "bounding_volume",
            Feature::MeanNearestNeighborDistance => "mean_nearest_neighbor_distance",
            Feature::MeanPairwiseDistance => "mean_pairwise_distance",
            Feature::LocalDensityVariance => "local_density_variance",
            Feature::DistinctTypes => "distinct_types",
            Feature::TypeEntropy => "type_entropy",
            Feature::MeanSpeed => "mean_speed",
            Feature::SpeedVariance => "speed_variance",
            Feature::Polarization => "polarization",
            Feature::AngularMomentum => "angular_momentum",
            Feature::CentroidDrift => "centroid_drift",
            Feature::TurningRate => "turning_rate",
            Feature::KineticEnergy => "kinetic_energy",
            Feature::ClusterCountChangeRate => "cluster_count_change_rate",
            Feature::GyrationChangeRate => "gyration_change_rate",
            Feature::CollisionRate => "collision_rate",
            Feature::RedifferentiationRate => "redifferentiation_rate",
            Feature::LargestClusterPersistence => "largest_cluster_persistence",
            Feature::WithinClusterPolarization => "within_cluster_polarization",
        }
    }

    /// Structural features are translation-invariant.
    pub fn is_structural(&self) -> bool {
        matches!(
            self,
            Feature::ClusterCount
                | Feature::MeanClusterSize
                | Feature::ClusterSizeVariance
                | Feature::LargestClusterFraction
                | Feature::RadiusOfGyration
                | Feature::BoundingVolume
                | Feature::MeanNearestNeighborDistance
                | Feature::MeanPairwiseDistance
                | Feature::LocalDensityVariance
                | Feature::DistinctTypes
                | Feature::TypeEntropy
        )
    }
}

/// Ordered feature list plus the link radius used for clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRegistry {
    pub link_radius: f64,
    pub features: Vec<Feature>,
}

impl Default for FeatureRegistry {
    fn default() -> Self {
        use Feature::*;
        FeatureRegistry {
            link_radius: 30.0,
            features: vec![
                ClusterCount,
                MeanClusterSize,
                ClusterSizeVariance,
                LargestClusterFraction,
                RadiusOfGyration,
                BoundingVolume,
                MeanNearestNeighborDistance,
                MeanPairwiseDistance,
                LocalDensityVariance,
                DistinctTypes,
                TypeEntropy,
                MeanSpeed,
                SpeedVariance,
                Polarization,
                AngularMomentum,
                CentroidDrift,
                TurningRate,
                KineticEnergy,
                ClusterCountChangeRate,
                GyrationChangeRate,
                CollisionRate,
                RedifferentiationRate,
                LargestClusterPersistence,
                WithinClusterPolarization,
            ],
        }
    }
}

impl FeatureRegistry {
    pub fn names(&self) -> Vec<&'static str> {
        self.features.iter().map(Feature::name).collect()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Feature values of one run, in registry order.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorVector {
    pub values: Vec<f64>,
    pub names: Arc<[&'static str]>,
}

impl BehaviorVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| *n == name).map(|k| self.values[k])
    }
}

impl AsRef<[f64]> for BehaviorVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Centroid: arithmetic mean, or per-axis circular mean on a torus.
pub fn centroid(positions: &[Vector], space: &Space) -> Vector {
    let mut c = ZERO;
    if positions.is_empty() {
        return c;
    }
    let n = positions.len() as f64;
    for k in 0..space.dim {
        match space.boundary {
            Boundary::Open => c[k] = positions.iter().map(|p| p[k]).sum::<f64>() / n,
            Boundary::Toroidal => {
                let l = space.extent[k];
                let (mut s, mut co) = (0.0, 0.0);
                for p in positions {
                    let th = 2.0 * PI * p[k] / l;
                    s += th.sin();
                    co += th.cos();
                }
                let th = s.atan2(co);
                c[k] = (th / (2.0 * PI) * l).rem_euclid(l);
            }
        }
    }
    c
}

fn mean(xs: impl Iterator<Item = f64>) -> (f64, usize) {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    if n == 0 {
        (0.0, 0)
    } else {
        (s / n as f64, n)
    }
}

fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

fn unit(v: Vector) -> Vector {
    let s = geometry::norm(v);
    if s > 0.0 {
        geometry::scale(v, 1.0 / s)
    } else {
        ZERO
    }
}

fn polarization(vs: impl Iterator<Item = Vector>) -> f64 {
    let mut sum = ZERO;
    let mut n = 0usize;
    for v in vs {
        sum = geometry::add(sum, unit(v));
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        geometry::norm(sum) / n as f64
    }
}

/// Per-frame quantities shared by several features.
struct FrameStats {
    clusters: Vec<Vec<usize>>,
    gyration: f64,
    per_frame: Vec<(Feature, f64)>,
}

fn frame_stats(frame: &Frame, registry: &FeatureRegistry) -> FrameStats {
    let n = frame.len();
    let space = &frame.space;
    let nf = n.max(1) as f64;
    let clusters = connected_components(&frame.positions, space, registry.link_radius);
    let c = centroid(&frame.positions, space);
    let disp: Vec<Vector> = frame.positions.iter().map(|p| space.delta(c, *p)).collect();
    let gyration = (disp.iter().map(|d| geometry::norm_sq(*d)).sum::<f64>() / nf).sqrt();

    let want = |f: Feature| registry.features.contains(&f);
    let mut out = Vec::new();
    let sizes: Vec<f64> = clusters.iter().map(|c| c.len() as f64).collect();
    out.push((Feature::ClusterCount, clusters.len() as f64));
    out.push((Feature::MeanClusterSize, if clusters.is_empty() { 0.0 } else { n as f64 / clusters.len() as f64 }));
    out.push((Feature::ClusterSizeVariance, variance(&sizes)));
    out.push((Feature::LargestClusterFraction, sizes.iter().cloned().fold(0.0, f64::max) / nf));
    out.push((Feature::RadiusOfGyration, gyration));
    if want(Feature::BoundingVolume) {
        let mut vol = if n == 0 { 0.0 } else { 1.0 };
        for k in 0..space.dim {
            let lo = disp.iter().map(|d| d[k]).fold(f64::INFINITY, f64::min);
            let hi = disp.iter().map(|d| d[k]).fold(f64::NEG_INFINITY, f64::max);
            if n > 0 {
                vol *= hi - lo;
            }
        }
        out.push((Feature::BoundingVolume, vol));
    }
    if want(Feature::MeanNearestNeighborDistance) || want(Feature::MeanPairwiseDistance) {
        let mut nn = vec![f64::INFINITY; n];
        let mut pair_sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let d = space.distance_sq(frame.positions[i], frame.positions[j]).sqrt();
                pair_sum += d;
                nn[i] = nn[i].min(d);
                nn[j] = nn[j].min(d);
            }
        }
        let mean_nn = if n > 1 { nn.iter().sum::<f64>() / n as f64 } else { 0.0 };
        let pairs = n * n.saturating_sub(1) / 2;
        out.push((Feature::MeanNearestNeighborDistance, mean_nn));
        out.push((Feature::MeanPairwiseDistance, if pairs > 0 { pair_sum / pairs as f64 } else { 0.0 }));
    }
    if want(Feature::LocalDensityVariance) {
        let index = NeighborIndex::build(&frame.positions, space, registry.link_radius);
        let counts: Vec<f64> = (0..n)
            .map(|i| {
                let mut k = 0usize;
                index.for_each_within(frame.positions[i], registry.link_radius, Some(i), |_, _, _| k += 1);
                k as f64
            })
            .collect();
        out.push((Feature::LocalDensityVariance, variance(&counts)));
    }
    let mut type_counts: Vec<(u32, usize)> = Vec::new();
    {
        let mut ids = frame.type_ids.clone();
        ids.sort_unstable();
        for id in ids {
            match type_counts.last_mut() {
                Some((t, c)) if *t == id => *c += 1,
                _ => type_counts.push((id, 1)),
            }
        }
    }
    out.push((Feature::DistinctTypes, type_counts.len() as f64));
    let entropy = -type_counts
        .iter()
        .map(|(_, c)| {
            let p = *c as f64 / nf;
            p * p.ln()
        })
        .sum::<f64>();
    out.push((Feature::TypeEntropy, entropy + 0.0));

    let speeds: Vec<f64> = frame.velocities.iter().map(|v| geometry::norm(*v)).collect();
    out.push((Feature::MeanSpeed, mean(speeds.iter().cloned()).0));
    out.push((Feature::SpeedVariance, variance(&speeds)));
    out.push((Feature::Polarization, polarization(frame.velocities.iter().cloned())));
    let mut l = ZERO;
    for (d, v) in disp.iter().zip(&frame.velocities) {
        l = geometry::add(l, geometry::cross(*d, *v));
    }
    out.push((Feature::AngularMomentum, geometry::norm(l) / nf));
    let mut vsum = ZERO;
    for v in &frame.velocities {
        vsum = geometry::add(vsum, *v);
    }
    out.push((Feature::CentroidDrift, geometry::norm(vsum) / nf));
    out.push((Feature::KineticEnergy, mean(speeds.iter().map(|s| s * s)).0));
    let within = mean(
        clusters
            .iter()
            .filter(|c| c.len() >= 2)
            .map(|c| polarization(c.iter().map(|&i| frame.velocities[i]))),
    )
    .0;
    out.push((Feature::WithinClusterPolarization, within));

    FrameStats { clusters, gyration, per_frame: out }
}

fn largest(clusters: &[Vec<usize>]) -> HashSet<usize> {
    // ties go to the component with the smallest member (components are ordered that way)
    let mut best: Option<&Vec<usize>> = None;
    for c in clusters {
        if best.is_none_or(|b| c.len() > b.len()) {
            best = Some(c);
        }
    }
    best.map(|c| c.iter().copied().collect()).unwrap_or_default()
}

/// Evaluate the registry on a window of frames from one run.
pub fn compute_behavior_vector(window: &[Frame], registry: &FeatureRegistry) -> Result<BehaviorVector, AnalyticsError> {
    if window.len() < 2 {
        return Err(AnalyticsError::WindowTooShort(window.len()));
    }
    let first = &window[0];
    let last = &window[window.len() - 1];
    if last.step <= first.step {
        return Err(AnalyticsError::WindowTooShort(window.len()));
    }
    let span = (last.step - first.step) as f64;
    let n = first.len().max(1) as f64;
    let stats: Vec<FrameStats> = window.iter().map(|f| frame_stats(f, registry)).collect();

    let averaged = |f: Feature| -> f64 {
        let (m, _) = mean(stats.iter().filter_map(|s| s.per_frame.iter().find(|(g, _)| *g == f).map(|(_, x)| *x)));
        m
    };

    let mut values = Vec::with_capacity(registry.len());
    for &f in &registry.features {
        let v = match f {
            Feature::TurningRate => {
                let mut total = 0.0;
                let mut count = 0usize;
                for pair in window.windows(2) {
                    let dt = pair[1].step.saturating_sub(pair[0].step).max(1) as f64;
                    for (a, b) in pair[0].velocities.iter().zip(&pair[1].velocities) {
                        let (ua, ub) = (unit(*a), unit(*b));
                        if geometry::norm_sq(ua) > 0.0 && geometry::norm_sq(ub) > 0.0 {
                            total += geometry::dot(ua, ub).clamp(-1.0, 1.0).acos() / dt;
                            count += 1;
                        }
                    }
                }
                if count > 0 {
                    total / count as f64
                } else {
                    0.0
                }
            }
            Feature::ClusterCountChangeRate => {
                stats.windows(2).map(|w| (w[1].clusters.len() as f64 - w[0].clusters.len() as f64).abs()).sum::<f64>()
                    / span
            }
            Feature::GyrationChangeRate => {
                stats.windows(2).map(|w| (w[1].gyration - w[0].gyration).abs()).sum::<f64>() / span
            }
            Feature::CollisionRate => {
                last.counters.collisions.saturating_sub(first.counters.collisions) as f64 / span / n
            }
            Feature::RedifferentiationRate => {
                last.counters.differentiations.saturating_sub(first.counters.differentiations) as f64 / span / n
            }
            Feature::LargestClusterPersistence => {
                let a = largest(&stats[0].clusters);
                let b = largest(&stats[stats.len() - 1].clusters);
                let union = a.union(&b).count();
                if union == 0 {
                    0.0
                } else {
                    a.intersection(&b).count() as f64 / union as f64
                }
            }
            other => averaged(other),
        };
        values.push(v);
    }
    Ok(BehaviorVector { values, names: registry.names().into() })
}
