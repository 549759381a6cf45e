//! Uniform-grid neighbor index with a brute-force counterpart.

use serde::{Deserialize, Serialize};

use crate::geometry::{Boundary, Space, Vector};

/// Which neighbor search backs the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NeighborSearch {
    #[default]
    Grid,
    BruteForce,
}

/// Particles binned into a uniform grid whose cells are at least `max_radius` wide.
///
/// Items are stored cell by cell (counting sort), ascending by particle index
/// within a cell.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    space: Space,
    cells: [usize; 3],
    width: [f64; 3],
    cell_start: Vec<u32>,
    items: Vec<u32>,
    positions: Vec<Vector>,
    max_radius: f64,
}

impl NeighborIndex {
    pub fn build(positions: &[Vector], space: &Space, max_radius: f64) -> Self {
        let max_radius = if max_radius > 0.0 && max_radius.is_finite() { max_radius } else { 1.0 };
        let mut cells = [1usize; 3];
        for k in 0..space.dim {
            let l = space.extent[k].max(f64::MIN_POSITIVE);
            cells[k] = ((l / max_radius).floor() as usize).max(1);
        }
        // keep memory proportional to the population
        let cap = (positions.len() * 2).max(64);
        while cells.iter().product::<usize>() > cap {
            let k = (0..3).max_by_key(|&k| cells[k]).unwrap();
            cells[k] = cells[k].div_ceil(2);
        }
        let mut width = [1.0; 3];
        for k in 0..space.dim {
            width[k] = space.extent[k].max(f64::MIN_POSITIVE) / cells[k] as f64;
        }
        let n_cells = cells.iter().product::<usize>();
        let mut idx = NeighborIndex {
            space: *space,
            cells,
            width,
            cell_start: vec![0; n_cells + 1],
            items: vec![0; positions.len()],
            positions: positions.to_vec(),
            max_radius,
        };
        let keys: Vec<usize> = positions.iter().map(|p| idx.cell_key(idx.cell_of(*p))).collect();
        for &key in &keys {
            idx.cell_start[key + 1] += 1;
        }
        for c in 0..n_cells {
            idx.cell_start[c + 1] += idx.cell_start[c];
        }
        let mut fill = idx.cell_start.clone();
        for (i, &key) in keys.iter().enumerate() {
            idx.items[fill[key] as usize] = i as u32;
            fill[key] += 1;
        }
        idx
    }

    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    fn cell_of(&self, p: Vector) -> [usize; 3] {
        let mut c = [0usize; 3];
        for k in 0..self.space.dim {
            let x = (p[k] / self.width[k]).floor();
            c[k] = if x <= 0.0 { 0 } else { (x as usize).min(self.cells[k] - 1) };
        }
        c
    }

    #[inline]
    fn cell_key(&self, c: [usize; 3]) -> usize {
        (c[2] * self.cells[1] + c[1]) * self.cells[0] + c[0]
    }

    /// Cells to visit along axis `k` for a query of radius `r`: `(first, count)`,
    /// wrapping modulo the axis length.
    #[inline]
    fn axis_range(&self, k: usize, center: usize, r: f64) -> (usize, usize) {
        let n = self.cells[k];
        if k >= self.space.dim {
            return (0, 1);
        }
        let rings = (r / self.width[k]).ceil() as usize;
        match self.space.boundary {
            Boundary::Toroidal => {
                if 2 * rings + 1 >= n {
                    (0, n)
                } else {
                    ((center + n - rings) % n, 2 * rings + 1)
                }
            }
            Boundary::Open => {
                let lo = center.saturating_sub(rings);
                let hi = (center + rings).min(n - 1);
                (lo, hi - lo + 1)
            }
        }
    }

    /// Visit every particle `j != exclude` with `dist(center, x_j) < r`.
    ///
    /// The callback receives `j`, the boundary-aware displacement `x_j - center`
    /// and its squared length.
    #[inline]
    pub fn for_each_within<F: FnMut(usize, Vector, f64)>(&self, center: Vector, r: f64, exclude: Option<usize>, mut f: F) {
        if r <= 0.0 || self.positions.is_empty() {
            return;
        }
        let r2 = r * r;
        let c = self.cell_of(center);
        let rx = self.axis_range(0, c[0], r);
        let ry = self.axis_range(1, c[1], r);
        let rz = self.axis_range(2, c[2], r);
        for tz in 0..rz.1 {
            let z = (rz.0 + tz) % self.cells[2];
            for ty in 0..ry.1 {
                let y = (ry.0 + ty) % self.cells[1];
                for tx in 0..rx.1 {
                    let x = (rx.0 + tx) % self.cells[0];
                    let key = self.cell_key([x, y, z]);
                    let (s, e) = (self.cell_start[key] as usize, self.cell_start[key + 1] as usize);
                    for &j in &self.items[s..e] {
                        let j = j as usize;
                        if Some(j) == exclude {
                            continue;
                        }
                        let d = self.space.delta(center, self.positions[j]);
                        let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                        if d2 < r2 {
                            f(j, d, d2);
                        }
                    }
                }
            }
        }
    }

    /// Sorted indices of the particles within `r` of particle `i`.
    pub fn neighbors_of(&self, i: usize, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(self.positions[i], r, Some(i), |j, _, _| out.push(j));
        out.sort_unstable();
        out
    }
}

/// Neighbor search over either backend, with identical results.
pub enum Neighbors<'a> {
    Grid(NeighborIndex),
    BruteForce { positions: &'a [Vector], space: Space },
}

impl<'a> Neighbors<'a> {
    pub fn build(kind: NeighborSearch, positions: &'a [Vector], space: &Space, max_radius: f64) -> Self {
        match kind {
            NeighborSearch::Grid => Neighbors::Grid(NeighborIndex::build(positions, space, max_radius)),
            NeighborSearch::BruteForce => Neighbors::BruteForce { positions, space: *space },
        }
    }

    #[inline]
    pub fn for_each_within<F: FnMut(usize, Vector, f64)>(&self, center: Vector, r: f64, exclude: Option<usize>, mut f: F) {
        match self {
            Neighbors::Grid(g) => g.for_each_within(center, r, exclude, f),
            Neighbors::BruteForce { positions, space } => {
                if r <= 0.0 {
                    return;
                }
                let r2 = r * r;
                for (j, p) in positions.iter().enumerate() {
                    if Some(j) == exclude {
                        continue;
                    }
                    let d = space.delta(center, *p);
                    let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                    if d2 < r2 {
                        f(j, d, d2);
                    }
                }
            }
        }
    }
}
