//! Connected components of the proximity graph.

use crate::engine::NeighborIndex;
use crate::geometry::{Space, Vector};

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Components of the graph with edges where `dist < link_radius`.
///
/// Members are ascending; components are ordered by their smallest member.
pub fn connected_components(positions: &[Vector], space: &Space, link_radius: f64) -> Vec<Vec<usize>> {
    let n = positions.len();
    let mut uf = UnionFind::new(n);
    if link_radius > 0.0 && n > 1 {
        let index = NeighborIndex::build(positions, space, link_radius);
        for (i, p) in positions.iter().enumerate() {
            index.for_each_within(*p, link_radius, Some(i), |j, _, _| {
                if j > i {
                    uf.union(i, j);
                }
            });
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = uf.find(i);
        if slot[r] == usize::MAX {
            slot[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[slot[r]].push(i);
    }
    comps
}
