//! Median graphs and rank.

use std::collections::VecDeque;

use serde::Serialize;

use super::ops::iterated_median;
use super::TernaryOp;
use crate::error::{ensure_within, Result};

/// Marker for pairs in different components.
pub const UNREACHABLE: u32 = u32::MAX;

/// Largest algebra for which the graph is built (the edge test is cubic).
pub const GRAPH_LIMIT: usize = 1024;

/// Largest algebra for the brute-force rank search.
pub const BRUTE_FORCE_LIMIT: usize = 16;

#[derive(Clone, Debug, Serialize)]
pub struct MedianGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
    #[serde(skip)]
    dist: Vec<u32>,
}

impl MedianGraph {
    /// Edges join `u ≠ v` whose interval is exactly `{u, v}`.
    pub fn new(op: &impl TernaryOp) -> Result<Self> {
        let n = op.len();
        ensure_within("median graph vertices", n, GRAPH_LIMIT)?;
        let mut edges = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        for u in 0..n {
            for v in u + 1..n {
                if (0..n).all(|x| {
                    let m = op.median(u, x, v);
                    m == u || m == v
                }) {
                    edges.push((u, v));
                    adjacency[u].push(v);
                    adjacency[v].push(u);
                }
            }
        }
        let mut dist = vec![UNREACHABLE; n * n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            let row = &mut dist[s * n..(s + 1) * n];
            row[s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in &adjacency[u] {
                    if row[v] == UNREACHABLE {
                        row[v] = row[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        Ok(MedianGraph {
            n,
            edges,
            adjacency,
            dist,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Edge-path distance, `None` across components.
    pub fn distance(&self, u: usize, v: usize) -> Option<u32> {
        let d = self.dist[u * self.n + v];
        (d != UNREACHABLE).then_some(d)
    }

    pub fn is_connected(&self) -> bool {
        self.dist.iter().all(|&d| d != UNREACHABLE)
    }

    pub fn component_count(&self) -> usize {
        (0..self.n)
            .filter(|&v| (0..v).all(|u| self.dist[u * self.n + v] == UNREACHABLE))
            .count()
    }

    /// Largest finite distance.
    pub fn diameter(&self) -> u32 {
        self.dist
            .iter()
            .copied()
            .filter(|&d| d != UNREACHABLE)
            .max()
            .unwrap_or(0)
    }

    /// Largest cube dimension: at each vertex, the biggest set of neighbours
    /// that pairwise span a square.
    pub fn rank(&self) -> usize {
        let mut best = 0;
        for v in 0..self.n {
            let nb = &self.adjacency[v];
            let k = nb.len();
            if k <= best {
                continue;
            }
            let mut square = vec![vec![false; k]; k];
            for i in 0..k {
                for j in i + 1..k {
                    let (x, y) = (nb[i], nb[j]);
                    let spans = self.adjacency[x].iter().any(|&z| {
                        z != v && self.dist[v * self.n + z] == 2 && self.adjacency[y].contains(&z)
                    });
                    square[i][j] = spans;
                    square[j][i] = spans;
                }
            }
            best = best.max(max_clique(&square));
        }
        best
    }
}

fn max_clique(adj: &[Vec<bool>]) -> usize {
    fn extend(adj: &[Vec<bool>], candidates: &[usize], size: usize, best: &mut usize) {
        if candidates.is_empty() {
            *best = (*best).max(size);
            return;
        }
        if size + candidates.len() <= *best {
            return;
        }
        for (i, &c) in candidates.iter().enumerate() {
            let next: Vec<usize> = candidates[i + 1..]
                .iter()
                .copied()
                .filter(|&d| adj[c][d])
                .collect();
            extend(adj, &next, size + 1, best);
        }
    }
    let all: Vec<usize> = (0..adj.len()).collect();
    let mut best = 0;
    extend(adj, &all, 0, &mut best);
    best
}

/// Rank by direct search for an embedded cube: a corner `a`, an opposite
/// corner `b` and legs `e₁…eₙ`, with the subset `S` sent to the iterated
/// median of its legs based at `b`.
pub fn rank_brute_force(op: &impl TernaryOp) -> Result<usize> {
    let n = op.len();
    ensure_within("brute-force rank elements", n, BRUTE_FORCE_LIMIT)?;
    let mut rank = 0;
    let mut dim = 1;
    while 1usize << dim <= n {
        if !has_embedded_cube(op, dim) {
            break;
        }
        rank = dim;
        dim += 1;
    }
    Ok(rank)
}

fn has_embedded_cube(op: &impl TernaryOp, dim: usize) -> bool {
    let n = op.len();
    let mut legs = Vec::with_capacity(dim);
    for a in 0..n {
        for b in 0..n {
            if a != b && search_legs(op, dim, a, b, 0, &mut legs) {
                return true;
            }
        }
    }
    false
}

fn search_legs(op: &impl TernaryOp, dim: usize, a: usize, b: usize, from: usize, legs: &mut Vec<usize>) -> bool {
    if legs.len() == dim {
        return is_cube_embedding(op, a, b, legs);
    }
    for e in from..op.len() {
        if e == a {
            continue;
        }
        legs.push(e);
        if search_legs(op, dim, a, b, e + 1, legs) {
            return true;
        }
        legs.pop();
    }
    false
}

fn is_cube_embedding(op: &impl TernaryOp, a: usize, b: usize, legs: &[usize]) -> bool {
    let size = 1usize << legs.len();
    let mut image = Vec::with_capacity(size);
    let mut chosen = Vec::with_capacity(legs.len());
    for s in 0..size {
        if s == 0 {
            image.push(a);
            continue;
        }
        chosen.clear();
        chosen.extend((0..legs.len()).filter(|i| s >> i & 1 == 1).map(|i| legs[i]));
        image.push(iterated_median(op, &chosen, b));
    }
    let mut sorted = image.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != size {
        return false;
    }
    for x in 0..size {
        for y in x..size {
            for z in y..size {
                let m = (x & y) | (y & z) | (x & z);
                if op.median(image[x], image[y], image[z]) != image[m] {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::median::FiniteMedianAlgebra;

    #[test]
    fn square_is_a_four_cycle() {
        let sq = FiniteMedianAlgebra::median_cube(2).unwrap();
        let g = MedianGraph::new(&sq).unwrap();
        assert_eq!(g.edges().len(), 4);
        assert_eq!(g.diameter(), 2);
        assert!(g.is_connected());
        assert_eq!(g.rank(), 2);
    }

    #[test]
    fn cube_ranks_agree() {
        for n in 0..=4 {
            let c = FiniteMedianAlgebra::median_cube(n).unwrap();
            let g = MedianGraph::new(&c).unwrap();
            assert_eq!(g.rank(), n);
            assert_eq!(rank_brute_force(&c).unwrap(), n);
        }
    }

    #[test]
    fn disconnected_tables_report_components() {
        // Majority on repeats, middle argument otherwise: every interval is
        // the whole set, so there are no edges at all.
        let mut data = Vec::new();
        for x in 0..3u32 {
            for y in 0..3u32 {
                for z in 0..3u32 {
                    data.push(if x == y || x == z { x } else { y });
                }
            }
        }
        let t = crate::median::TernaryTable::new(3, data).unwrap();
        let g = MedianGraph::new(&t).unwrap();
        assert!(g.edges().is_empty());
        assert_eq!(g.distance(0, 1), None);
        assert_eq!(g.component_count(), 3);
        assert_eq!(g.diameter(), 0);
    }
}
