//! Finite metric spaces carrying a ternary operator.

mod json;
mod rule;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use rule::{CoordIndex, MedianRule};

use crate::error::{Error, Result};
use crate::median::{FiniteMedianAlgebra, MedianGraph, TernaryOp};
use crate::scalar::Scalar;

/// Spaces above this size skip the exhaustive triangle check on load and
/// sample instead.
pub const TRIANGLE_EXHAUSTIVE_LIMIT: usize = 512;

/// A point label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Int(i64),
    Name(String),
    Coords(Vec<i64>),
    /// Point `step/of` of the way up the vertical edge above `base`.
    Subdivision { base: Vec<i64>, step: u32, of: u32 },
}

impl Label {
    pub fn coords(&self) -> Option<&[i64]> {
        match self {
            Label::Coords(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn tuple(c: &[i64]) -> String {
            c.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
        }
        match self {
            Label::Int(i) => write!(f, "{i}"),
            Label::Name(s) => write!(f, "{s}"),
            Label::Coords(c) => write!(f, "({})", tuple(c)),
            Label::Subdivision { base, step, of } => write!(f, "({}+{step}/{of})", tuple(base)),
        }
    }
}

/// Finite point set, metric table and ternary operator.
#[derive(Clone, Debug)]
pub struct CoarseSpace<S> {
    labels: Vec<Label>,
    dist: Vec<S>,
    rule: MedianRule,
    /// The weighted graph the metric was generated from, when there is one.
    edges: Option<Vec<(usize, usize, S)>>,
}

impl<S: Scalar> CoarseSpace<S> {
    /// Builds a space from a full distance matrix (row-major) and validates
    /// the metric axioms exactly.
    pub fn from_matrix(labels: Vec<Label>, dist: Vec<S>, rule: MedianRule) -> Result<Self> {
        let space = Self::from_parts(labels, dist, rule, None)?;
        space.validate_metric()?;
        Ok(space)
    }

    /// Builds a space whose metric is the shortest-path metric of a
    /// positively weighted connected graph.
    pub fn from_graph(labels: Vec<Label>, edges: Vec<(usize, usize, S)>, rule: MedianRule) -> Result<Self> {
        let n = labels.len();
        for &(u, v, w) in &edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) references a missing point")));
            }
            if w <= S::zero() {
                return Err(Error::invalid(format!("edge ({u}, {v}) must have positive weight")));
            }
        }
        let dist = all_pairs_shortest_paths(n, &edges)?;
        Self::from_parts(labels, dist, rule, Some(edges))
    }

    pub(crate) fn from_parts(
        labels: Vec<Label>,
        dist: Vec<S>,
        rule: MedianRule,
        edges: Option<Vec<(usize, usize, S)>>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptySet);
        }
        if dist.len() != n * n {
            return Err(Error::invalid(format!("metric needs {} entries, got {}", n * n, dist.len())));
        }
        rule.validate(&labels)?;
        Ok(CoarseSpace {
            labels,
            dist,
            rule,
            edges,
        })
    }

    /// Symmetry, zero diagonal, positivity off the diagonal and the triangle
    /// inequality, all without tolerance.
    pub fn validate_metric(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if self.d(i, i) != S::zero() {
                return Err(Error::invalid(format!("d({i},{i}) must be 0")));
            }
            for j in i + 1..n {
                let (a, b) = (self.d(i, j), self.d(j, i));
                if a != b {
                    return Err(Error::invalid(format!("metric not symmetric at ({i},{j})")));
                }
                if a <= S::zero() {
                    return Err(Error::invalid(format!("distinct points {i},{j} at distance {a:?}")));
                }
            }
        }
        let violates = |i: usize, j: usize, k: usize| self.d(i, k) > self.d(i, j) + self.d(j, k);
        if n <= TRIANGLE_EXHAUSTIVE_LIMIT {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if violates(i, j, k) {
                            return Err(Error::invalid(format!("triangle inequality fails for ({i},{j},{k})")));
                        }
                    }
                }
            }
        } else {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7472_6961);
            for _ in 0..1_000_000 {
                let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                if violates(i, j, k) {
                    return Err(Error::invalid(format!("triangle inequality fails for ({i},{j},{k})")));
                }
            }
        }
        Ok(())
    }

    /// Treats a finite median algebra as a space with its median-graph metric.
    pub fn from_algebra(alg: &FiniteMedianAlgebra) -> Result<Self> {
        let graph = MedianGraph::new(alg)?;
        if !graph.is_connected() {
            return Err(Error::invalid("median graph is disconnected"));
        }
        let n = alg.len();
        let labels = alg.labels().iter().cloned().map(Label::Name).collect();
        let edges: Vec<(usize, usize, S)> = graph.edges().iter().map(|&(u, v)| (u, v, S::one())).collect();
        let rule = MedianRule::from_op(alg)?;
        let mut dist = Vec::with_capacity(n * n);
        for u in 0..n {
            for v in 0..n {
                dist.push(S::from_count(graph.distance(u, v).expect("connected") as usize));
            }
        }
        Self::from_parts(labels, dist, rule, Some(edges))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> S {
        self.dist[i * self.labels.len() + j]
    }

    #[inline]
    pub fn mu(&self, a: usize, b: usize, c: usize) -> usize {
        self.rule.median(a, b, c)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &Label {
        &self.labels[i]
    }

    pub fn rule(&self) -> &MedianRule {
        &self.rule
    }

    pub fn graph_edges(&self) -> Option<&[(usize, usize, S)]> {
        self.edges.as_deref()
    }

    pub fn index_of(&self, label: &Label) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Index of the point labelled by these coordinates.
    pub fn point(&self, coords: &[i64]) -> Option<usize> {
        self.labels.iter().position(|l| l.coords() == Some(coords))
    }

    /// Same points and operator, metric multiplied by `s`.
    pub fn scaled(&self, s: S) -> Self {
        assert!(s > S::zero(), "scale must be positive");
        CoarseSpace {
            labels: self.labels.clone(),
            dist: self.dist.iter().map(|&d| d * s).collect(),
            rule: self.rule.clone(),
            edges: self
                .edges
                .as_ref()
                .map(|e| e.iter().map(|&(u, v, w)| (u, v, w * s)).collect()),
        }
    }

    /// The operator as a validated finite median algebra (small spaces only).
    pub fn to_algebra(&self) -> Result<FiniteMedianAlgebra> {
        FiniteMedianAlgebra::tabulate(self, self.labels.iter().map(Label::to_string).collect())
    }

    /// Same points and metric with a different operator.
    pub fn with_rule(&self, rule: MedianRule) -> Result<Self> {
        rule.validate(&self.labels)?;
        Ok(CoarseSpace {
            labels: self.labels.clone(),
            dist: self.dist.clone(),
            rule,
            edges: self.edges.clone(),
        })
    }

    pub fn max_distance(&self) -> S {
        crate::scalar::max_scalar(self.dist.iter().copied()).unwrap_or_else(S::zero)
    }
}

impl<S: Scalar> TernaryOp for CoarseSpace<S> {
    fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    fn median(&self, a: usize, b: usize, c: usize) -> usize {
        self.rule.median(a, b, c)
    }
}

struct HeapEntry<S> {
    dist: S,
    node: usize,
}

impl<S: PartialOrd> PartialEq for HeapEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: PartialOrd> Eq for HeapEntry<S> {}

impl<S: PartialOrd> PartialOrd for HeapEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: PartialOrd> Ord for HeapEntry<S> {
    // Reversed so the binary heap pops the smallest distance.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Dijkstra from every source.
pub fn all_pairs_shortest_paths<S: Scalar>(n: usize, edges: &[(usize, usize, S)]) -> Result<Vec<S>> {
    let mut adjacency: Vec<Vec<(usize, S)>> = vec![Vec::new(); n];
    for &(u, v, w) in edges {
        adjacency[u].push((v, w));
        adjacency[v].push((u, w));
    }
    let mut dist = vec![S::zero(); n * n];
    let mut best: Vec<Option<S>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for s in 0..n {
        best.iter_mut().for_each(|b| *b = None);
        done.iter_mut().for_each(|d| *d = false);
        best[s] = Some(S::zero());
        heap.push(HeapEntry { dist: S::zero(), node: s });
        while let Some(HeapEntry { dist: du, node: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for &(v, w) in &adjacency[u] {
                let cand = du + w;
                if best[v].is_none_or(|b| cand < b) {
                    best[v] = Some(cand);
                    heap.push(HeapEntry { dist: cand, node: v });
                }
            }
        }
        for t in 0..n {
            dist[s * n + t] = best[t].ok_or_else(|| Error::invalid(format!("graph is disconnected: no path {s} -> {t}")))?;
        }
    }
    Ok(dist)
}
