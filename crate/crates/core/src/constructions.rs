//! Deterministic constructors for grids, trees, products and the weighted
//! counterexample window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_within, Error, Result};
use crate::median::{TernaryOp, TABLE_LIMIT};
use crate::scalar::Scalar;
use crate::space::{CoarseSpace, Label, MedianRule};

/// Default cap on grid points before subdivision (a 40×40 window).
pub const DEFAULT_POINT_CAP: usize = 1600;

/// Hard cap on points, overridable through `MEDIANLAB_MAX_POINTS`.
pub fn point_cap() -> usize {
    std::env::var("MEDIANLAB_MAX_POINTS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_POINT_CAP)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightRule {
    /// Every edge has length 1.
    Unit,
    /// Vertical edges have length 1 for `x ≤ 0`, 3 at `x = 1` and 5 for `x ≥ 2`;
    /// horizontal edges have length 1.
    Sec5,
}

/// A rectangular window of ℤ² with an edge-length rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedGridSpec {
    pub x_min: i64,
    pub x_max: i64,
    pub y_min: i64,
    pub y_max: i64,
    pub rule: WeightRule,
}

impl WeightedGridSpec {
    /// The unit window `[0,n]²`.
    pub fn window(n: i64) -> Self {
        WeightedGridSpec {
            x_min: 0,
            x_max: n,
            y_min: 0,
            y_max: n,
            rule: WeightRule::Unit,
        }
    }

    /// The weighted window `[−margin, n+1+margin]²`.
    pub fn sec5(n: i64, margin: i64) -> Self {
        let (lo, hi) = (-margin, n + 1 + margin);
        WeightedGridSpec {
            x_min: lo,
            x_max: hi,
            y_min: lo,
            y_max: hi,
            rule: WeightRule::Sec5,
        }
    }

    pub fn width(&self) -> usize {
        (self.x_max - self.x_min + 1).max(0) as usize
    }

    pub fn height(&self) -> usize {
        (self.y_max - self.y_min + 1).max(0) as usize
    }

    pub fn len(&self) -> usize {
        self.width().saturating_mul(self.height())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of the edge from `(x,y)` to `(x,y+1)`.
    pub fn vertical_weight(&self, x: i64) -> i64 {
        match self.rule {
            WeightRule::Unit => 1,
            WeightRule::Sec5 if x <= 0 => 1,
            WeightRule::Sec5 if x == 1 => 3,
            WeightRule::Sec5 => 5,
        }
    }

    /// Row-major index of `(x,y)` inside the window.
    pub fn index(&self, x: i64, y: i64) -> Option<usize> {
        if (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y) {
            Some((y - self.y_min) as usize * self.width() + (x - self.x_min) as usize)
        } else {
            None
        }
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::invalid("grid window is empty"));
        }
        if self.rule == WeightRule::Sec5 && !(self.x_min <= 0 && 0 < self.x_max) {
            return Err(Error::invalid("weighted window must satisfy x_min <= 0 < x_max"));
        }
        ensure_within("grid points", self.len(), point_cap())
    }

    fn labels(&self) -> Vec<Label> {
        let mut labels = Vec::with_capacity(self.len());
        for y in self.y_min..=self.y_max {
            for x in self.x_min..=self.x_max {
                labels.push(Label::Coords(vec![x, y]));
            }
        }
        labels
    }

    /// Horizontal and vertical edges with their weights.
    fn edges<S: Scalar>(&self) -> Vec<(usize, usize, S)> {
        let mut edges = Vec::new();
        for y in self.y_min..=self.y_max {
            for x in self.x_min..=self.x_max {
                let here = self.index(x, y).expect("inside");
                if let Some(right) = self.index(x + 1, y) {
                    edges.push((here, right, S::one()));
                }
                if let Some(up) = self.index(x, y + 1) {
                    edges.push((here, up, S::from_count(self.vertical_weight(x) as usize)));
                }
            }
        }
        edges
    }
}

/// The grid graph of the window with the coordinatewise median.
pub fn grid_space<S: Scalar>(spec: &WeightedGridSpec) -> Result<CoarseSpace<S>> {
    spec.validate()?;
    let labels = spec.labels();
    let rule = MedianRule::coordinatewise(&labels)?;
    CoarseSpace::from_graph(labels, spec.edges(), rule)
}

/// The ℓ¹ grid on `[0,n]²`.
pub fn grid_window<S: Scalar>(n: i64) -> Result<CoarseSpace<S>> {
    grid_space(&WeightedGridSpec::window(n))
}

pub fn sec5_space<S: Scalar>(n: i64, margin: i64) -> Result<CoarseSpace<S>> {
    grid_space(&WeightedGridSpec::sec5(n, margin))
}

/// `aₙ = (n+1, n+1)` and `bₙ = (n+1, 0)`.
pub fn sec5_endpoints(n: i64) -> ([i64; 2], [i64; 2]) {
    ([n + 1, n + 1], [n + 1, 0])
}

/// A lattice path with its weighted length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathWitness {
    pub points: Vec<[i64; 2]>,
    pub length: i64,
    pub endpoints: ([i64; 2], [i64; 2]),
}

/// The path `(n+1,n+1) → (0,n+1) → (0,0) → (n+1,0)`, one grid edge per step,
/// measured with the weighted rule.
pub fn gamma_path(n: i64) -> PathWitness {
    let m = n + 1;
    let mut points = Vec::with_capacity(3 * m as usize + 1);
    points.extend((0..=m).rev().map(|x| [x, m]));
    points.extend((0..m).rev().map(|y| [0, y]));
    points.extend((1..=m).map(|x| [x, 0]));
    let spec = WeightedGridSpec::sec5(n, 0);
    let length = points
        .windows(2)
        .map(|w| {
            let ([x0, y0], [x1, y1]) = (w[0], w[1]);
            if y0 == y1 {
                (x1 - x0).abs()
            } else {
                spec.vertical_weight(x0) * (y1 - y0).abs()
            }
        })
        .sum();
    let endpoints = sec5_endpoints(n);
    PathWitness {
        points,
        length,
        endpoints,
    }
}

/// The weighted window with each vertical edge of length `k > 1` cut into `k`
/// unit edges. Grid points keep their window indices; inserted points follow,
/// edge by edge from the bottom. The median sends inserted points to the grid
/// point below them unless two arguments coincide.
pub fn subdivided_sec5<S: Scalar>(n: i64, margin: i64) -> Result<CoarseSpace<S>> {
    let spec = WeightedGridSpec::sec5(n, margin);
    spec.validate()?;
    let mut labels = spec.labels();
    let mut edges: Vec<(usize, usize, S)> = Vec::new();
    for y in spec.y_min..=spec.y_max {
        for x in spec.x_min..=spec.x_max {
            let here = spec.index(x, y).expect("inside");
            if let Some(right) = spec.index(x + 1, y) {
                edges.push((here, right, S::one()));
            }
            let Some(up) = spec.index(x, y + 1) else { continue };
            let k = spec.vertical_weight(x);
            let mut prev = here;
            for step in 1..k {
                let id = labels.len();
                labels.push(Label::Subdivision {
                    base: vec![x, y],
                    step: step as u32,
                    of: k as u32,
                });
                edges.push((prev, id, S::one()));
                prev = id;
            }
            edges.push((prev, up, S::one()));
        }
    }
    let rule = MedianRule::floor(&labels)?;
    CoarseSpace::from_graph(labels, edges, rule)
}

/// Edge-path metric and tree median on `0..n`.
pub fn tree_space<S: Scalar>(n: usize, edges: &[(usize, usize)]) -> Result<CoarseSpace<S>> {
    ensure_within("tree points", n, point_cap())?;
    let rule = MedianRule::tree(n, edges)?;
    let labels = (0..n as i64).map(Label::Int).collect();
    CoarseSpace::from_graph(labels, edges.iter().map(|&(u, v)| (u, v, S::one())).collect(), rule)
}

/// The path `0 – 1 – … – (n−1)`.
pub fn path_tree<S: Scalar>(n: usize) -> Result<CoarseSpace<S>> {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    tree_space(n, &edges)
}

/// A center `0` with leaves `1..=leaves`.
pub fn star_tree<S: Scalar>(leaves: usize) -> Result<CoarseSpace<S>> {
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    tree_space(leaves + 1, &edges)
}

/// Each vertex `i > 0` attaches to a uniformly chosen earlier vertex.
pub fn random_tree<S: Scalar>(n: usize, seed: u64) -> Result<CoarseSpace<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<_> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    tree_space(n, &edges)
}

/// Pairs with the sum metric and componentwise median; index `i·|B| + j`.
pub fn product_space<S: Scalar>(a: &CoarseSpace<S>, b: &CoarseSpace<S>) -> Result<CoarseSpace<S>> {
    let (n, m) = (a.len(), b.len());
    let nm = n.saturating_mul(m);
    ensure_within("product points", nm, TABLE_LIMIT.min(point_cap()))?;
    let labels = (0..nm)
        .map(|x| {
            let (la, lb) = (a.label(x / m), b.label(x % m));
            let part = |l: &Label| match l {
                Label::Int(i) => Some(vec![*i]),
                Label::Coords(c) => Some(c.clone()),
                _ => None,
            };
            match (part(la), part(lb)) {
                (Some(mut ca), Some(cb)) => {
                    ca.extend(cb);
                    Label::Coords(ca)
                }
                _ => Label::Name(format!("({la},{lb})")),
            }
        })
        .collect();
    let mut dist = Vec::with_capacity(nm * nm);
    for x in 0..nm {
        for y in 0..nm {
            dist.push(a.d(x / m, y / m) + b.d(x % m, y % m));
        }
    }
    let mut table = Vec::with_capacity(nm * nm * nm);
    for x in 0..nm {
        for y in 0..nm {
            for z in 0..nm {
                let u = a.median(x / m, y / m, z / m);
                let v = b.median(x % m, y % m, z % m);
                table.push((u * m + v) as u32);
            }
        }
    }
    let edges = match (a.graph_edges(), b.graph_edges()) {
        (Some(ea), Some(eb)) => {
            let mut edges = Vec::new();
            for &(u, v, w) in ea {
                for j in 0..m {
                    edges.push((u * m + j, v * m + j, w));
                }
            }
            for &(u, v, w) in eb {
                for i in 0..n {
                    edges.push((i * m + u, i * m + v, w));
                }
            }
            Some(edges)
        }
        _ => None,
    };
    CoarseSpace::from_parts(labels, dist, MedianRule::table(nm, table)?, edges)
}
