use std::collections::VecDeque;

use super::Label;
use crate::error::{ensure_within, Error, Result};
use crate::median::{TernaryOp, TernaryTable, TABLE_LIMIT};

/// Largest coordinate box indexed densely.
pub const BOX_CELL_LIMIT: usize = 1 << 24;

/// Coordinate sets that are not full boxes are checked for closure over all
/// triples up to this many points.
pub const CLOSURE_CHECK_LIMIT: usize = 600;

/// Trees up to this size precompute all lowest common ancestors.
const LCA_TABLE_LIMIT: usize = 2048;

#[inline]
fn median3(a: i64, b: i64, c: i64) -> i64 {
    a.max(b).min(a.min(b).max(c))
}

/// Dense lookup from integer coordinates to point indices.
#[derive(Clone, Debug)]
pub struct CoordIndex {
    dim: usize,
    /// Coordinates per point, flattened; unused for points outside the index.
    coords: Vec<i64>,
    mins: Vec<i64>,
    strides: Vec<usize>,
    cells: Vec<u32>,
}

impl CoordIndex {
    /// Indexes the points whose labels are coordinate vectors.
    fn build(labels: &[Label]) -> Result<Self> {
        let members: Vec<(usize, &[i64])> = labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.coords().map(|c| (i, c)))
            .collect();
        let dim = members
            .first()
            .map(|(_, c)| c.len())
            .ok_or_else(|| Error::invalid("coordinatewise median needs coordinate labels"))?;
        if dim == 0 || members.iter().any(|(_, c)| c.len() != dim) {
            return Err(Error::invalid("coordinate labels must share one positive dimension"));
        }
        let mut mins = vec![i64::MAX; dim];
        let mut maxs = vec![i64::MIN; dim];
        for (_, c) in &members {
            for d in 0..dim {
                mins[d] = mins[d].min(c[d]);
                maxs[d] = maxs[d].max(c[d]);
            }
        }
        let mut strides = vec![0usize; dim];
        let mut volume = 1usize;
        for d in (0..dim).rev() {
            strides[d] = volume;
            let extent = usize::try_from(maxs[d] - mins[d] + 1).unwrap_or(usize::MAX);
            volume = volume.saturating_mul(extent);
        }
        ensure_within("coordinate box cells", volume, BOX_CELL_LIMIT)?;
        let mut cells = vec![u32::MAX; volume];
        let mut coords = vec![0i64; labels.len() * dim];
        for &(i, c) in &members {
            coords[i * dim..(i + 1) * dim].copy_from_slice(c);
            let offset: usize = (0..dim).map(|d| (c[d] - mins[d]) as usize * strides[d]).sum();
            if cells[offset] != u32::MAX {
                return Err(Error::invalid(format!("duplicate point {}", labels[i])));
            }
            cells[offset] = i as u32;
        }
        let index = CoordIndex {
            dim,
            coords,
            mins,
            strides,
            cells,
        };
        if members.len() != volume {
            ensure_within("closure check points", members.len(), CLOSURE_CHECK_LIMIT)?;
            for &(a, _) in &members {
                for &(b, _) in &members {
                    for &(c, _) in &members {
                        if index.lookup(a, b, c) == u32::MAX {
                            return Err(Error::invalid(format!(
                                "points not closed under the coordinatewise median: {}, {}, {}",
                                labels[a], labels[b], labels[c]
                            )));
                        }
                    }
                }
            }
        }
        Ok(index)
    }

    #[inline]
    fn lookup(&self, a: usize, b: usize, c: usize) -> u32 {
        let dim = self.dim;
        let (ca, cb, cc) = (
            &self.coords[a * dim..(a + 1) * dim],
            &self.coords[b * dim..(b + 1) * dim],
            &self.coords[c * dim..(c + 1) * dim],
        );
        let mut offset = 0;
        for d in 0..dim {
            offset += (median3(ca[d], cb[d], cc[d]) - self.mins[d]) as usize * self.strides[d];
        }
        self.cells[offset]
    }

    #[inline]
    fn median(&self, a: usize, b: usize, c: usize) -> usize {
        self.lookup(a, b, c) as usize
    }
}

/// Median of a tree given by parent pointers from root 0.
#[derive(Clone, Debug)]
pub struct TreeMedian {
    parent: Vec<u32>,
    depth: Vec<u32>,
    edges: Vec<(usize, usize)>,
    lca: Option<Vec<u32>>,
}

impl TreeMedian {
    fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySet);
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("tree edge ({u}, {v}) references a missing vertex")));
            }
            let (ru, rv) = (find(&mut uf, u), find(&mut uf, v));
            if ru == rv {
                return Err(Error::invalid(format!("cycle detected at edge ({u}, {v})")));
            }
            uf[ru] = rv;
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        if edges.len() + 1 != n {
            return Err(Error::invalid("tree edges do not connect all vertices"));
        }
        let mut parent = vec![u32::MAX; n];
        let mut depth = vec![0u32; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        parent[0] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = u as u32;
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut tree = TreeMedian {
            parent,
            depth,
            edges: edges.to_vec(),
            lca: None,
        };
        if n <= LCA_TABLE_LIMIT {
            let mut table = vec![0u32; n * n];
            for a in 0..n {
                for b in a..n {
                    let l = tree.climb_lca(a, b) as u32;
                    table[a * n + b] = l;
                    table[b * n + a] = l;
                }
            }
            tree.lca = Some(table);
        }
        Ok(tree)
    }

    fn climb_lca(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a] as usize;
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b] as usize;
        }
        while a != b {
            a = self.parent[a] as usize;
            b = self.parent[b] as usize;
        }
        a
    }

    #[inline]
    fn lca(&self, a: usize, b: usize) -> usize {
        match &self.lca {
            Some(t) => t[a * self.parent.len() + b] as usize,
            None => self.climb_lca(a, b),
        }
    }

    /// The deepest of the three pairwise lowest common ancestors.
    #[inline]
    fn median(&self, a: usize, b: usize, c: usize) -> usize {
        let candidates = [self.lca(a, b), self.lca(b, c), self.lca(a, c)];
        candidates
            .into_iter()
            .max_by_key(|&v| self.depth[v])
            .expect("three candidates")
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// How a space computes `μ`.
#[derive(Clone, Debug)]
pub enum MedianRule {
    Table(TernaryTable),
    /// Coordinatewise median of integer coordinate labels.
    Coordinatewise(CoordIndex),
    /// Subdivision points are sent to the coordinate point below them before
    /// taking the coordinatewise median, unless two arguments coincide, in
    /// which case the repeated point is returned.
    Floor { floor: Vec<u32>, index: CoordIndex },
    Tree(TreeMedian),
}

impl MedianRule {
    pub fn table(n: usize, data: Vec<u32>) -> Result<Self> {
        ensure_within("median table points", n, TABLE_LIMIT)?;
        TernaryTable::new(n, data)
            .map(MedianRule::Table)
            .ok_or_else(|| Error::invalid(format!("median table needs {} entries below {n}", n * n * n)))
    }

    pub fn from_op(op: &impl TernaryOp) -> Result<Self> {
        ensure_within("median table points", op.len(), TABLE_LIMIT)?;
        Ok(MedianRule::Table(TernaryTable::from_op(op)))
    }

    pub fn coordinatewise(labels: &[Label]) -> Result<Self> {
        if labels.iter().any(|l| l.coords().is_none()) {
            return Err(Error::invalid("coordinatewise median needs coordinate labels on every point"));
        }
        Ok(MedianRule::Coordinatewise(CoordIndex::build(labels)?))
    }

    pub fn floor(labels: &[Label]) -> Result<Self> {
        let index = CoordIndex::build(labels)?;
        let mut floor = Vec::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            let f = match l {
                Label::Coords(_) => i,
                Label::Subdivision { base, step, of } => {
                    if *step == 0 || step >= of {
                        return Err(Error::invalid(format!("subdivision step {step}/{of} out of range")));
                    }
                    labels
                        .iter()
                        .position(|m| m.coords() == Some(base.as_slice()))
                        .ok_or_else(|| Error::invalid(format!("subdivision point {l} has no base point")))?
                }
                _ => return Err(Error::invalid(format!("label {l} is neither a coordinate nor a subdivision point"))),
            };
            floor.push(f as u32);
        }
        Ok(MedianRule::Floor { floor, index })
    }

    pub fn tree(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Ok(MedianRule::Tree(TreeMedian::new(n, edges)?))
    }

    pub(crate) fn validate(&self, labels: &[Label]) -> Result<()> {
        let n = labels.len();
        let expected = match self {
            MedianRule::Table(t) => t.len(),
            MedianRule::Coordinatewise(ix) => ix.coords.len() / ix.dim,
            MedianRule::Floor { floor, .. } => floor.len(),
            MedianRule::Tree(t) => t.parent.len(),
        };
        if expected != n {
            return Err(Error::invalid(format!("median rule covers {expected} points, space has {n}")));
        }
        Ok(())
    }

    #[inline]
    pub fn median(&self, a: usize, b: usize, c: usize) -> usize {
        match self {
            MedianRule::Table(t) => t.median(a, b, c),
            MedianRule::Coordinatewise(ix) => ix.median(a, b, c),
            MedianRule::Floor { floor, index } => {
                if a == b || a == c {
                    a
                } else if b == c {
                    b
                } else {
                    index.median(floor[a] as usize, floor[b] as usize, floor[c] as usize)
                }
            }
            MedianRule::Tree(t) => t.median(a, b, c),
        }
    }

    /// The point below `i` for floor rules; `i` itself otherwise.
    pub fn floor_of(&self, i: usize) -> usize {
        match self {
            MedianRule::Floor { floor, .. } => floor[i] as usize,
            _ => i,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MedianRule::Table(_) => "table",
            MedianRule::Coordinatewise(_) => "coordinatewise",
            MedianRule::Floor { .. } => "floor-coordinatewise",
            MedianRule::Tree(_) => "tree",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_labels(n: i64) -> Vec<Label> {
        let mut out = Vec::new();
        for y in 0..=n {
            for x in 0..=n {
                out.push(Label::Coords(vec![x, y]));
            }
        }
        out
    }

    #[test]
    fn coordinatewise_on_a_square() {
        let labels = grid_labels(1);
        let rule = MedianRule::coordinatewise(&labels).unwrap();
        // (0,0), (0,1), (1,1) -> (0,1)
        assert_eq!(rule.median(0, 2, 3), 2);
    }

    #[test]
    fn non_closed_coordinate_sets_are_rejected() {
        let labels = vec![Label::Coords(vec![0, 0]), Label::Coords(vec![1, 1]), Label::Coords(vec![0, 2])];
        assert!(MedianRule::coordinatewise(&labels).is_err());
        let labels = vec![Label::Coords(vec![0, 0]), Label::Coords(vec![1, 1]), Label::Coords(vec![0, 1])];
        assert!(MedianRule::coordinatewise(&labels).is_ok());
    }

    #[test]
    fn trees() {
        let path = MedianRule::tree(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        assert_eq!(path.median(0, 2, 4), 2);
        let star = MedianRule::tree(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(star.median(1, 2, 3), 0);
        assert!(MedianRule::tree(3, &[(0, 1), (1, 2), (2, 0)]).is_err());
        assert!(MedianRule::tree(4, &[(0, 1), (2, 3)]).is_err());
    }

    #[test]
    fn floor_rule_repeats_and_floors() {
        let mut labels = grid_labels(1);
        labels.push(Label::Subdivision { base: vec![1, 0], step: 1, of: 3 });
        labels.push(Label::Subdivision { base: vec![1, 0], step: 2, of: 3 });
        let rule = MedianRule::floor(&labels).unwrap();
        assert_eq!(rule.median(4, 4, 0), 4);
        assert_eq!(rule.median(0, 4, 4), 4);
        // Two subdivision points over (1,0) and the corner (0,1).
        assert_eq!(rule.median(4, 5, 2), 1);
        assert_eq!(rule.floor_of(5), 1);
    }
}
