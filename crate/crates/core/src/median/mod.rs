//! Finite median algebras.

mod algebra;
pub mod graph;
pub mod identities;
pub mod ops;

pub use algebra::{majority, FiniteMedianAlgebra, TABLE_LIMIT};
pub use graph::MedianGraph;

/// Anything with a total ternary operation on `0..len()`.
pub trait TernaryOp {
    fn len(&self) -> usize;

    fn median(&self, a: usize, b: usize, c: usize) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<T: TernaryOp + ?Sized> TernaryOp for &T {
    fn len(&self) -> usize {
        (**self).len()
    }

    fn median(&self, a: usize, b: usize, c: usize) -> usize {
        (**self).median(a, b, c)
    }
}

/// A raw ternary table with no axioms enforced; used to feed deliberately
/// broken operators to the checkers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TernaryTable {
    n: usize,
    data: Vec<u32>,
}

impl TernaryTable {
    pub fn new(n: usize, data: Vec<u32>) -> Option<Self> {
        if data.len() != n * n * n || data.iter().any(|&v| v as usize >= n) {
            return None;
        }
        Some(TernaryTable { n, data })
    }

    pub fn from_op(op: &impl TernaryOp) -> Self {
        let n = op.len();
        let mut data = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    data.push(op.median(a, b, c) as u32);
                }
            }
        }
        TernaryTable { n, data }
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, value: usize) {
        let n = self.n;
        self.data[(a * n + b) * n + c] = value as u32;
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }
}

impl TernaryOp for TernaryTable {
    fn len(&self) -> usize {
        self.n
    }

    fn median(&self, a: usize, b: usize, c: usize) -> usize {
        self.data[(a * self.n + b) * self.n + c] as usize
    }
}
