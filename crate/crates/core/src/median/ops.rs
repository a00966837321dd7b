//! Interval, hull and closure operations on any ternary operator.

use std::collections::HashSet;

use super::algebra::majority;
use super::{FiniteMedianAlgebra, TernaryOp};
use crate::error::{Error, Result};

/// `[a,b] = { m(a,x,b) : x }`, sorted.
pub fn interval(op: &impl TernaryOp, a: usize, b: usize) -> Vec<usize> {
    let mut seen = vec![false; op.len()];
    for x in 0..op.len() {
        seen[op.median(a, x, b)] = true;
    }
    collect_flags(&seen)
}

/// `{ c : m(a,c,b) = c }`, sorted. Equal to [`interval`] in a median algebra.
pub fn fixed_interval(op: &impl TernaryOp, a: usize, b: usize) -> Vec<usize> {
    (0..op.len()).filter(|&c| op.median(a, c, b) == c).collect()
}

/// Left fold `m(x₁,…,x_{k+1};b) = m(m(x₁,…,x_k;b), x_{k+1}, b)`.
pub fn iterated_median(op: &impl TernaryOp, xs: &[usize], b: usize) -> usize {
    let (&first, rest) = xs.split_first().expect("iterated median of an empty tuple");
    rest.iter().fold(first, |acc, &x| op.median(acc, x, b))
}

/// `{ m(x₁,…,xₙ;b) : b }`, sorted.
pub fn convex_hull(op: &impl TernaryOp, xs: &[usize]) -> Result<Vec<usize>> {
    if xs.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut seen = vec![false; op.len()];
    for b in 0..op.len() {
        seen[iterated_median(op, xs, b)] = true;
    }
    Ok(collect_flags(&seen))
}

/// Smallest superset of `seed` closed under the operator, in discovery order
/// (seed elements first).
pub fn median_closure(op: &impl TernaryOp, seed: &[usize], cap: usize) -> Result<Vec<usize>> {
    if seed.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut members = vec![false; op.len()];
    let mut order = Vec::new();
    for &s in seed {
        if !members[s] {
            members[s] = true;
            order.push(s);
        }
    }
    let mut z = 0;
    while z < order.len() {
        let top = order[z];
        for i in 0..=z {
            for j in 0..=z {
                let (x, y) = (order[i], order[j]);
                for v in [op.median(x, y, top), op.median(x, top, y), op.median(top, x, y)] {
                    if !members[v] {
                        members[v] = true;
                        order.push(v);
                        if order.len() > cap {
                            return Err(Error::SizeLimit {
                                what: "median closure",
                                requested: order.len(),
                                limit: cap,
                            });
                        }
                    }
                }
            }
        }
        z += 1;
    }
    Ok(order)
}

/// The closure as an algebra in its own right, elements in sorted order.
pub fn closure_algebra(alg: &FiniteMedianAlgebra, seed: &[usize]) -> Result<FiniteMedianAlgebra> {
    let mut elements = median_closure(alg, seed, alg.len())?;
    elements.sort_unstable();
    alg.subalgebra(&elements)
}

/// Closure of bit vectors under bitwise majority, in discovery order.
pub fn majority_closure(seed: &[u64], cap: usize) -> Result<Vec<u64>> {
    if seed.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut members = HashSet::new();
    let mut order = Vec::new();
    for &s in seed {
        if members.insert(s) {
            order.push(s);
        }
    }
    let mut z = 0;
    while z < order.len() {
        let top = order[z];
        for i in 0..=z {
            for j in i..=z {
                let v = majority(order[i], order[j], top);
                if members.insert(v) {
                    order.push(v);
                    if order.len() > cap {
                        return Err(Error::SizeLimit {
                            what: "majority closure",
                            requested: order.len(),
                            limit: cap,
                        });
                    }
                }
            }
        }
        z += 1;
    }
    Ok(order)
}

fn collect_flags(flags: &[bool]) -> Vec<usize> {
    flags
        .iter()
        .enumerate()
        .filter_map(|(i, &f)| f.then_some(i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(n: usize) -> FiniteMedianAlgebra {
        FiniteMedianAlgebra::median_cube(n).unwrap()
    }

    #[test]
    fn intervals_in_the_square() {
        let sq = cube(2);
        assert_eq!(interval(&sq, 2, 2), vec![2]);
        assert_eq!(interval(&sq, 0, 3), vec![0, 1, 2, 3]);
        assert_eq!(fixed_interval(&sq, 0, 3), vec![0, 1, 2, 3]);
        assert_eq!(interval(&sq, 0, 1), vec![0, 1]);
    }

    #[test]
    fn iterated_median_examples() {
        let sq = cube(2);
        let p = |s: &str| sq.index_of(s).unwrap();
        assert_eq!(iterated_median(&sq, &[p("01")], p("00")), p("01"));
        assert_eq!(iterated_median(&sq, &[p("10"), p("01")], p("11")), p("11"));
    }

    #[test]
    fn hulls() {
        let sq = cube(2);
        assert_eq!(convex_hull(&sq, &[1]).unwrap(), vec![1]);
        assert_eq!(convex_hull(&sq, &[0, 3]).unwrap(), vec![0, 1, 2, 3]);
        let c3 = cube(3);
        // 000 and 100 are adjacent.
        assert_eq!(convex_hull(&c3, &[0, 1]).unwrap(), vec![0, 1]);
        assert!(convex_hull(&c3, &[]).is_err());
    }

    #[test]
    fn closures() {
        let sq = cube(2);
        assert_eq!(median_closure(&sq, &[2], 4).unwrap(), vec![2]);
        assert_eq!(median_closure(&sq, &[0, 3], 4).unwrap(), vec![0, 3]);
        // Any three corners of the square are closed; three unit vectors of
        // the 3-cube pick up the origin.
        assert_eq!(median_closure(&sq, &[0, 1, 2], 4).unwrap().len(), 3);
        let c3 = cube(3);
        assert_eq!(median_closure(&c3, &[1, 2, 4], 8).unwrap(), vec![1, 2, 4, 0]);
        assert!(median_closure(&c3, &[1, 2, 4], 3).unwrap_err().is_resource_limit());
        assert_eq!(closure_algebra(&c3, &[1, 2, 4]).unwrap().len(), 4);
    }

    #[test]
    fn universal_generator_closure_sizes() {
        for (p, expected) in [(1usize, 1usize), (2, 2), (3, 4), (4, 12)] {
            let gens: Vec<u64> = (0..p)
                .map(|i| (0..1u64 << p).filter(|s| s >> i & 1 == 1).fold(0, |acc, s| acc | 1 << s))
                .collect();
            assert_eq!(majority_closure(&gens, 1000).unwrap().len(), expected, "p = {p}");
        }
    }
}
