use serde::Serialize;

use super::Term;
use crate::median::majority;

/// Largest alphabet whose universal cube fits in a `u64` (2⁶ coordinates).
pub const MAX_CANONICAL_P: usize = 6;

/// A term evaluated at the universal generators of the `2^p`-cube: bit `S`
/// (a subset of `{1..p}` as a bitmask) of generator `i` is `[i ∈ S]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CanonicalForm {
    pub p: usize,
    pub bits: u64,
}

impl CanonicalForm {
    pub fn bit(&self, subset: u64) -> bool {
        self.bits >> subset & 1 == 1
    }
}

/// The universal generator `vᵢ` (1-based) for an alphabet of size `p`.
pub fn generator_code(i: usize, p: usize) -> u64 {
    assert!((1..=p).contains(&i) && p <= MAX_CANONICAL_P);
    (0..1u64 << p)
        .filter(|s| s >> (i - 1) & 1 == 1)
        .fold(0, |acc, s| acc | 1 << s)
}

pub fn generator_codes(p: usize) -> Vec<u64> {
    (1..=p).map(|i| generator_code(i, p)).collect()
}

pub fn canonical_form(t: &Term, p: usize) -> CanonicalForm {
    assert!(t.max_var() <= p, "term uses variables beyond a{p}");
    let gens = generator_codes(p);
    let bits = t.evaluate(&gens, &mut |a: &u64, b: &u64, c: &u64| majority(*a, *b, *c));
    CanonicalForm { p, bits }
}

/// Whether `t1 = t2` is a formal median identity over `p` variables.
pub fn equivalent(t1: &Term, t2: &Term, p: usize) -> bool {
    canonical_form(t1, p) == canonical_form(t2, p)
}
