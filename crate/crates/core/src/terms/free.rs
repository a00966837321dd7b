use std::collections::HashMap;

use super::canonical::{generator_codes, MAX_CANONICAL_P};
use super::Term;
use crate::error::{ensure_within, Result};
use crate::median::{majority, FiniteMedianAlgebra};

/// Cap on the closure size while building a free algebra.
pub const FREE_ELEMENT_LIMIT: usize = 1024;

#[derive(Clone, Copy, Debug)]
pub struct FreeOptions {
    /// Largest alphabet accepted without forcing.
    pub max_p: usize,
}

impl Default for FreeOptions {
    fn default() -> Self {
        FreeOptions { max_p: 5 }
    }
}

/// The free median algebra on `p` generators together with a chosen
/// representative term for every element.
///
/// Elements are ordered by the complexity of their representative and then
/// by its serialized form, so the generators come first.
#[derive(Clone, Debug)]
pub struct FreeMedianAlgebra {
    pub p: usize,
    pub algebra: FiniteMedianAlgebra,
    pub representatives: Vec<Term>,
}

impl FreeMedianAlgebra {
    /// Index of the `i`-th generator (1-based).
    pub fn generator(&self, i: usize) -> usize {
        assert!((1..=self.p).contains(&i));
        i - 1
    }

    pub fn representative(&self, element: usize) -> &Term {
        &self.representatives[element]
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Realizes every element in another ternary structure by evaluating its
    /// representative at `images` (one per generator).
    pub fn evaluate_all<T: Clone>(&self, images: &[T], op: &mut impl FnMut(&T, &T, &T) -> T) -> Vec<T> {
        self.representatives.iter().map(|t| t.evaluate(images, op)).collect()
    }
}

/// Builds the closure of the universal generators under majority, choosing
/// representatives level by level: an element first reached at complexity
/// `k` is represented by the smallest serialized `⟨x y z⟩` over already chosen
/// representatives.
pub fn free_median_algebra(p: usize, options: FreeOptions) -> Result<FreeMedianAlgebra> {
    ensure_within("free algebra generators", p, options.max_p.min(MAX_CANONICAL_P))?;
    if p == 0 {
        return Err(crate::error::Error::invalid("free algebra needs at least one generator"));
    }
    let gens = generator_codes(p);
    let mut codes: Vec<u64> = gens.clone();
    let mut reps: Vec<Term> = (1..=p).map(Term::Var).collect();
    let mut known: HashMap<u64, usize> = gens.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut level_start = 0;
    loop {
        let level_end = codes.len();
        let mut found: HashMap<u64, (String, Term)> = HashMap::new();
        // At least one argument must come from the newest level.
        for x in 0..level_end {
            for y in 0..level_end {
                for z in 0..level_end {
                    if x < level_start && y < level_start && z < level_start {
                        continue;
                    }
                    let code = majority(codes[x], codes[y], codes[z]);
                    if known.contains_key(&code) {
                        continue;
                    }
                    let term = Term::node(reps[x].clone(), reps[y].clone(), reps[z].clone());
                    let text = term.to_string();
                    match found.get(&code) {
                        Some((best, _)) if *best <= text => {}
                        _ => {
                            found.insert(code, (text, term));
                            ensure_within("free algebra elements", codes.len() + found.len(), FREE_ELEMENT_LIMIT)?;
                        }
                    }
                }
            }
        }
        if found.is_empty() {
            break;
        }
        let mut fresh: Vec<(String, Term, u64)> = found.into_iter().map(|(c, (s, t))| (s, t, c)).collect();
        fresh.sort_by(|a, b| a.0.cmp(&b.0));
        ensure_within("free algebra elements", codes.len() + fresh.len(), FREE_ELEMENT_LIMIT)?;
        level_start = level_end;
        for (_, term, code) in fresh {
            known.insert(code, codes.len());
            codes.push(code);
            reps.push(term);
        }
    }
    let labels = reps.iter().map(Term::to_string).collect();
    let algebra = FiniteMedianAlgebra::from_codes_unchecked(labels, codes)?;
    Ok(FreeMedianAlgebra {
        p,
        algebra,
        representatives: reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::median::TernaryOp;
    use crate::terms::canonical_form;

    #[test]
    fn sizes() {
        let sizes: Vec<usize> = (1..=4)
            .map(|p| free_median_algebra(p, FreeOptions::default()).unwrap().len())
            .collect();
        assert_eq!(sizes, vec![1, 2, 4, 12]);
    }

    #[test]
    fn representatives_evaluate_to_their_element() {
        let f = free_median_algebra(4, FreeOptions::default()).unwrap();
        for (i, t) in f.representatives.iter().enumerate() {
            assert_eq!(Some(canonical_form(t, 4).bits), f.algebra.code(i));
        }
        assert_eq!(f.representative(0).to_string(), "a1");
        assert_eq!(f.representative(4).to_string(), "<a1 a2 a3>");
        assert!(f.representatives.iter().all(|t| t.complexity() <= 2));
    }

    #[test]
    fn p3_is_a_star() {
        let f = free_median_algebra(3, FreeOptions::default()).unwrap();
        assert_eq!(f.algebra.median(0, 1, 2), 3);
    }

    #[test]
    fn limits() {
        let err = free_median_algebra(6, FreeOptions::default()).unwrap_err();
        assert!(err.is_resource_limit());
        let err = free_median_algebra(6, FreeOptions { max_p: 6 }).unwrap_err();
        assert!(err.is_resource_limit());
    }
}
