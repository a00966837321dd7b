//! Formal ternary expressions, their rewriting, and free median algebras.

mod canonical;
mod free;
mod rewrite;
mod term;

pub use canonical::{canonical_form, equivalent, generator_code, generator_codes, CanonicalForm, MAX_CANONICAL_P};
pub use free::{free_median_algebra, FreeMedianAlgebra, FreeOptions, FREE_ELEMENT_LIMIT};
pub use rewrite::{
    elementary_neighbors, rewrite_path, rewrite_path_with, EtClasses, NotFound, Rewriter, RewriteStep, Rule, RuleTag,
    SearchLimits,
};
pub use term::{enumerate_terms, parse_term, ParseError, ParseErrorKind, Term};
