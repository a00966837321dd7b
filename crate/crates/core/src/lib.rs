//! Median algebras, coarse median spaces and the tools to measure them.
//!
//! The core types are generic over a [`Scalar`]; the aliases below fix the
//! two common choices.

pub mod commands;
pub mod constructions;
pub mod error;
pub mod ledger;
pub mod median;
pub mod scalar;
pub mod space;
pub mod terms;
pub mod verify;

pub use error::{Error, Result};
pub use ledger::ConstantLedger;
pub use median::{FiniteMedianAlgebra, MedianGraph, TernaryOp};
pub use scalar::{Exact, Scalar};
pub use space::{CoarseSpace, Label, MedianRule};

/// A space with floating-point distances.
pub type Space = CoarseSpace<f64>;

/// A space with exact rational distances.
pub type ExactSpace = CoarseSpace<Exact>;

pub type Ledger = ConstantLedger<f64>;

pub type ExactLedger = ConstantLedger<Exact>;
