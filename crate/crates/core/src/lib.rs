//! Numerical verification of Hilbert–Schmidt characterizations for weighted
//! composition and radial composition-differentiation operators from Hardy
//! and Bergman spaces of the ball and polydisk into `A²_β(𝔻^m)`.
//!
//! A job fixes a source space, an operator, polynomial symbols `φ` and `ψ`
//! and a truncation `K`. [`hs::verify`] computes the partial sums
//! `S_K = Σ_{|J|≤K} ‖T e_J‖²`, the closed-form integral that characterizes the
//! Hilbert–Schmidt property, a certified tail bound, and a verdict.

pub mod error;
pub mod frontend;
pub mod hs;
pub mod multiindex;
pub mod quadrature;
pub mod series;
pub mod spaces;
pub mod special;
pub mod sum;

pub use error::{Error, Result};
pub use hs::{verify, HsJob, HsReport, Magnitude, TailBound, Tolerances, Verdict};
pub use multiindex::MultiIndex;
pub use quadrature::{DiskRule, PolydiskRule};
pub use series::{PolynomialMap, TargetDomain, VectorSymbol};
pub use spaces::{Exponent, OperatorKind, SourceSpace, SpaceKind};
