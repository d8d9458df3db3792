//! Numerical classification of vector fields on pseudo-Riemannian metrics
//! (Killing / Nil-Killing / generic), polynomial curvature invariants, and
//! flow-based checks of invariant-preserving diffeomorphisms.
//!
//! The differentiation substrate is truncated multivariate Taylor arithmetic
//! ([`jet`]); metrics and vector fields are defined by parsed expressions
//! ([`expr`]); [`geometry`] builds Christoffel/Riemann tensors and the fixed
//! invariant list; [`symmetry`] houses the Lie-derivative and nilpotency
//! classifiers; [`flow`] integrates vector-field flows; [`catalog`] ships the
//! built-in example metrics; [`analysis`] assembles CSI/VSI/transitivity
//! verdicts; [`document`] is the JSON front end used by the CLI.

pub mod analysis;
pub mod catalog;
pub mod document;
pub mod expr;
pub mod flow;
pub mod geometry;
pub mod jet;
pub mod sample;
pub mod symmetry;
