//! Laplacians and Schrödinger operators on Hermitian vector bundles over
//! weighted graphs.
//!
//! The crate builds the bundle Laplacian `Δ^{F,Φ}` for a unitary connection
//! `Φ`, perturbs it by an operator-valued potential `W`, and checks at finite
//! (truncated) scale the identities and inequalities that govern these
//! operators: Green's formula, Kato's inequality, the ground state transform,
//! ℓ^p accretivity, heat semigroup contraction, intrinsic metrics and the
//! Agmon-type estimate used for essential self-adjointness.
//!
//! Batch work (seeded instances, sampled sections, all-pairs distances) runs
//! through [`exec::Execution`], which uses rayon when the `parallel` feature
//! is enabled and falls back to a sequential loop otherwise.

pub mod bundle;
pub mod cli;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod graph;
pub mod identities;
pub mod instances;
pub mod linalg;
pub mod operator;
pub mod semigroup;
pub mod tolerance;

pub use bundle::{Bundle, Connection, LpExponent, Potential, Section};
pub use error::{Error, Result};
pub use exec::Execution;
pub use graph::{GraphFamily, VertexId, WeightedGraph};
pub use operator::BlockOperator;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;
