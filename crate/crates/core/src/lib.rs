//! Numerical library for quantum divergences on finite-dimensional von Neumann
//! algebras.
//!
//! The crate computes relative entropy, Uhlmann fidelity, sandwiched Rényi
//! divergences, and a generalized fidelity defined through a Kosaki-style
//! variational formula, for states on *-subalgebras of a full matrix algebra.
//! On top of the divergences it builds:
//!
//! - *-algebra machinery: closure from generators, commutants, and
//!   trace-preserving conditional expectations ([`algebra`]);
//! - quantum channels in Kraus form, Choi-matrix complete-positivity checks,
//!   and the Pimsner–Popa index of a conditional expectation ([`channels`]);
//! - the two variational evaluators — Kosaki's formula for the relative
//!   entropy and the generalized fidelity — driven by per-parameter convex
//!   minimization plus weighted quadrature on a logarithmic grid
//!   ([`variational`]);
//! - standard-form inclusion scenarios `N ⊂ M` on doubled Hilbert spaces, with
//!   entropic certainty relations and index bounds ([`inclusions`]).
//!
//! All Hilbert spaces are `ℂ^d` with `d` small (tens, not thousands); every
//! matrix function goes through an explicit Hermitian eigendecomposition
//! restricted to the support of the operator.

#![forbid(unsafe_code)]

use thiserror::Error;

pub mod algebra;
pub mod channels;
pub mod divergences;
pub mod inclusions;
pub mod matrixkit;
pub mod oracles;
pub mod tol;
pub mod variational;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("not Hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("not positive semidefinite: min eigenvalue {min_eig:.3e}")]
    NotPositive { min_eig: f64 },

    #[error("not a subalgebra: membership residual {residual:.3e}")]
    NotSubalgebra { residual: f64 },

    #[error("unitaries do not close to a group: residual {residual:.3e}")]
    NotAGroup { residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use algebra::{close_star_algebra, commutant, restrict_state, MatrixAlgebra, State};
pub use channels::{
    dpi_harness, group_average_expectation, pimsner_popa_index, random_channel, Channel,
    ConditionalExpectation, DivergenceKind, DpiReport, IndexResult,
};
pub use divergences::{
    fidelity, lp_norm_oracle, relative_entropy, relative_modular_operator, sandwiched_renyi,
    DivergenceResult, ModularOperator, Value,
};
pub use matrixkit::{
    eig_hermitian, matrix_power, support_projection, trace_norm, ComplexMatrix, EigenSystem,
    HermitianMatrix,
};
pub use variational::{
    build_grid, generalized_fidelity, generalized_fidelity_in, kosaki_entropy,
    kosaki_per_t_minimizer, phi_per_t_minimizer, QuadratureGrid, VariationalPath,
};
