//! Named numerical tolerances used across the crate.
//!
//! Everything is double precision; the constants below separate "machine
//! precision plus slack" checks from method-level convergence thresholds so
//! that no module carries its own ad-hoc magic numbers.

/// Hermiticity defect allowed per unit of dimension when symmetrizing input,
/// `max |A - A†|_entry <= HERMITICITY_PER_DIM * dim * scale`.
pub const HERMITICITY_PER_DIM: f64 = 1e-12;

/// Relative support cutoff: eigenvalues below
/// `SUPPORT_REL * dim * max|eigenvalue|` are treated as zero, so rescaling a
/// state never changes its support.
pub const SUPPORT_REL: f64 = 1e-12;

/// Acceptable negative eigenvalue for a "positive semidefinite" input.
pub const PSD_SLACK: f64 = 1e-10;

/// Eigendecomposition reconstruction error, relative to the Frobenius norm.
pub const EIG_RECONSTRUCTION: f64 = 1e-10;

/// Singular values below `RANK_REL * sigma_max` do not grow a span during
/// *-algebra closure, and below `NULL_REL * max(sigma_max, 1)` a right
/// singular vector counts as null space in commutant solves.
pub const RANK_REL: f64 = 1e-10;
pub const NULL_REL: f64 = 1e-9;

/// Membership residual for "this matrix lies in that algebra".
pub const MEMBERSHIP: f64 = 1e-9;

/// Conditional expectation certification thresholds.
pub const BIMODULE: f64 = 1e-8;
pub const IDEMPOTENCY: f64 = 1e-10;

/// Choi eigenvalue floor for the complete-positivity certificate used by the
/// index bisection, and the relative width of that bisection.
pub const CHOI_CP: f64 = 1e-9;
pub const INDEX_BISECTION_REL: f64 = 1e-9;
/// Relative offset at which the "not completely positive" counter-certificate
/// is evaluated.
pub const INDEX_DELTA: f64 = 1e-6;

/// Kraus trace-preservation defect allowed on construction.
pub const TRACE_PRESERVING: f64 = 1e-10;

/// Smoothed trace-norm gradient descent: initial smoothing, number of
/// smoothing stages (eps_k = eps0 * 10^-k), gradient norm target, and the
/// iteration cap per stage. Seven stages (down to eps = 1e-9) keep the
/// smoothing bias near trace-norm kinks at the ~1e-5 level in the per-node
/// values; the spectral (Barzilai–Borwein) step rule makes the extra stages
/// cheap from a warm start.
pub const GD_EPS0: f64 = 1e-3;
pub const GD_STAGES: usize = 7;
pub const GD_GRAD_TOL: f64 = 1e-8;
pub const GD_MAX_ITERS: usize = 500;

/// Default logarithmic quadrature grid.
pub const GRID_T_MIN: f64 = 1e-6;
pub const GRID_T_MAX: f64 = 1e6;
pub const GRID_POINTS: usize = 2048;

/// The generalized fidelity order parameter is clamped to this interval;
/// both endpoints of (1/2, 1) degenerate (the weight exponent hits 0 or 1).
pub const S_CLAMP_LO: f64 = 0.501;
pub const S_CLAMP_HI: f64 = 0.999;
