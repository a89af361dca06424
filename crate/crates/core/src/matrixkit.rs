//! Dense complex/Hermitian matrix primitives.
//!
//! Eigendecompositions with a deterministic ordering and phase convention,
//! matrix functions evaluated on the support of a positive operator, trace
//! norms, and support projections. Dimensions stay small (≤ ~64), so every
//! matrix function goes through a full Hermitian eigendecomposition rather
//! than Padé or scaling-and-squaring schemes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::tol;
use crate::{Error, Result};

/// Dense complex matrix; the numerical substrate for everything else.
pub type ComplexMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Hilbert–Schmidt inner product `Tr(a† b)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.dotc(b)
}

/// Largest entry magnitude.
pub fn max_abs_entry(a: &ComplexMatrix) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub(crate) fn all_finite(a: &ComplexMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Sum of singular values.
///
/// For Hermitian input this is the sum of absolute eigenvalues; in general it
/// is the trace norm `‖a‖₁ = Tr √(a†a)`.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if !all_finite(a) {
        return Err(Error::NonFinite);
    }
    Ok(a.clone().singular_values().iter().sum())
}

/// Largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    a.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |m, s| m.max(*s))
}

/// A complex matrix certified Hermitian within tolerance and stored exactly
/// symmetrized, `A ← (A + A†)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    mat: ComplexMatrix,
    hermiticity_defect: f64,
}

impl HermitianMatrix {
    /// Symmetrize and wrap `mat`, rejecting matrices whose Hermiticity defect
    /// `max |A - A†|` exceeds `1e-12 · dim · scale`.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if !all_finite(&mat) {
            return Err(Error::NonFinite);
        }
        let dim = mat.nrows();
        let scale = max_abs_entry(&mat).max(1.0);
        let tolerance = tol::HERMITICITY_PER_DIM * dim as f64 * scale;
        let defect = max_abs_entry(&(&mat - mat.adjoint()));
        if defect > tolerance {
            return Err(Error::NotHermitian {
                defect,
                tol: tolerance,
            });
        }
        let sym = (&mat + mat.adjoint()).scale(0.5);
        Ok(Self {
            mat: sym,
            hermiticity_defect: defect,
        })
    }

    /// Wrap a matrix that is Hermitian by construction (already symmetric up
    /// to rounding); still symmetrizes to keep downstream eigensolves honest.
    pub(crate) fn symmetrize(mat: ComplexMatrix) -> Self {
        let defect = max_abs_entry(&(&mat - mat.adjoint()));
        let sym = (&mat + mat.adjoint()).scale(0.5);
        Self {
            mat: sym,
            hermiticity_defect: defect,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(dim, dim),
            hermiticity_defect: 0.0,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::zeros(dim, dim),
            hermiticity_defect: 0.0,
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let mat = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        });
        Self {
            mat,
            hermiticity_defect: 0.0,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.hermiticity_defect
    }

    /// Real part of the trace (the imaginary part is zero after
    /// symmetrization).
    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues and a
/// deterministic eigenvector phase convention.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Ascending real eigenvalues.
    pub eigenvalues: DVector<f64>,
    /// Unitary matrix whose columns are the corresponding eigenvectors.
    pub eigenvectors: ComplexMatrix,
    /// Number of eigenvalues above the relative support threshold.
    pub support_rank: usize,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Relative support threshold for this spectrum:
    /// `1e-12 · dim · max|eigenvalue|`.
    pub fn support_threshold(&self) -> f64 {
        support_threshold(self.dim(), self.max_abs_eigenvalue())
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, x| m.min(*x))
    }

    /// `V f(Λ) V†` with `f` applied only to eigenvalues strictly above
    /// `threshold`; the rest map to zero.
    pub fn apply_on_support(&self, threshold: f64, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for j in 0..d {
            let lam = self.eigenvalues[j];
            let val = if lam > threshold { f(lam) } else { 0.0 };
            scaled
                .column_mut(j)
                .iter_mut()
                .for_each(|z| *z *= Complex64::new(val, 0.0));
        }
        &scaled * self.eigenvectors.adjoint()
    }

    /// Reconstruct the original matrix, `V Λ V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_on_support(f64::NEG_INFINITY, |x| x)
    }
}

/// Default relative support threshold for a spectrum of the given dimension
/// and magnitude.
pub fn support_threshold(dim: usize, max_abs_eig: f64) -> f64 {
    tol::SUPPORT_REL * dim as f64 * max_abs_eig
}

/// Hermitian eigendecomposition with deterministic output: eigenvalues sorted
/// ascending, ties broken by lexicographic comparison of the phase-normalized
/// eigenvectors, and each eigenvector's first significant component made real
/// positive.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<EigenSystem> {
    if !all_finite(a.matrix()) {
        return Err(Error::NonFinite);
    }
    let d = a.dim();
    let se = a.matrix().clone().symmetric_eigen();

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));

    let mut eigenvalues = DVector::<f64>::zeros(d);
    let mut eigenvectors = ComplexMatrix::zeros(d, d);
    for (slot, &src) in order.iter().enumerate() {
        eigenvalues[slot] = se.eigenvalues[src];
        let mut col = se.eigenvectors.column(src).clone_owned();
        phase_normalize(&mut col);
        eigenvectors.set_column(slot, &col);
    }

    // Lexicographic ordering inside runs of bitwise-equal eigenvalues keeps
    // degenerate subspaces in a reproducible column order.
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && eigenvalues[end].to_bits() == eigenvalues[start].to_bits() {
            end += 1;
        }
        if end - start > 1 {
            let mut cols: Vec<DVector<Complex64>> = (start..end)
                .map(|j| eigenvectors.column(j).clone_owned())
                .collect();
            cols.sort_by(compare_columns);
            for (k, col) in cols.iter().enumerate() {
                eigenvectors.set_column(start + k, col);
            }
        }
        start = end;
    }

    let max_abs = eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let thr = support_threshold(d, max_abs);
    let support_rank = eigenvalues.iter().filter(|&&x| x > thr).count();

    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        support_rank,
    })
}

fn phase_normalize(col: &mut DVector<Complex64>) {
    let lead = col.iter().find(|z| z.norm() > 1e-9).copied();
    if let Some(z) = lead {
        let phase = z / z.norm();
        let correction = phase.conj();
        col.iter_mut().for_each(|c| *c *= correction);
    }
}

fn compare_columns(a: &DVector<Complex64>, b: &DVector<Complex64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let c = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if c != std::cmp::Ordering::Equal {
            return c;
        }
    }
    std::cmp::Ordering::Equal
}

/// `a^exponent` through the functional calculus restricted to the support of
/// `a`: eigenvalues above the support threshold are raised to the power, the
/// rest map to zero. Requires `a` positive semidefinite within tolerance.
pub fn matrix_power(a: &HermitianMatrix, exponent: f64) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(a)?;
    let min = eig.min_eigenvalue();
    if min < -tol::PSD_SLACK * eig.max_abs_eigenvalue().max(1.0) {
        return Err(Error::NotPositive { min_eig: min });
    }
    let thr = eig.support_threshold();
    let out = eig.apply_on_support(thr, |lam| lam.powf(exponent));
    Ok(HermitianMatrix::symmetrize(out))
}

/// Principal square root on the support.
pub fn matrix_sqrt(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    matrix_power(a, 0.5)
}

/// Natural logarithm on the support of `a`; the kernel maps to zero (not to
/// `-∞`), so the result is only meaningful in traces against operators
/// supported inside the support of `a`.
pub fn log_on_support(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(a)?;
    let min = eig.min_eigenvalue();
    if min < -tol::PSD_SLACK * eig.max_abs_eigenvalue().max(1.0) {
        return Err(Error::NotPositive { min_eig: min });
    }
    let thr = eig.support_threshold();
    Ok(HermitianMatrix::symmetrize(
        eig.apply_on_support(thr, |lam| lam.ln()),
    ))
}

/// Orthogonal projection onto the span of eigenvectors with eigenvalue
/// strictly above `threshold`.
pub fn support_projection(a: &HermitianMatrix, threshold: f64) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(a)?;
    Ok(HermitianMatrix::symmetrize(
        eig.apply_on_support(threshold, |_| 1.0),
    ))
}

/// Support projection at the default relative threshold.
pub fn default_support_projection(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(a)?;
    let thr = eig.support_threshold();
    Ok(HermitianMatrix::symmetrize(
        eig.apply_on_support(thr, |_| 1.0),
    ))
}

/// σ_x.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

/// σ_y.
pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            ZERO,
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            ZERO,
        ],
    )
}

/// σ_z.
pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, Complex64::new(-1.0, 0.0)])
}

/// Clock matrix `diag(1, ω, …, ω^{n-1})`, `ω = e^{2πi/n}`.
pub fn clock(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, std::f64::consts::TAU * i as f64 / n as f64)
        } else {
            ZERO
        }
    })
}

/// Cyclic shift `|i⟩ ↦ |i+1 mod n⟩`.
pub fn shift(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| if i == (j + 1) % n { ONE } else { ZERO })
}

/// Standard basis vector `|i⟩` in `ℂ^d`.
pub fn basis_vector(d: usize, i: usize) -> DVector<Complex64> {
    DVector::from_fn(d, |k, _| if k == i { ONE } else { ZERO })
}

/// Maximally entangled vector `Σ_i |ii⟩ / √n` in `ℂ^n ⊗ ℂ^n`.
pub fn bell_vector(n: usize) -> DVector<Complex64> {
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    DVector::from_fn(n * n, |k, _| {
        let (i, j) = (k / n, k % n);
        if i == j {
            amp
        } else {
            ZERO
        }
    })
}

/// Deterministic pairwise summation over a fixed ordering.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}
