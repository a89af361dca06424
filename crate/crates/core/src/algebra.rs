//! Finite-dimensional *-subalgebras of `B(ℂ^d)`.
//!
//! Algebras are carried as Hilbert–Schmidt-orthonormal bases of their span
//! rather than block (Artin–Wedderburn) decompositions: closure from
//! generators is a span fixed-point iteration, commutants come from null
//! spaces of `[X, g] = 0`, and conditional expectations are HS-orthogonal
//! projections onto the span. States are positive (possibly subnormalized)
//! density operators implementing functionals `ω(a) = Tr(ρ a)`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channels::{kraus_from_choi, superop_to_choi, Channel, ConditionalExpectation};
use crate::matrixkit::{all_finite, eig_hermitian, hs_inner, ComplexMatrix, HermitianMatrix};
use crate::tol;
use crate::{Error, Result};

/// Column-major flattening of a `d×d` matrix into `ℂ^{d²}`.
pub(crate) fn vec_mat(m: &ComplexMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

pub(crate) fn unvec_mat(v: &DVector<Complex64>, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(d, d, v.as_slice())
}

/// Orthonormal basis of the span of `mats` under the HS inner product,
/// obtained from the left singular vectors of the stacked column matrix.
fn orthonormal_span(mats: &[ComplexMatrix], d: usize) -> Vec<ComplexMatrix> {
    if mats.is_empty() {
        return Vec::new();
    }
    let dd = d * d;
    let k = mats.len();
    let mut stacked = ComplexMatrix::zeros(dd, k);
    for (j, m) in mats.iter().enumerate() {
        stacked.set_column(j, &vec_mat(m));
    }
    let svd = stacked.svd(true, false);
    let u = svd.u.expect("svd requested u");
    let smax = svd
        .singular_values
        .iter()
        .fold(0.0f64, |acc, s| acc.max(*s));
    let mut basis = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > tol::RANK_REL * smax {
            basis.push(unvec_mat(&u.column(i).clone_owned(), d));
        }
    }
    basis
}

/// A unital *-subalgebra of the `d×d` matrices, carried by generators and a
/// computed HS-orthonormal basis of its span.
#[derive(Debug, Clone)]
pub struct MatrixAlgebra {
    ambient_dim: usize,
    generators: Vec<ComplexMatrix>,
    basis: Vec<ComplexMatrix>,
    contains_identity: bool,
}

impl MatrixAlgebra {
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Linear dimension of the algebra.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn generators(&self) -> &[ComplexMatrix] {
        &self.generators
    }

    pub fn contains_identity(&self) -> bool {
        self.contains_identity
    }

    /// The full matrix algebra `B(ℂ^d)`, with matrix units as basis.
    pub fn full(d: usize) -> Self {
        let mut basis = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut e = ComplexMatrix::zeros(d, d);
                e[(i, j)] = Complex64::new(1.0, 0.0);
                basis.push(e);
            }
        }
        Self {
            ambient_dim: d,
            generators: Vec::new(),
            basis,
            contains_identity: true,
        }
    }

    /// The scalars `ℂ·1`.
    pub fn scalars(d: usize) -> Self {
        let basis = vec![ComplexMatrix::identity(d, d).scale(1.0 / (d as f64).sqrt())];
        Self {
            ambient_dim: d,
            generators: Vec::new(),
            basis,
            contains_identity: true,
        }
    }

    /// `M_n ⊗ 1_m` acting on `ℂ^{nm}`.
    pub fn tensor_left(n: usize, m: usize) -> Self {
        let scale = 1.0 / (m as f64).sqrt();
        let id = ComplexMatrix::identity(m, m);
        let mut basis = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut e = ComplexMatrix::zeros(n, n);
                e[(i, j)] = Complex64::new(1.0, 0.0);
                basis.push(e.kronecker(&id).scale(scale));
            }
        }
        Self {
            ambient_dim: n * m,
            generators: Vec::new(),
            basis,
            contains_identity: true,
        }
    }

    /// `1_n ⊗ M_m` acting on `ℂ^{nm}`.
    pub fn tensor_right(n: usize, m: usize) -> Self {
        let scale = 1.0 / (n as f64).sqrt();
        let id = ComplexMatrix::identity(n, n);
        let mut basis = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let mut e = ComplexMatrix::zeros(m, m);
                e[(i, j)] = Complex64::new(1.0, 0.0);
                basis.push(id.kronecker(&e).scale(scale));
            }
        }
        Self {
            ambient_dim: n * m,
            generators: Vec::new(),
            basis,
            contains_identity: true,
        }
    }

    /// Build an algebra from a spanning set that is already expected to be
    /// closed; the span is orthonormalized and the closure is verified.
    pub fn from_span(mats: &[ComplexMatrix], ambient_dim: usize) -> Result<Self> {
        for m in mats {
            check_square(m, ambient_dim)?;
        }
        let mut with_id = mats.to_vec();
        with_id.push(ComplexMatrix::identity(ambient_dim, ambient_dim));
        let basis = orthonormal_span(&with_id, ambient_dim);
        let alg = Self {
            ambient_dim,
            generators: mats.to_vec(),
            basis,
            contains_identity: true,
        };
        let residual = alg.closure_residual();
        if residual > tol::MEMBERSHIP {
            return Err(Error::NotSubalgebra { residual });
        }
        Ok(alg)
    }

    /// HS-orthogonal projection of `m` onto the span of the algebra.
    pub fn project(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.ambient_dim, self.ambient_dim);
        for b in &self.basis {
            let coeff = hs_inner(b, m);
            out += b.scale_complex(coeff);
        }
        out
    }

    /// Frobenius distance from `m` to the span.
    pub fn membership_residual(&self, m: &ComplexMatrix) -> f64 {
        (m - self.project(m)).norm()
    }

    /// Largest membership residual of `other`'s basis in `self`:
    /// zero (within tolerance) iff `other ⊆ self` as spans.
    pub fn containment_residual(&self, other: &MatrixAlgebra) -> f64 {
        other
            .basis
            .iter()
            .map(|b| self.membership_residual(b))
            .fold(0.0, f64::max)
    }

    /// Symmetric span comparison: max of the two containment residuals.
    pub fn span_distance(&self, other: &MatrixAlgebra) -> f64 {
        self.containment_residual(other)
            .max(other.containment_residual(self))
    }

    /// Largest residual of basis products, adjoints, and the identity
    /// against the span; small iff the span is a unital *-algebra.
    pub fn closure_residual(&self) -> f64 {
        let d = self.ambient_dim;
        let mut worst = self.membership_residual(&ComplexMatrix::identity(d, d));
        for a in &self.basis {
            worst = worst.max(self.membership_residual(&a.adjoint()));
            for b in &self.basis {
                worst = worst.max(self.membership_residual(&(a * b)));
            }
        }
        worst
    }

    /// Max deviation of `⟨b_i, b_j⟩` from `δ_ij`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let g = hs_inner(a, b);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

trait ScaleComplex {
    fn scale_complex(&self, c: Complex64) -> ComplexMatrix;
}

impl ScaleComplex for ComplexMatrix {
    fn scale_complex(&self, c: Complex64) -> ComplexMatrix {
        self.map(|z| z * c)
    }
}

fn check_square(m: &ComplexMatrix, d: usize) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: m.nrows(),
        });
    }
    if !all_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Smallest unital *-algebra containing the generators, computed by iterating
/// `span ∪ products ∪ adjoints ∪ identity` to a fixed point of the span
/// dimension.
pub fn close_star_algebra(
    generators: &[ComplexMatrix],
    ambient_dim: usize,
) -> Result<MatrixAlgebra> {
    for g in generators {
        check_square(g, ambient_dim)?;
    }
    let d = ambient_dim;
    let mut seed: Vec<ComplexMatrix> = vec![ComplexMatrix::identity(d, d)];
    seed.extend(generators.iter().cloned());
    seed.extend(generators.iter().map(|g| g.adjoint()));
    let mut basis = orthonormal_span(&seed, d);

    for _ in 0..=d * d {
        let mut candidates = basis.clone();
        for a in &basis {
            candidates.push(a.adjoint());
            for b in &basis {
                candidates.push(a * b);
            }
        }
        let next = orthonormal_span(&candidates, d);
        let stable = next.len() == basis.len();
        basis = next;
        if stable {
            break;
        }
    }

    Ok(MatrixAlgebra {
        ambient_dim: d,
        generators: generators.to_vec(),
        basis,
        contains_identity: true,
    })
}

/// The commutant `A' = {X : [X, a] = 0 for all a in A}`, from the null space
/// of the stacked commutator system over the `d²`-dimensional matrix space.
pub fn commutant(alg: &MatrixAlgebra) -> MatrixAlgebra {
    let d = alg.ambient_dim;
    let dd = d * d;
    let k = alg.basis.len();
    let id = ComplexMatrix::identity(d, d);
    // [X, b] = Xb - bX; vec(Xb) = (bᵀ ⊗ 1) vec X, vec(bX) = (1 ⊗ b) vec X.
    let mut system = ComplexMatrix::zeros(k * dd, dd);
    for (r, b) in alg.basis.iter().enumerate() {
        let block = b.transpose().kronecker(&id) - id.kronecker(b);
        system.view_mut((r * dd, 0), (dd, dd)).copy_from(&block);
    }
    let svd = system.svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let smax = svd
        .singular_values
        .iter()
        .fold(0.0f64, |acc, s| acc.max(*s));
    let cutoff = tol::NULL_REL * smax.max(1.0);
    let mut basis = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= cutoff {
            // Null vector = conjugate of the i-th row of V^H, as a column.
            let row = v_t.row(i);
            let col = DVector::from_iterator(dd, row.iter().map(|z| z.conj()));
            basis.push(unvec_mat(&col, d));
        }
    }
    let out = MatrixAlgebra {
        ambient_dim: d,
        generators: Vec::new(),
        contains_identity: true,
        basis,
    };
    debug_assert!(out.membership_residual(&id) < tol::MEMBERSHIP);
    out
}

/// A positive semidefinite density operator, possibly subnormalized, carrying
/// the functional `ω(a) = Tr(ρ a)`.
#[derive(Debug, Clone)]
pub struct State {
    density: HermitianMatrix,
    norm: f64,
}

impl State {
    pub fn new(density: HermitianMatrix) -> Result<Self> {
        let eig = eig_hermitian(&density)?;
        let scale = eig.max_abs_eigenvalue().max(1.0);
        let min = eig.min_eigenvalue();
        if min < -tol::PSD_SLACK * scale {
            return Err(Error::NotPositive { min_eig: min });
        }
        let norm = density.trace();
        Ok(Self { density, norm })
    }

    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    /// Rank-one (unnormalized) state `|v⟩⟨v|`.
    pub fn pure(v: &DVector<Complex64>) -> Result<Self> {
        let d = v.len();
        let m = ComplexMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj());
        Self::new(HermitianMatrix::symmetrize(m))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        let density = HermitianMatrix::from_real_diagonal(&vec![1.0 / d as f64; d]);
        Self { density, norm: 1.0 }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidInput(
                "diagonal state needs nonnegative finite entries".into(),
            ));
        }
        Self::new(HermitianMatrix::from_real_diagonal(probs))
    }

    /// Scale the functional by `c ≥ 0` (subnormalized states are first-class).
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if c < 0.0 || !c.is_finite() {
            return Err(Error::InvalidInput("scale must be nonnegative".into()));
        }
        Ok(Self {
            density: HermitianMatrix::symmetrize(self.density.matrix().scale(c)),
            norm: self.norm * c,
        })
    }

    pub fn dim(&self) -> usize {
        self.density.dim()
    }

    /// `Tr ρ`; 1 for normalized states.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn density(&self) -> &HermitianMatrix {
        &self.density
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.density.matrix()
    }

    /// Functional value `ω(a) = Tr(ρ a)`.
    pub fn expectation(&self, a: &ComplexMatrix) -> Complex64 {
        (self.matrix() * a).trace()
    }
}

/// The Hilbert–Schmidt-orthogonal (trace-preserving) conditional expectation
/// from `alg_from` onto `alg_to ⊆ alg_from`, in Kraus form.
pub fn trace_conditional_expectation(
    alg_from: &MatrixAlgebra,
    alg_to: &MatrixAlgebra,
) -> Result<ConditionalExpectation> {
    if alg_from.ambient_dim != alg_to.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: alg_from.ambient_dim,
            got: alg_to.ambient_dim,
        });
    }
    let residual = alg_from.containment_residual(alg_to);
    if residual > tol::MEMBERSHIP {
        return Err(Error::NotSubalgebra { residual });
    }
    let d = alg_from.ambient_dim;
    let dd = d * d;
    // Superoperator of the HS projection: sum of |vec b><vec b|.
    let mut superop = ComplexMatrix::zeros(dd, dd);
    for b in &alg_to.basis {
        let v = vec_mat(b);
        for i in 0..dd {
            for j in 0..dd {
                superop[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    let choi = superop_to_choi(&superop, d);
    let kraus = kraus_from_choi(&choi, d, d)?;
    let base = Channel::from_kraus(kraus)?;
    ConditionalExpectation::certify(base, alg_to.clone(), alg_from)
}

/// Density of the restricted functional: for a trace-preserving (HS
/// self-adjoint) expectation, `Tr(ρ a) = Tr(E(ρ) a)` for every `a` in the
/// subalgebra, so the restriction is the Schrödinger action of `E`.
pub fn restrict_state(state: &State, e: &ConditionalExpectation) -> Result<State> {
    e.channel().apply_schrodinger(state)
}
