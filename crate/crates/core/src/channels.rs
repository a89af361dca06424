//! Quantum channels in Kraus form, conditional expectations, seeded samplers,
//! the data-processing-inequality harness, and the Pimsner–Popa index.
//!
//! The index of a conditional expectation `E` is the best constant `λ` with
//! `E(m†m) ≥ λ⁻¹ m†m`. Here it is located by bisecting on complete positivity
//! of `λE − id`, checked through the minimum eigenvalue of the Choi matrix;
//! a sampler over random `m†m` cross-checks the resulting constant against
//! the defining operator inequality.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::algebra::{unvec_mat, vec_mat, MatrixAlgebra, State};
use crate::divergences::{self, Value};
use crate::matrixkit::{all_finite, eig_hermitian, ComplexMatrix, HermitianMatrix};
use crate::tol;
use crate::variational::{build_grid, generalized_fidelity, QuadratureGrid};
use crate::{Error, Result};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Standard normal sample via Box–Muller; deterministic per RNG stream.
pub(crate) fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub(crate) fn gaussian_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng))
}

pub(crate) fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    // Sampled in a fixed row-major order so the stream is reproducible.
    let entries: Vec<Complex64> = (0..rows * cols).map(|_| gaussian_complex(rng)).collect();
    ComplexMatrix::from_row_slice(rows, cols, &entries)
}

/// Haar-distributed unitary via phase-fixed QR of a Gaussian matrix.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let qr = gaussian_matrix(d, d, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// Normalized Wishart-type mixed state `GG†/Tr(GG†)`.
pub fn random_density(d: usize, rng: &mut impl Rng) -> State {
    let g = gaussian_matrix(d, d, rng);
    let w = &g * g.adjoint();
    let tr: f64 = w.diagonal().iter().map(|z| z.re).sum();
    State::from_matrix(w.scale(1.0 / tr)).expect("wishart density is PSD")
}

/// Normalized Gaussian pure state.
pub fn random_pure_state(d: usize, rng: &mut impl Rng) -> State {
    let mut v = DVector::from_fn(d, |_, _| gaussian_complex(rng));
    let n = v.norm();
    v /= Complex64::new(n, 0.0);
    State::pure(&v).expect("pure density is PSD")
}

/// A completely positive map presented by Kraus operators, trace-preserving
/// in the Schrödinger picture.
#[derive(Debug, Clone)]
pub struct Channel {
    kraus: Vec<ComplexMatrix>,
    in_dim: usize,
    out_dim: usize,
    unital_defect: f64,
    trace_defect: f64,
}

impl Channel {
    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| {
            Error::InvalidInput("channel needs at least one Kraus operator".into())
        })?;
        let (out_dim, in_dim) = (first.nrows(), first.ncols());
        for k in &kraus {
            if k.nrows() != out_dim || k.ncols() != in_dim {
                return Err(Error::DimensionMismatch {
                    expected: out_dim,
                    got: k.nrows(),
                });
            }
            if !all_finite(k) {
                return Err(Error::NonFinite);
            }
        }
        let mut ktk = ComplexMatrix::zeros(in_dim, in_dim);
        let mut kkt = ComplexMatrix::zeros(out_dim, out_dim);
        for k in &kraus {
            ktk += k.adjoint() * k;
            kkt += k * k.adjoint();
        }
        let trace_defect = (&ktk - ComplexMatrix::identity(in_dim, in_dim)).norm();
        let unital_defect = (&kkt - ComplexMatrix::identity(out_dim, out_dim)).norm();
        if trace_defect > tol::TRACE_PRESERVING * (in_dim as f64) {
            return Err(Error::InvalidInput(format!(
                "Kraus family is not trace-preserving: defect {trace_defect:.3e}"
            )));
        }
        Ok(Self {
            kraus,
            in_dim,
            out_dim,
            unital_defect,
            trace_defect,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            kraus: vec![ComplexMatrix::identity(d, d)],
            in_dim: d,
            out_dim: d,
            unital_defect: 0.0,
            trace_defect: 0.0,
        }
    }

    /// Pinching onto the standard diagonal.
    pub fn pinching(d: usize) -> Self {
        let kraus = (0..d)
            .map(|i| {
                let mut p = ComplexMatrix::zeros(d, d);
                p[(i, i)] = Complex64::new(1.0, 0.0);
                p
            })
            .collect();
        Self::from_kraus(kraus).expect("projector family is trace-preserving")
    }

    /// `ρ ↦ Tr(ρ)·1/d`.
    pub fn depolarizing_to_trace(d: usize) -> Self {
        let scale = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        let mut kraus = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut e = ComplexMatrix::zeros(d, d);
                e[(i, j)] = scale;
                kraus.push(e);
            }
        }
        Self::from_kraus(kraus).expect("normalized matrix units are trace-preserving")
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn unital_defect(&self) -> f64 {
        self.unital_defect
    }

    pub fn trace_defect(&self) -> f64 {
        self.trace_defect
    }

    /// Schrödinger action `Σ K ρ K†` on a state.
    pub fn apply_schrodinger(&self, rho: &State) -> Result<State> {
        if rho.dim() != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                got: rho.dim(),
            });
        }
        State::new(HermitianMatrix::symmetrize(
            self.apply_to_operator(rho.matrix()),
        ))
    }

    /// `Σ K m K†` on a bare operator.
    pub fn apply_to_operator(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            out += k * m * k.adjoint();
        }
        out
    }

    /// Heisenberg action `Σ K† a K` on an observable.
    pub fn apply_heisenberg(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            out += k.adjoint() * a * k;
        }
        out
    }

    /// Matrix of the Schrödinger action on column-stacked operators,
    /// `Σ conj(K) ⊗ K`.
    pub fn superoperator(&self) -> ComplexMatrix {
        let mut s = ComplexMatrix::zeros(self.out_dim * self.out_dim, self.in_dim * self.in_dim);
        for k in &self.kraus {
            s += k.conjugate().kronecker(k);
        }
        s
    }

    /// Choi matrix `Σ_ij E_ij ⊗ Φ(E_ij)`, positive semidefinite iff the map
    /// is completely positive.
    pub fn choi_matrix(&self) -> HermitianMatrix {
        choi_from_kraus(&self.kraus, self.in_dim, self.out_dim)
    }

    /// Composition `self ∘ inner`.
    pub fn after(&self, inner: &Channel) -> Result<Channel> {
        if inner.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                got: inner.out_dim,
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * inner.kraus.len());
        for a in &self.kraus {
            for b in &inner.kraus {
                kraus.push(a * b);
            }
        }
        Channel::from_kraus(kraus)
    }
}

/// Haar-random Stinespring channel: a random isometry `ℂ^in → ℂ^out ⊗ ℂ^k`
/// sliced into `k` Kraus operators. Deterministic per seed.
pub fn random_channel(
    in_dim: usize,
    out_dim: usize,
    kraus_count: usize,
    seed: u64,
) -> Result<Channel> {
    if in_dim == 0 || out_dim == 0 || kraus_count == 0 {
        return Err(Error::InvalidInput("channel dimensions must be ≥ 1".into()));
    }
    if out_dim * kraus_count < in_dim {
        return Err(Error::InvalidInput(format!(
            "no isometry into {out_dim}x{kraus_count} from dimension {in_dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tall = gaussian_matrix(out_dim * kraus_count, in_dim, &mut rng);
    let qr = tall.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..in_dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    let kraus = (0..kraus_count)
        .map(|a| q.view((a * out_dim, 0), (out_dim, in_dim)).clone_owned())
        .collect();
    Channel::from_kraus(kraus)
}

/// Choi matrix of a Kraus family.
pub fn choi_from_kraus(kraus: &[ComplexMatrix], in_dim: usize, out_dim: usize) -> HermitianMatrix {
    let n = in_dim * out_dim;
    let mut c = ComplexMatrix::zeros(n, n);
    for k in kraus {
        // w[(i,o)] = K[o,i]; C += |w><w|.
        let w = DVector::from_fn(n, |idx, _| {
            let (i, o) = (idx / out_dim, idx % out_dim);
            k[(o, i)]
        });
        for a in 0..n {
            for b in 0..n {
                c[(a, b)] += w[a] * w[b].conj();
            }
        }
    }
    HermitianMatrix::symmetrize(c)
}

/// Choi matrix of a superoperator given as a matrix on column-stacked
/// operators (square case).
pub fn superop_to_choi(superop: &ComplexMatrix, d: usize) -> HermitianMatrix {
    let n = d * d;
    let mut c = ComplexMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            let mut e = ComplexMatrix::zeros(d, d);
            e[(i, j)] = Complex64::new(1.0, 0.0);
            let phi = unvec_mat(&(superop * vec_mat(&e)), d);
            for o in 0..d {
                for p in 0..d {
                    c[(i * d + o, j * d + p)] += phi[(o, p)];
                }
            }
        }
    }
    HermitianMatrix::symmetrize(c)
}

/// Recover a Kraus family from a (numerically) PSD Choi matrix.
pub fn kraus_from_choi(
    choi: &HermitianMatrix,
    in_dim: usize,
    out_dim: usize,
) -> Result<Vec<ComplexMatrix>> {
    let eig = eig_hermitian(choi)?;
    let scale = eig.max_abs_eigenvalue().max(1.0);
    if eig.min_eigenvalue() < -tol::CHOI_CP * scale {
        return Err(Error::NotPositive {
            min_eig: eig.min_eigenvalue(),
        });
    }
    let thr = eig.support_threshold();
    let mut kraus = Vec::new();
    for (idx, lam) in eig.eigenvalues.iter().enumerate() {
        if *lam > thr {
            let v = eig.eigenvectors.column(idx);
            let root = lam.sqrt();
            let k = ComplexMatrix::from_fn(out_dim, in_dim, |o, i| {
                v[i * out_dim + o] * Complex64::new(root, 0.0)
            });
            kraus.push(k);
        }
    }
    if kraus.is_empty() {
        kraus.push(ComplexMatrix::zeros(out_dim, in_dim));
    }
    Ok(kraus)
}

/// A unital completely positive projection onto a subalgebra, certified by
/// its idempotency and bimodule defects.
#[derive(Debug, Clone)]
pub struct ConditionalExpectation {
    base: Channel,
    subalgebra: MatrixAlgebra,
    bimodule_defect: f64,
    idempotency_defect: f64,
}

impl ConditionalExpectation {
    /// Wrap a channel as a conditional expectation onto `subalgebra`,
    /// measuring the idempotency defect and the bimodule defect
    /// `max ‖E(n₁ m n₂) − n₁ E(m) n₂‖` over basis triples with `m` ranging
    /// over `ambient`'s basis. Fails if either defect exceeds its tolerance.
    pub fn certify(
        base: Channel,
        subalgebra: MatrixAlgebra,
        ambient: &MatrixAlgebra,
    ) -> Result<Self> {
        let d = base.in_dim;
        if base.out_dim != d || subalgebra.ambient_dim() != d || ambient.ambient_dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: subalgebra.ambient_dim(),
            });
        }
        let s = base.superoperator();
        let idempotency_defect = (&s * &s - &s).norm();
        if idempotency_defect > tol::IDEMPOTENCY * (1.0 + s.norm()) {
            return Err(Error::InvalidInput(format!(
                "not idempotent: defect {idempotency_defect:.3e}"
            )));
        }
        let unit = ComplexMatrix::identity(d, d);
        let unit_defect = (base.apply_to_operator(&unit) - &unit).norm();
        if unit_defect > 1e-9 * d as f64 {
            return Err(Error::InvalidInput(format!(
                "not unital: defect {unit_defect:.3e}"
            )));
        }

        let images: Vec<ComplexMatrix> = ambient
            .basis()
            .iter()
            .map(|m| base.apply_to_operator(m))
            .collect();
        let mut bimodule_defect = 0.0f64;
        for n1 in subalgebra.basis() {
            for (m, em) in ambient.basis().iter().zip(images.iter()) {
                let n1m = n1 * m;
                let n1em = n1 * em;
                for n2 in subalgebra.basis() {
                    let lhs = base.apply_to_operator(&(&n1m * n2));
                    let rhs = &n1em * n2;
                    bimodule_defect = bimodule_defect.max((lhs - rhs).norm());
                }
            }
        }
        if bimodule_defect > tol::BIMODULE {
            return Err(Error::InvalidInput(format!(
                "bimodule property fails: defect {bimodule_defect:.3e}"
            )));
        }
        Ok(Self {
            base,
            subalgebra,
            bimodule_defect,
            idempotency_defect,
        })
    }

    /// The identity expectation on `B(ℂ^d)`.
    pub fn identity(d: usize) -> Self {
        Self {
            base: Channel::identity(d),
            subalgebra: MatrixAlgebra::full(d),
            bimodule_defect: 0.0,
            idempotency_defect: 0.0,
        }
    }

    pub fn channel(&self) -> &Channel {
        &self.base
    }

    pub fn subalgebra(&self) -> &MatrixAlgebra {
        &self.subalgebra
    }

    pub fn bimodule_defect(&self) -> f64 {
        self.bimodule_defect
    }

    pub fn idempotency_defect(&self) -> f64 {
        self.idempotency_defect
    }

    /// `E(m)`.
    pub fn apply(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.base.apply_to_operator(m)
    }
}

/// Conditional expectation onto the fixed-point algebra of a finite unitary
/// group (possibly projective): `E(m) = |G|⁻¹ Σ_g U_g m U_g†`.
///
/// Group closure is checked modulo phases, so e.g. the Pauli family
/// `{1, X, Y, Z}` is accepted.
pub fn group_average_expectation(
    rep: &[ComplexMatrix],
    ambient: &MatrixAlgebra,
) -> Result<ConditionalExpectation> {
    let d = ambient.ambient_dim();
    if rep.is_empty() {
        return Err(Error::InvalidInput("empty representation".into()));
    }
    let id = ComplexMatrix::identity(d, d);
    for u in rep {
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: u.nrows(),
            });
        }
        let defect = (u.adjoint() * u - &id).norm();
        if defect > 1e-9 * d as f64 {
            return Err(Error::NotAGroup { residual: defect });
        }
    }
    // Closure under products and inverses, modulo a global phase.
    let match_residual = |m: &ComplexMatrix| -> f64 {
        rep.iter()
            .map(|u| {
                let overlap = u.dotc(m);
                let phase = if overlap.norm() > 0.0 {
                    overlap / overlap.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                };
                (m - u.map(|z| z * phase)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let mut worst = match_residual(&id);
    for g in rep {
        worst = worst.max(match_residual(&g.adjoint()));
        for h in rep {
            worst = worst.max(match_residual(&(g * h)));
        }
    }
    if worst > tol::MEMBERSHIP {
        return Err(Error::NotAGroup { residual: worst });
    }

    let scale = Complex64::new(1.0 / (rep.len() as f64).sqrt(), 0.0);
    let kraus: Vec<ComplexMatrix> = rep.iter().map(|u| u.map(|z| z * scale)).collect();
    let base = Channel::from_kraus(kraus)?;

    let projected: Vec<ComplexMatrix> = ambient
        .basis()
        .iter()
        .map(|b| base.apply_to_operator(b))
        .filter(|m| m.norm() > 1e-12)
        .collect();
    let fixed = crate::algebra::close_star_algebra(&projected, d)?;
    ConditionalExpectation::certify(base, fixed, ambient)
}

/// Outcome of the Pimsner–Popa index bisection with its complete-positivity
/// certificates.
#[derive(Debug, Clone)]
pub struct IndexResult {
    /// Best constant λ with `λE − id` completely positive
    /// (`f64::INFINITY` when no finite λ exists in the bracket).
    pub index: f64,
    /// Min Choi eigenvalue at λ and at λ(1−δ).
    pub certificate: (f64, f64),
    /// Bisection trace: (λ probed, min Choi eigenvalue).
    pub bisection_history: Vec<(f64, f64)>,
    /// Worst sampler residual of `min eig(λ E(m†m) − m†m)` over random `m`
    /// with `m†m` normalized to unit trace.
    pub sampler_min_residual: f64,
    /// The positivity constant of `E` is reported through the completely
    /// positive one; their equality is assumed, not proven, for general
    /// finite-dimensional expectations.
    pub assumes_cp_equals_positivity: bool,
}

/// Pimsner–Popa index `ind(E) = inf{λ : λE − id completely positive}` on a
/// full matrix factor, located by bisection over `[1, d²]` on the minimum
/// eigenvalue of the Choi matrix.
pub fn pimsner_popa_index(e: &ConditionalExpectation) -> Result<IndexResult> {
    let d = e.channel().in_dim();
    if e.channel().out_dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: e.channel().out_dim(),
        });
    }
    let choi_e = e.channel().choi_matrix();
    let choi_id = Channel::identity(d).choi_matrix();
    let min_eig = |lam: f64| -> f64 {
        let c = HermitianMatrix::symmetrize(choi_e.matrix().scale(lam) - choi_id.matrix());
        eig_hermitian(&c)
            .map(|e| e.min_eigenvalue())
            .unwrap_or(f64::NEG_INFINITY)
    };
    let cp = |f: f64| f >= -tol::CHOI_CP;

    let mut history = Vec::new();
    let mut lo = 1.0;
    let mut hi = (d * d) as f64;
    let f_lo = min_eig(lo);
    history.push((lo, f_lo));
    let index = if cp(f_lo) {
        lo
    } else {
        let f_hi = min_eig(hi);
        history.push((hi, f_hi));
        if !cp(f_hi) {
            let sampler = index_sampler_residual(e, f64::INFINITY);
            return Ok(IndexResult {
                index: f64::INFINITY,
                certificate: (f_hi, f_hi),
                bisection_history: history,
                sampler_min_residual: sampler,
                assumes_cp_equals_positivity: true,
            });
        }
        while hi - lo > tol::INDEX_BISECTION_REL * hi {
            let mid = 0.5 * (lo + hi);
            let f_mid = min_eig(mid);
            history.push((mid, f_mid));
            if cp(f_mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let certificate = (min_eig(index), min_eig(index * (1.0 - tol::INDEX_DELTA)));
    let sampler_min_residual = index_sampler_residual(e, index);
    Ok(IndexResult {
        index,
        certificate,
        bisection_history: history,
        sampler_min_residual,
        assumes_cp_equals_positivity: true,
    })
}

fn index_sampler_residual(e: &ConditionalExpectation, lambda: f64) -> f64 {
    if !lambda.is_finite() {
        return 0.0;
    }
    let d = e.channel().in_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9d2c_5681);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let m = gaussian_matrix(d, d, &mut rng);
        let h = &m * m.adjoint();
        let tr: f64 = h.diagonal().iter().map(|z| z.re).sum();
        let h = h.scale(1.0 / tr);
        let gap = HermitianMatrix::symmetrize(e.apply(&h).scale(lambda) - &h);
        if let Ok(eig) = eig_hermitian(&gap) {
            worst = worst.min(eig.min_eigenvalue());
        }
    }
    worst
}

/// Divergences the DPI harness can exercise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceKind {
    RelativeEntropy,
    SandwichedRenyi(f64),
    Fidelity,
    GeneralizedFidelity(f64),
}

impl DivergenceKind {
    /// The generalized fidelity carries an optimizer gap, so its
    /// data-processing violations are reported softly rather than asserted.
    pub fn is_soft(&self) -> bool {
        matches!(self, DivergenceKind::GeneralizedFidelity(_))
    }

    pub fn label(&self) -> String {
        match self {
            DivergenceKind::RelativeEntropy => "relative_entropy".into(),
            DivergenceKind::SandwichedRenyi(s) => format!("sandwiched_renyi[s={s}]"),
            DivergenceKind::Fidelity => "fidelity".into(),
            DivergenceKind::GeneralizedFidelity(s) => format!("generalized_fidelity[s={s}]"),
        }
    }

    fn eval(&self, rho: &State, sigma: &State, grid: &Option<QuadratureGrid>) -> Result<f64> {
        let as_f64 = |v: Value| match v {
            Value::Finite(x) => x,
            Value::Infinite => f64::INFINITY,
        };
        Ok(match self {
            DivergenceKind::RelativeEntropy => {
                as_f64(divergences::relative_entropy(rho, sigma)?.value)
            }
            DivergenceKind::SandwichedRenyi(s) => {
                as_f64(divergences::sandwiched_renyi(rho, sigma, *s)?.value)
            }
            DivergenceKind::Fidelity => as_f64(divergences::fidelity(rho, sigma)?.value),
            DivergenceKind::GeneralizedFidelity(s) => {
                let g = match grid {
                    Some(g) => g.clone(),
                    None => build_grid((1.0 - s) / s, 1e-4, 1e4, 256)?,
                };
                as_f64(generalized_fidelity(rho, sigma, *s, &g)?.value)
            }
        })
    }
}

/// Options for the DPI harness.
#[derive(Debug, Clone)]
pub struct DpiOptions {
    /// Use only the identity channel (pre must equal post exactly).
    pub identity_only: bool,
    /// Hilbert space dimensions cycled per sample.
    pub dims: Vec<usize>,
    /// Kraus operators per sampled channel.
    pub kraus_count: usize,
    /// Grid override for the generalized fidelity.
    pub grid: Option<QuadratureGrid>,
}

impl Default for DpiOptions {
    fn default() -> Self {
        Self {
            identity_only: false,
            dims: vec![2, 3],
            kraus_count: 2,
            grid: None,
        }
    }
}

/// One monotonicity sample of the harness.
#[derive(Debug, Clone)]
pub struct DpiRow {
    pub sample: usize,
    pub dim: usize,
    pub pre: f64,
    pub post: f64,
    /// Positive when the data-processing direction is violated.
    pub violation: f64,
}

/// Monotonicity report over seeded samples.
#[derive(Debug, Clone)]
pub struct DpiReport {
    pub kind: DivergenceKind,
    pub rows: Vec<DpiRow>,
    pub hard_tol: f64,
    pub soft_tol: f64,
}

impl DpiReport {
    pub fn max_violation(&self) -> f64 {
        self.rows.iter().map(|r| r.violation).fold(0.0, f64::max)
    }

    /// Violations beyond tolerance: hard divergences measure against
    /// `hard_tol`, the generalized fidelity against `soft_tol`.
    pub fn violations(&self) -> usize {
        let tol = if self.kind.is_soft() {
            self.soft_tol
        } else {
            self.hard_tol
        };
        self.rows.iter().filter(|r| r.violation > tol).count()
    }
}

/// Sample `(channel, ρ, σ)` triples and record divergence values before and
/// after the channel. Deterministic per seed; per-sample streams are derived
/// as `seed + index`.
pub fn dpi_harness(kind: DivergenceKind, samples: usize, seed: u64) -> Result<DpiReport> {
    dpi_harness_with(kind, samples, seed, &DpiOptions::default())
}

pub fn dpi_harness_with(
    kind: DivergenceKind,
    samples: usize,
    seed: u64,
    opts: &DpiOptions,
) -> Result<DpiReport> {
    let mut rows = Vec::with_capacity(samples);
    for i in 0..samples {
        let sample_seed = seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
        let dim = opts.dims[i % opts.dims.len()];
        let rho = random_density(dim, &mut rng);
        let sigma = random_density(dim, &mut rng);
        let channel = if opts.identity_only {
            Channel::identity(dim)
        } else {
            random_channel(dim, dim, opts.kraus_count, sample_seed ^ 0x5eed)?
        };
        let pre = kind.eval(&rho, &sigma, &opts.grid)?;
        let post = kind.eval(
            &channel.apply_schrodinger(&rho)?,
            &channel.apply_schrodinger(&sigma)?,
            &opts.grid,
        )?;
        let violation = if !pre.is_finite() || !post.is_finite() {
            0.0
        } else {
            match kind {
                // Fidelity increases under channels; the rest decrease.
                DivergenceKind::Fidelity => pre - post,
                _ => post - pre,
            }
        };
        rows.push(DpiRow {
            sample: i,
            dim,
            pre,
            post,
            violation,
        });
    }
    Ok(DpiReport {
        kind,
        rows,
        hard_tol: 1e-9,
        soft_tol: 0.05,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::{pauli_x, pauli_y, pauli_z};

    #[test]
    fn random_channel_is_trace_preserving_and_seed_stable() {
        let t1 = random_channel(2, 2, 2, 42).unwrap();
        let t2 = random_channel(2, 2, 2, 42).unwrap();
        assert!(t1.trace_defect() < 1e-10);
        for (a, b) in t1.kraus().iter().zip(t2.kraus().iter()) {
            let same = a
                .iter()
                .zip(b.iter())
                .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
            assert!(same, "seeded channel must be byte-identical across runs");
        }
        let t3 = random_channel(2, 2, 2, 43).unwrap();
        assert!((t1.kraus()[0].clone() - t3.kraus()[0].clone()).norm() > 1e-6);
    }

    #[test]
    fn single_kraus_is_unitary_for_equal_dims() {
        let t = random_channel(3, 3, 1, 7).unwrap();
        let k = &t.kraus()[0];
        let id = ComplexMatrix::identity(3, 3);
        assert!((k.adjoint() * k - &id).norm() < 1e-10);
        assert!((k * k.adjoint() - &id).norm() < 1e-10);
    }

    #[test]
    fn schrodinger_action_examples() {
        let rho = State::from_matrix(ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.6, 0.0),
                Complex64::new(0.2, 0.1),
                Complex64::new(0.2, -0.1),
                Complex64::new(0.4, 0.0),
            ],
        ))
        .unwrap();
        let id = Channel::identity(2);
        let out = id.apply_schrodinger(&rho).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-14);

        let pinch = Channel::pinching(2);
        let out = pinch.apply_schrodinger(&rho).unwrap();
        assert!(out.matrix()[(0, 1)].norm() < 1e-14);
        assert!((out.matrix()[(0, 0)].re - 0.6).abs() < 1e-14);

        let depol = Channel::depolarizing_to_trace(2);
        let out = depol.apply_schrodinger(&rho).unwrap();
        assert!((out.matrix() - ComplexMatrix::identity(2, 2).scale(0.5)).norm() < 1e-12);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn composition_matches_superoperator_product() {
        let t1 = random_channel(2, 2, 2, 5).unwrap();
        let t2 = random_channel(2, 2, 3, 6).unwrap();
        let composed = t2.after(&t1).unwrap();
        let s = t2.superoperator() * t1.superoperator();
        assert!((composed.superoperator() - &s).norm() < 1e-10);
        // Choi matrices agree as well.
        let c1 = composed.choi_matrix();
        let c2 = superop_to_choi(&s, 2);
        assert!((c1.matrix() - c2.matrix()).norm() < 1e-10);
    }

    #[test]
    fn kraus_choi_round_trip_preserves_action() {
        let t = random_channel(2, 3, 2, 11).unwrap();
        let choi = t.choi_matrix();
        let kraus = kraus_from_choi(&choi, 2, 3).unwrap();
        let t2 = Channel::from_kraus(kraus).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(2, &mut rng);
        let a = t.apply_schrodinger(&rho).unwrap();
        let b = t2.apply_schrodinger(&rho).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-10);
    }

    #[test]
    fn group_average_pinches_for_z2() {
        let full = MatrixAlgebra::full(2);
        let e =
            group_average_expectation(&[ComplexMatrix::identity(2, 2), pauli_z()], &full).unwrap();
        assert_eq!(e.subalgebra().dim(), 2);
        let m = pauli_x();
        assert!(e.apply(&m).norm() < 1e-12);
        let d = ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.3, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-0.1, 0.0),
            ],
        );
        assert!((e.apply(&d) - &d).norm() < 1e-12);
    }

    #[test]
    fn group_average_trivial_group_is_identity() {
        let full = MatrixAlgebra::full(3);
        let e = group_average_expectation(&[ComplexMatrix::identity(3, 3)], &full).unwrap();
        assert_eq!(e.subalgebra().dim(), 9);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = gaussian_matrix(3, 3, &mut rng);
        assert!((e.apply(&m) - &m).norm() < 1e-12);
    }

    #[test]
    fn group_average_pauli_group_gives_scalars() {
        let full = MatrixAlgebra::full(2);
        let rep = vec![
            ComplexMatrix::identity(2, 2),
            pauli_x(),
            pauli_y(),
            pauli_z(),
        ];
        let e = group_average_expectation(&rep, &full).unwrap();
        assert_eq!(e.subalgebra().dim(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = gaussian_matrix(2, 2, &mut rng);
        let expected = ComplexMatrix::identity(2, 2).scale(m.trace().re / 2.0)
            + ComplexMatrix::identity(2, 2).map(|z| z * Complex64::new(0.0, m.trace().im / 2.0));
        assert!((e.apply(&m) - expected).norm() < 1e-10);
    }

    #[test]
    fn group_average_rejects_non_group() {
        let full = MatrixAlgebra::full(2);
        // {1, X, Z} is not closed: XZ is not a phase times a member.
        let rep = vec![ComplexMatrix::identity(2, 2), pauli_x(), pauli_z()];
        assert!(matches!(
            group_average_expectation(&rep, &full),
            Err(Error::NotAGroup { .. })
        ));
    }

    #[test]
    fn group_average_agrees_with_trace_expectation() {
        let full = MatrixAlgebra::full(2);
        let e_avg =
            group_average_expectation(&[ComplexMatrix::identity(2, 2), pauli_z()], &full).unwrap();
        let e_tr =
            crate::algebra::trace_conditional_expectation(&full, e_avg.subalgebra()).unwrap();
        let diff = (e_avg.channel().superoperator() - e_tr.channel().superoperator()).norm();
        assert!(diff < 1e-9, "superoperators differ by {diff}");
    }

    #[test]
    fn group_average_choi_is_psd() {
        let full = MatrixAlgebra::full(2);
        let e =
            group_average_expectation(&[ComplexMatrix::identity(2, 2), pauli_z()], &full).unwrap();
        let eig = eig_hermitian(&e.channel().choi_matrix()).unwrap();
        assert!(eig.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn index_of_identity_is_one() {
        let e = ConditionalExpectation::identity(3);
        let r = pimsner_popa_index(&e).unwrap();
        assert!((r.index - 1.0).abs() < 1e-8);
        assert!(r.certificate.0 >= -tol::CHOI_CP);
        assert!(r.certificate.1 < 0.0);
    }

    #[test]
    fn index_of_pinching_is_dimension() {
        for n in [2usize, 3] {
            let full = MatrixAlgebra::full(n);
            let diag =
                crate::algebra::close_star_algebra(&[crate::matrixkit::clock(n)], n).unwrap();
            let e = crate::algebra::trace_conditional_expectation(&full, &diag).unwrap();
            let r = pimsner_popa_index(&e).unwrap();
            assert!(
                (r.index - n as f64).abs() < 1e-7,
                "pinching index for n={n}: {}",
                r.index
            );
            assert!(r.sampler_min_residual > -1e-8);
        }
    }

    #[test]
    fn index_of_trace_map_is_dim_squared() {
        let n = 2;
        let full = MatrixAlgebra::full(n);
        let scalars = MatrixAlgebra::scalars(n);
        let e = crate::algebra::trace_conditional_expectation(&full, &scalars).unwrap();
        let r = pimsner_popa_index(&e).unwrap();
        assert!((r.index - (n * n) as f64).abs() < 1e-6);
        assert!(r.sampler_min_residual > -1e-8);
    }

    #[test]
    fn dpi_identity_channel_is_exact() {
        let opts = DpiOptions {
            identity_only: true,
            ..DpiOptions::default()
        };
        let report = dpi_harness_with(DivergenceKind::RelativeEntropy, 10, 1, &opts).unwrap();
        for row in &report.rows {
            assert!((row.pre - row.post).abs() < 1e-12);
        }
        assert_eq!(report.violations(), 0);
    }
}
