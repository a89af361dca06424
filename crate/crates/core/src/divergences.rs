//! Closed-form divergences on matrix algebras.
//!
//! Umegaki relative entropy, Uhlmann fidelity, sandwiched Rényi divergences,
//! relative modular operators on Hilbert–Schmidt space, and the weighted
//! L_p-norm oracle behind the Rényi family. All values are in nats; `+∞` is
//! an explicit marker, never a large float. Logs and fractional powers are
//! always taken on the support of the operator, with the relative threshold
//! from [`crate::matrixkit`].

use std::collections::BTreeMap;
use std::fmt;

use crate::algebra::State;
use crate::matrixkit::{
    eig_hermitian, matrix_sqrt, trace_norm, ComplexMatrix, EigenSystem, HermitianMatrix,
};
use crate::{Error, Result};

/// A divergence value: finite (in nats) or positive infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Finite(f64),
    Infinite,
}

impl Value {
    pub fn is_finite(&self) -> bool {
        matches!(self, Value::Finite(_))
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Value::Finite(x) => *x,
            Value::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Finite(x) => write!(f, "{x}"),
            Value::Infinite => write!(f, "inf"),
        }
    }
}

/// A computed divergence with a certified bracket and diagnostics.
///
/// For closed-form divergences the bracket collapses onto the value. For the
/// variational generalized fidelity the bracket encloses the *true*
/// divergence: `value` is the optimizer's certified lower estimate and may
/// sit below `lower_bound` by the optimizer gap when a sharper closed-form
/// lower bound is available.
#[derive(Debug, Clone)]
pub struct DivergenceResult {
    pub value: Value,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl DivergenceResult {
    pub fn exact(v: f64) -> Self {
        Self {
            value: Value::Finite(v),
            lower_bound: v,
            upper_bound: v,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn infinite() -> Self {
        Self {
            value: Value::Infinite,
            lower_bound: f64::INFINITY,
            upper_bound: f64::INFINITY,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with_diag(mut self, key: &str, val: f64) -> Self {
        self.diagnostics.insert(key.to_string(), val);
        self
    }
}

fn check_same_dim(rho: &State, sigma: &State) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    Ok(())
}

/// `Tr(ρ (1 - P_σ))`: the mass of `rho` outside the support of the spectrum
/// `sig`.
fn mass_outside_support(rho: &State, sig: &EigenSystem) -> f64 {
    let thr = sig.support_threshold();
    let mut inside = 0.0;
    for (j, s) in sig.eigenvalues.iter().enumerate() {
        if *s > thr {
            let u = sig.eigenvectors.column(j);
            let ru = rho.matrix() * u;
            inside += u.dotc(&ru).re;
        }
    }
    rho.norm() - inside
}

/// Umegaki relative entropy `S(ρ|σ) = Tr ρ (log ρ − log σ)` in nats, with
/// logs on supports; infinite when the support of `ρ` is not contained in
/// the support of `σ`.
pub fn relative_entropy(rho: &State, sigma: &State) -> Result<DivergenceResult> {
    check_same_dim(rho, sigma)?;
    let eig_r = eig_hermitian(rho.density())?;
    let eig_s = eig_hermitian(sigma.density())?;

    let outside = mass_outside_support(rho, &eig_s);
    if outside > 1e-10 * rho.norm().max(1.0) {
        return Ok(DivergenceResult::infinite().with_diag("support_mass_outside", outside));
    }

    let thr_r = eig_r.support_threshold();
    let mut tr_rho_log_rho = 0.0;
    for r in eig_r.eigenvalues.iter() {
        if *r > thr_r {
            tr_rho_log_rho += r * r.ln();
        }
    }

    let thr_s = eig_s.support_threshold();
    let mut tr_rho_log_sigma = 0.0;
    for (j, s) in eig_s.eigenvalues.iter().enumerate() {
        if *s > thr_s {
            let u = eig_s.eigenvectors.column(j);
            let weight = u.dotc(&(rho.matrix() * u)).re;
            tr_rho_log_sigma += weight * s.ln();
        }
    }

    let value = tr_rho_log_rho - tr_rho_log_sigma;
    Ok(DivergenceResult::exact(value).with_diag("support_mass_outside", outside))
}

/// Uhlmann fidelity `F(ρ,σ) = ‖√ρ √σ‖₁`.
pub fn fidelity(rho: &State, sigma: &State) -> Result<DivergenceResult> {
    check_same_dim(rho, sigma)?;
    let v = fidelity_value(rho, sigma)?;
    Ok(DivergenceResult::exact(v))
}

pub(crate) fn fidelity_value(rho: &State, sigma: &State) -> Result<f64> {
    let sr = matrix_sqrt(rho.density())?;
    let ss = matrix_sqrt(sigma.density())?;
    trace_norm(&(sr.matrix() * ss.matrix()))
}

/// The sandwiched trace functional `Q_s = Tr(σ^{(1−s)/(2s)} ρ σ^{(1−s)/(2s)})^s`
/// with powers on the support of σ.
fn sandwich_q(rho: &State, sigma: &State, s: f64) -> Result<f64> {
    let c = (1.0 - s) / (2.0 * s);
    let eig_s = eig_hermitian(sigma.density())?;
    let thr = eig_s.support_threshold();
    let sig_pow = eig_s.apply_on_support(thr, |lam| lam.powf(c));
    let sandwich = HermitianMatrix::symmetrize(&sig_pow * rho.matrix() * &sig_pow);
    let eig_t = eig_hermitian(&sandwich)?;
    let thr_t = eig_t.support_threshold();
    let mut q = 0.0;
    for lam in eig_t.eigenvalues.iter() {
        if *lam > thr_t {
            q += lam.powf(s);
        }
    }
    Ok(q)
}

/// Sandwiched Rényi divergence
/// `D_s(ρ|σ) = (s−1)⁻¹ log Tr(σ^{(1−s)/(2s)} ρ σ^{(1−s)/(2s)})^s`
/// for `s ∈ (1/2,1) ∪ (1,∞)`, in nats.
pub fn sandwiched_renyi(rho: &State, sigma: &State, s: f64) -> Result<DivergenceResult> {
    check_same_dim(rho, sigma)?;
    if !(s > 0.5 && s != 1.0 && s.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sandwiched Rényi order must lie in (1/2,1) ∪ (1,∞), got {s}"
        )));
    }
    let eig_s = eig_hermitian(sigma.density())?;
    let outside = mass_outside_support(rho, &eig_s);
    if s > 1.0 && outside > 1e-10 * rho.norm().max(1.0) {
        return Ok(DivergenceResult::infinite().with_diag("support_mass_outside", outside));
    }
    let q = sandwich_q(rho, sigma, s)?;
    if q <= 0.0 {
        return Ok(DivergenceResult::infinite().with_diag("sandwich_trace", q));
    }
    let value = q.ln() / (s - 1.0);
    Ok(DivergenceResult::exact(value)
        .with_diag("sandwich_trace", q)
        .with_diag("support_mass_outside", outside))
}

/// Relative modular operator `Δ_{ψ,ζ} : X ↦ ρ_ψ X ρ_ζ⁺` on Hilbert–Schmidt
/// space, with the pseudo-inverse taken on the support of `ρ_ζ`.
#[derive(Debug, Clone)]
pub struct ModularOperator {
    dim: usize,
    left_factor: HermitianMatrix,
    right_factor: HermitianMatrix,
    eig_left: EigenSystem,
    eig_right: EigenSystem,
}

impl ModularOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `ρ_ψ`.
    pub fn left_factor(&self) -> &HermitianMatrix {
        &self.left_factor
    }

    /// `ρ_ζ⁺` (pseudo-inverse on the support).
    pub fn right_factor(&self) -> &HermitianMatrix {
        &self.right_factor
    }

    /// `Δ X = ρ_ψ X ρ_ζ⁺`.
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.left_factor.matrix() * x * self.right_factor.matrix()
    }

    /// Matrix of the action on column-stacked operators,
    /// `(ρ_ζ⁺)ᵀ ⊗ ρ_ψ`; positive semidefinite.
    pub fn superoperator(&self) -> ComplexMatrix {
        self.right_factor
            .matrix()
            .transpose()
            .kronecker(self.left_factor.matrix())
    }

    /// `⟨ζ| log Δ |ζ⟩` with `|ζ⟩` the Hilbert–Schmidt representative `√ρ_ζ`:
    /// spectral sum `Σ |⟨u_i|√ρ_ζ|w_j⟩|² (log λ_i − log μ_j)` over the
    /// supports. Returns `-∞` on support violation, matching `S = +∞`.
    pub fn log_expectation(&self, zeta: &State) -> Result<f64> {
        if zeta.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: zeta.dim(),
            });
        }
        let sqrt_zeta = matrix_sqrt(zeta.density())?;
        let thr_l = self.eig_left.support_threshold();
        let thr_r = self.eig_right_threshold();
        let cross = self.eig_left.eigenvectors.adjoint()
            * sqrt_zeta.matrix()
            * &self.eig_right.eigenvectors;
        let mut total = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let w = cross[(i, j)].norm_sqr();
                if w <= 1e-24 {
                    continue;
                }
                let lam = self.eig_left.eigenvalues[i];
                let mu = self.eig_right.eigenvalues[j];
                if mu <= thr_r {
                    continue;
                }
                if lam <= thr_l {
                    return Ok(f64::NEG_INFINITY);
                }
                total += w * (lam.ln() - mu.ln());
            }
        }
        Ok(total)
    }

    fn eig_right_threshold(&self) -> f64 {
        self.eig_right.support_threshold()
    }
}

/// Build `Δ_{ψ,ζ}` from the two states.
pub fn relative_modular_operator(psi: &State, zeta: &State) -> Result<ModularOperator> {
    check_same_dim(psi, zeta)?;
    let right_factor = crate::matrixkit::matrix_power(zeta.density(), -1.0)?;
    let eig_left = eig_hermitian(psi.density())?;
    let eig_right = eig_hermitian(zeta.density())?;
    Ok(ModularOperator {
        dim: psi.dim(),
        left_factor: psi.density().clone(),
        right_factor,
        eig_left,
        eig_right,
    })
}

/// Weighted L_p-norm oracle for `p ∈ (1,2)`: returns
/// `‖ζ‖_{p,ψ}^{p} = Tr(σ^{(1−s)/(2s)} ρ σ^{(1−s)/(2s)})^s` with `p = 2s`,
/// where `ρ` is the density of `zeta` and `σ` the density of the faithful
/// reference state `psi`.
pub fn lp_norm_oracle(zeta: &State, psi: &State, p: f64) -> Result<f64> {
    check_same_dim(zeta, psi)?;
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::InvalidInput(format!(
            "L_p oracle requires p in (1,2), got {p}"
        )));
    }
    let eig_psi = eig_hermitian(psi.density())?;
    if eig_psi.support_rank != psi.dim() {
        return Err(Error::Unsupported(
            "L_p oracle requires a faithful (full-support) reference state".into(),
        ));
    }
    sandwich_q(zeta, psi, p / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{gaussian_matrix, random_density};
    use crate::matrixkit::{basis_vector, bell_vector};
    use nalgebra::DVector;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn relative_entropy_of_identical_states_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(3, &mut rng);
        let r = relative_entropy(&rho, &rho).unwrap();
        assert!(r.value.as_f64().abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_support_violation_is_infinite() {
        let rho = State::diagonal(&[1.0, 0.0]).unwrap();
        let sigma = State::diagonal(&[0.0, 1.0]).unwrap();
        let r = relative_entropy(&rho, &sigma).unwrap();
        assert!(!r.value.is_finite());
    }

    #[test]
    fn relative_entropy_scalar_oracle() {
        // S(I/2 | diag(1/3, 2/3)) by scalar arithmetic.
        let rho = State::diagonal(&[0.5, 0.5]).unwrap();
        let sigma = State::diagonal(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let oracle =
            0.5 * (0.5f64.ln() - (1.0f64 / 3.0).ln()) + 0.5 * (0.5f64.ln() - (2.0f64 / 3.0).ln());
        assert!((oracle - 0.5 * (9.0f64 / 8.0).ln()).abs() < 1e-15);
        let r = relative_entropy(&rho, &sigma).unwrap();
        assert!((r.value.as_f64() - oracle).abs() < 1e-12);
        assert!((r.value.as_f64() - 0.058891).abs() < 1e-6);
    }

    #[test]
    fn fidelity_of_identical_normalized_state_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(2, &mut rng);
        let f = fidelity(&rho, &rho).unwrap();
        assert!((f.value.as_f64() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fidelity_of_orthogonal_pure_states_is_zero() {
        let a = State::pure(&basis_vector(2, 0)).unwrap();
        let b = State::pure(&basis_vector(2, 1)).unwrap();
        let f = fidelity(&a, &b).unwrap();
        assert!(f.value.as_f64().abs() < 1e-12);
    }

    #[test]
    fn fidelity_commuting_closed_form() {
        // F = Σ √(p_i q_i) for commuting diagonals.
        let p = State::diagonal(&[0.5, 0.5]).unwrap();
        let q = State::diagonal(&[1.0, 0.0]).unwrap();
        let f = fidelity(&p, &q).unwrap();
        assert!((f.value.as_f64() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fidelity_bounded_by_norm_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let rho = random_density(3, &mut rng).scaled(1.3).unwrap();
            let sigma = random_density(3, &mut rng).scaled(0.7).unwrap();
            let f = fidelity(&rho, &sigma).unwrap().value.as_f64();
            assert!(f >= 0.0);
            assert!(f <= (rho.norm() * sigma.norm()).sqrt() + 1e-10);
        }
    }

    #[test]
    fn renyi_of_identical_states_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density(2, &mut rng);
        for s in [0.6, 0.75, 0.9, 2.0] {
            let r = sandwiched_renyi(&rho, &rho, s).unwrap();
            assert!(r.value.as_f64().abs() < 1e-10, "s={s}");
        }
    }

    #[test]
    fn renyi_order_validation() {
        let rho = State::maximally_mixed(2);
        assert!(sandwiched_renyi(&rho, &rho, 0.5).is_err());
        assert!(sandwiched_renyi(&rho, &rho, 1.0).is_err());
        assert!(sandwiched_renyi(&rho, &rho, 0.3).is_err());
    }

    #[test]
    fn renyi_support_violation_above_one_is_infinite() {
        let rho = State::diagonal(&[0.5, 0.5]).unwrap();
        let sigma = State::diagonal(&[1.0, 0.0]).unwrap();
        let r = sandwiched_renyi(&rho, &sigma, 2.0).unwrap();
        assert!(!r.value.is_finite());
    }

    #[test]
    fn renyi_half_limit_recovers_log_fidelity() {
        // D_s → −log F² as s → 1/2⁺; checked at s = 0.5001.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let rho = random_density(2, &mut rng);
            let sigma = random_density(2, &mut rng);
            let d = sandwiched_renyi(&rho, &sigma, 0.5001)
                .unwrap()
                .value
                .as_f64();
            let f = fidelity(&rho, &sigma).unwrap().value.as_f64();
            let target = -(f * f).ln();
            assert!(
                (d - target).abs() < 1e-3,
                "s→1/2 limit: D={d}, −logF²={target}"
            );
        }
    }

    #[test]
    fn renyi_bell_vs_two_site_pinching_is_log_two() {
        // The sandwich is scalar on the common support: the pinched Bell
        // state is (|00><00| + |11><11|)/2 and D_s = log 2 for every s.
        let bell = State::pure(&bell_vector(2)).unwrap();
        let mut pinched = ComplexMatrix::zeros(4, 4);
        pinched[(0, 0)] = Complex64::new(0.5, 0.0);
        pinched[(3, 3)] = Complex64::new(0.5, 0.0);
        let sigma = State::from_matrix(pinched).unwrap();
        for s in [0.6, 0.75, 0.9] {
            let r = sandwiched_renyi(&bell, &sigma, s).unwrap();
            assert!(
                (r.value.as_f64() - 2.0f64.ln()).abs() < 1e-10,
                "s={s}: {}",
                r.value
            );
        }
    }

    #[test]
    fn renyi_is_below_relative_entropy_for_s_below_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..15 {
            let rho = random_density(3, &mut rng);
            let sigma = random_density(3, &mut rng);
            let s_um = relative_entropy(&rho, &sigma).unwrap().value.as_f64();
            for s in [0.6, 0.75, 0.9] {
                let d = sandwiched_renyi(&rho, &sigma, s).unwrap().value.as_f64();
                assert!(d <= s_um + 1e-9, "D_{s} = {d} > S = {s_um}");
            }
        }
    }

    #[test]
    fn renyi_nondecreasing_in_s() {
        // Sanity check, not asserted by theory references here.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let rho = random_density(2, &mut rng);
            let sigma = random_density(2, &mut rng);
            let mut prev = f64::NEG_INFINITY;
            for s in [0.55, 0.65, 0.75, 0.85, 0.95] {
                let d = sandwiched_renyi(&rho, &sigma, s).unwrap().value.as_f64();
                assert!(d >= prev - 1e-9);
                prev = d;
            }
        }
    }

    #[test]
    fn modular_operator_of_maximally_mixed_pair_is_identity() {
        let rho = State::maximally_mixed(3);
        let delta = relative_modular_operator(&rho, &rho).unwrap();
        let s = delta.superoperator();
        assert!((s - ComplexMatrix::identity(9, 9)).norm() < 1e-12);
    }

    #[test]
    fn modular_operator_acts_by_eigenvalue_ratios_on_matrix_units() {
        let psi = State::diagonal(&[0.25, 0.75]).unwrap();
        let zeta = State::diagonal(&[0.4, 0.6]).unwrap();
        let delta = relative_modular_operator(&psi, &zeta).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut unit = ComplexMatrix::zeros(2, 2);
                unit[(i, j)] = Complex64::new(1.0, 0.0);
                let out = delta.apply(&unit);
                let ratio = [0.25, 0.75][i] / [0.4, 0.6][j];
                assert!((out[(i, j)].re - ratio).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn modular_operator_superop_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = random_density(2, &mut rng);
        let zeta = random_density(2, &mut rng);
        let delta = relative_modular_operator(&psi, &zeta).unwrap();
        let s = HermitianMatrix::new(delta.superoperator()).unwrap();
        let eig = eig_hermitian(&s).unwrap();
        assert!(eig.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn modular_log_expectation_matches_relative_entropy() {
        // ⟨ζ| log Δ_{ψ,ζ} |ζ⟩ = −S(ζ|ψ) on faithful pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let psi = random_density(3, &mut rng);
            let zeta = random_density(3, &mut rng);
            let delta = relative_modular_operator(&psi, &zeta).unwrap();
            let lhs = delta.log_expectation(&zeta).unwrap();
            let s = relative_entropy(&zeta, &psi).unwrap().value.as_f64();
            assert!((lhs + s).abs() < 1e-8, "⟨logΔ⟩ = {lhs}, S = {s}");
        }
    }

    #[test]
    fn lp_oracle_of_maximally_mixed_pair_is_one() {
        let rho = State::maximally_mixed(3);
        for p in [1.2, 1.5, 1.8] {
            let q = lp_norm_oracle(&rho, &rho, p).unwrap();
            assert!((q - 1.0).abs() < 1e-12, "p={p}: {q}");
        }
    }

    #[test]
    fn lp_oracle_consistent_with_renyi() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let zeta = random_density(2, &mut rng);
            let psi = random_density(2, &mut rng);
            let p = 1.5;
            let s = p / 2.0;
            let q = lp_norm_oracle(&zeta, &psi, p).unwrap();
            let d = sandwiched_renyi(&zeta, &psi, s).unwrap().value.as_f64();
            assert!(((q.ln() / (s - 1.0)) - d).abs() < 1e-10);
        }
    }

    #[test]
    fn lp_oracle_near_two_approaches_hs_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let zeta = random_density(2, &mut rng);
        let psi = random_density(2, &mut rng);
        let p = 1.999;
        let q = lp_norm_oracle(&zeta, &psi, p).unwrap();
        // ‖ζ‖_{2,ψ} is the plain vector norm √Tr ρ_ζ.
        assert!((q.powf(1.0 / p) - zeta.norm().sqrt()).abs() < 2e-3);
    }

    #[test]
    fn lp_oracle_rejects_non_faithful_reference() {
        let zeta = State::maximally_mixed(2);
        let psi = State::diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            lp_norm_oracle(&zeta, &psi, 1.5),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn conjugated_fidelity_identity() {
        // F(yρy†, σ) = ‖√ρ y† √σ‖₁, the identity the variational solver
        // leans on, checked against the eigen-route fidelity.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let rho = random_density(3, &mut rng);
            let sigma = random_density(3, &mut rng);
            let y = gaussian_matrix(3, 3, &mut rng);
            let conj = State::from_matrix(&y * rho.matrix() * y.adjoint()).unwrap();
            let lhs = fidelity(&conj, &sigma).unwrap().value.as_f64();
            let sr = matrix_sqrt(rho.density()).unwrap();
            let ss = matrix_sqrt(sigma.density()).unwrap();
            let rhs = trace_norm(&(sr.matrix() * y.adjoint() * ss.matrix())).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn pure_state_from_unnormalized_vector_keeps_norm() {
        let v = DVector::from_vec(vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0)]);
        let s = State::pure(&v).unwrap();
        assert!((s.norm() - 5.0).abs() < 1e-12);
    }
}
