//! Standard-form inclusion scenarios `N ⊂ M` on doubled Hilbert spaces.
//!
//! The standard form is realized concretely as `M = M_n ⊗ 1` acting on
//! `ℂ^n ⊗ ℂ^n`; the subalgebra `N` is the fixed-point (orbifold) algebra of a
//! finite unitary group acting on the first factor, with the group average as
//! conditional expectation. The commutant-side expectation `E′ : N′ → M′` is
//! the trace-preserving one, valid for this tracial scenario family. On top
//! of the scenarios: the entropic certainty relation, its Rényi and fidelity
//! variants, the index bound for the generalized fidelity, and the two-site
//! saturation experiment on maximally entangled charge-correlated states.

use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::algebra::{
    commutant, restrict_state, trace_conditional_expectation, MatrixAlgebra, State,
};
use crate::channels::{
    group_average_expectation, pimsner_popa_index, Channel, ConditionalExpectation, IndexResult,
};
use crate::divergences::{fidelity, relative_entropy, sandwiched_renyi, DivergenceResult, Value};
use crate::matrixkit::{bell_vector, clock, pauli_x, pauli_y, pauli_z, ComplexMatrix};
use crate::tol;
use crate::variational::{generalized_fidelity, generalized_fidelity_in, QuadratureGrid};
use crate::{Error, Result};

/// The shipped orbifold group families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupName {
    /// `{1, Z}` on ℂ².
    Z2Pauli,
    /// The cyclic clock group `{C^k}` on ℂⁿ.
    ZnClock,
    /// `{1, X, Y, Z}` on ℂ² (projective; closed modulo phases).
    PauliGroup,
}

impl FromStr for GroupName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z2_pauli" => Ok(GroupName::Z2Pauli),
            "Zn_clock" => Ok(GroupName::ZnClock),
            "pauli_group" => Ok(GroupName::PauliGroup),
            other => Err(Error::InvalidInput(format!("unknown group name: {other}"))),
        }
    }
}

impl GroupName {
    pub fn label(&self) -> &'static str {
        match self {
            GroupName::Z2Pauli => "Z2_pauli",
            GroupName::ZnClock => "Zn_clock",
            GroupName::PauliGroup => "pauli_group",
        }
    }
}

/// Unitaries of the named group on ℂⁿ.
pub fn group_unitaries(name: GroupName, n: usize) -> Result<Vec<ComplexMatrix>> {
    match name {
        GroupName::Z2Pauli => {
            if n != 2 {
                return Err(Error::InvalidInput("Z2_pauli needs n = 2".into()));
            }
            Ok(vec![ComplexMatrix::identity(2, 2), pauli_z()])
        }
        GroupName::ZnClock => {
            if n < 2 {
                return Err(Error::InvalidInput("Zn_clock needs n ≥ 2".into()));
            }
            let c = clock(n);
            let mut out = vec![ComplexMatrix::identity(n, n)];
            let mut acc = c.clone();
            for _ in 1..n {
                out.push(acc.clone());
                acc = &acc * &c;
            }
            Ok(out)
        }
        GroupName::PauliGroup => {
            if n != 2 {
                return Err(Error::InvalidInput("pauli_group needs n = 2".into()));
            }
            Ok(vec![
                ComplexMatrix::identity(2, 2),
                pauli_x(),
                pauli_y(),
                pauli_z(),
            ])
        }
    }
}

/// An inclusion `N ⊂ M` in standard form on `ℂ^n ⊗ ℂ^n`, with both
/// commutants, both conditional expectations, the computed index, and a unit
/// state vector.
#[derive(Debug, Clone)]
pub struct InclusionScenario {
    hilbert_dim: usize,
    site_dim: usize,
    group_order: usize,
    m: MatrixAlgebra,
    n: MatrixAlgebra,
    m_prime: MatrixAlgebra,
    n_prime: MatrixAlgebra,
    e: ConditionalExpectation,
    e_prime: ConditionalExpectation,
    index: IndexResult,
    state_vector: DVector<Complex64>,
    restrict_m: ConditionalExpectation,
    restrict_n_prime: ConditionalExpectation,
}

impl InclusionScenario {
    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn group_order(&self) -> usize {
        self.group_order
    }

    pub fn m(&self) -> &MatrixAlgebra {
        &self.m
    }

    pub fn n(&self) -> &MatrixAlgebra {
        &self.n
    }

    pub fn m_prime(&self) -> &MatrixAlgebra {
        &self.m_prime
    }

    pub fn n_prime(&self) -> &MatrixAlgebra {
        &self.n_prime
    }

    pub fn e(&self) -> &ConditionalExpectation {
        &self.e
    }

    pub fn e_prime(&self) -> &ConditionalExpectation {
        &self.e_prime
    }

    pub fn index(&self) -> &IndexResult {
        &self.index
    }

    pub fn log_index(&self) -> f64 {
        self.index.index.ln()
    }

    pub fn state_vector(&self) -> &DVector<Complex64> {
        &self.state_vector
    }

    /// Same inclusion data with a different state vector (normalized here).
    pub fn with_state(&self, psi: &DVector<Complex64>) -> Result<Self> {
        let mut out = self.clone();
        out.state_vector = normalize_vector(psi, self.hilbert_dim)?;
        Ok(out)
    }

    /// `|ψ⟩⟨ψ|` on the doubled space.
    pub fn ambient_state(&self) -> State {
        State::pure(&self.state_vector).expect("unit vector gives a PSD density")
    }

    /// Density of `ω_ψ` restricted to `M`.
    pub fn omega_on_m(&self) -> Result<State> {
        restrict_state(&self.ambient_state(), &self.restrict_m)
    }

    /// Density of `ω_ψ ∘ E` restricted to `M`.
    pub fn omega_e_on_m(&self) -> Result<State> {
        let moved = self.e.channel().apply_schrodinger(&self.ambient_state())?;
        restrict_state(&moved, &self.restrict_m)
    }

    /// Density of `ω′_ψ` restricted to `N′`.
    pub fn omega_on_n_prime(&self) -> Result<State> {
        restrict_state(&self.ambient_state(), &self.restrict_n_prime)
    }

    /// Density of `ω′_ψ ∘ E′` on `N′` (lands in `M′ ⊆ N′`).
    pub fn omega_e_prime_on_n_prime(&self) -> Result<State> {
        self.e_prime
            .channel()
            .apply_schrodinger(&self.ambient_state())
    }
}

fn normalize_vector(psi: &DVector<Complex64>, dim: usize) -> Result<DVector<Complex64>> {
    if psi.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: psi.len(),
        });
    }
    let n = psi.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::InvalidInput("state vector must be nonzero".into()));
    }
    Ok(psi.map(|z| z / Complex64::new(n, 0.0)))
}

/// Build the orbifold inclusion `N = (fixed points of G) ⊗ 1 ⊂ M = M_n ⊗ 1`
/// on `ℂ^n ⊗ ℂ^n`, with the group average as `E : M → N`, the
/// trace-preserving expectation as `E′ : N′ → M′`, and the Pimsner–Popa
/// index of `E`.
pub fn build_orbifold_inclusion(
    n: usize,
    rep: &[ComplexMatrix],
    psi: &DVector<Complex64>,
) -> Result<InclusionScenario> {
    if n < 2 {
        return Err(Error::InvalidInput("need site dimension n ≥ 2".into()));
    }
    let hilbert_dim = n * n;
    let state_vector = normalize_vector(psi, hilbert_dim)?;

    let m = MatrixAlgebra::tensor_left(n, n);
    let site_full = MatrixAlgebra::full(n);
    // Group checks and the fixed-point algebra happen on the single site.
    let site_expectation = group_average_expectation(rep, &site_full)?;
    let fixed_site = site_expectation.subalgebra();

    let id_site = ComplexMatrix::identity(n, n);
    let lifted: Vec<ComplexMatrix> = fixed_site
        .basis()
        .iter()
        .map(|a| a.kronecker(&id_site))
        .collect();
    let n_alg = MatrixAlgebra::from_span(&lifted, hilbert_dim)?;

    let m_prime = commutant(&m);
    let n_prime = commutant(&n_alg);

    let scale = Complex64::new(1.0 / (rep.len() as f64).sqrt(), 0.0);
    let kraus: Vec<ComplexMatrix> = rep
        .iter()
        .map(|u| u.kronecker(&id_site).map(|z| z * scale))
        .collect();
    let e_channel = Channel::from_kraus(kraus)?;
    let e = ConditionalExpectation::certify(e_channel, n_alg.clone(), &m)?;

    let e_prime = trace_conditional_expectation(&n_prime, &m_prime)?;
    let index = pimsner_popa_index(&e)?;

    let full = MatrixAlgebra::full(hilbert_dim);
    let restrict_m = trace_conditional_expectation(&full, &m)?;
    let restrict_n_prime = trace_conditional_expectation(&full, &n_prime)?;

    // Inclusion sanity: N ⊆ M and M′ ⊆ N′.
    let r1 = m.containment_residual(&n_alg);
    let r2 = n_prime.containment_residual(&m_prime);
    if r1.max(r2) > tol::BIMODULE {
        return Err(Error::NotSubalgebra {
            residual: r1.max(r2),
        });
    }

    Ok(InclusionScenario {
        hilbert_dim,
        site_dim: n,
        group_order: rep.len(),
        m,
        n: n_alg,
        m_prime,
        n_prime,
        e,
        e_prime,
        index,
        state_vector,
        restrict_m,
        restrict_n_prime,
    })
}

/// Orbifold scenario for a named group.
pub fn build_named_orbifold(
    name: GroupName,
    n: usize,
    psi: &DVector<Complex64>,
) -> Result<InclusionScenario> {
    let rep = group_unitaries(name, n)?;
    build_orbifold_inclusion(n, &rep, psi)
}

/// The two relative-entropy terms of the certainty relation and their sum,
/// which equals `log[M:N]` for the shipped scenario family.
#[derive(Debug, Clone)]
pub struct CertaintyOutcome {
    pub s_m: Value,
    pub s_n_prime: Value,
    pub sum: Value,
    pub log_index: f64,
}

/// `S_M(ω_ψ | ω_ψ∘E) + S_{N′}(ω′_ψ | ω′_ψ∘E′)` against `log[M:N]`.
pub fn certainty_relation(scn: &InclusionScenario) -> Result<CertaintyOutcome> {
    let rho_m = scn.omega_on_m()?;
    let sigma_m = scn.omega_e_on_m()?;
    let s_m = relative_entropy(&rho_m, &sigma_m)?.value;

    let rho_np = scn.omega_on_n_prime()?;
    let sigma_np = scn.omega_e_prime_on_n_prime()?;
    let s_np = relative_entropy(&rho_np, &sigma_np)?.value;

    let sum = match (s_m, s_np) {
        (Value::Finite(a), Value::Finite(b)) => Value::Finite(a + b),
        _ => Value::Infinite,
    };
    Ok(CertaintyOutcome {
        s_m,
        s_n_prime: s_np,
        sum,
        log_index: scn.log_index(),
    })
}

/// Rényi version: the sum is bounded by `log[M:N]` rather than equal to it.
#[derive(Debug, Clone)]
pub struct RenyiCertaintyOutcome {
    pub d_m: Value,
    pub d_n_prime: Value,
    pub sum: Value,
    pub bound: f64,
}

pub fn renyi_certainty(scn: &InclusionScenario, s: f64) -> Result<RenyiCertaintyOutcome> {
    if !(s > 0.5 && s < 1.0) {
        return Err(Error::InvalidInput(format!(
            "Rényi certainty needs s in (1/2,1), got {s}"
        )));
    }
    let d_m = sandwiched_renyi(&scn.omega_on_m()?, &scn.omega_e_on_m()?, s)?.value;
    let d_np = sandwiched_renyi(
        &scn.omega_on_n_prime()?,
        &scn.omega_e_prime_on_n_prime()?,
        s,
    )?
    .value;
    let sum = match (d_m, d_np) {
        (Value::Finite(a), Value::Finite(b)) => Value::Finite(a + b),
        _ => Value::Infinite,
    };
    Ok(RenyiCertaintyOutcome {
        d_m,
        d_n_prime: d_np,
        sum,
        bound: scn.log_index(),
    })
}

/// Fidelity version: the product is bounded below by `[M:N]^{−1/2}`.
#[derive(Debug, Clone)]
pub struct FidelityCertaintyOutcome {
    pub f_m: f64,
    pub f_n_prime: f64,
    pub product: f64,
    pub floor: f64,
}

pub fn fidelity_certainty(scn: &InclusionScenario) -> Result<FidelityCertaintyOutcome> {
    let f_m = fidelity(&scn.omega_on_m()?, &scn.omega_e_on_m()?)?
        .value
        .as_f64();
    let f_np = fidelity(&scn.omega_on_n_prime()?, &scn.omega_e_prime_on_n_prime()?)?
        .value
        .as_f64();
    Ok(FidelityCertaintyOutcome {
        f_m,
        f_n_prime: f_np,
        product: f_m * f_np,
        floor: 1.0 / scn.index.index.sqrt(),
    })
}

/// Generalized-fidelity index bound `Φ_s(ω_ψ | ω_ψ∘E) ≤ log[M:N]` evaluated
/// on `M` with the step functions constrained to `M`.
#[derive(Debug, Clone)]
pub struct PhiIndexOutcome {
    /// Certified lower estimate of `Φ_s`.
    pub estimate: f64,
    pub log_index: f64,
    /// `log_index − estimate`; small for saturating families.
    pub gap: f64,
    /// Whether `estimate ≤ log_index + 1e-6` held.
    pub within_bound: bool,
    pub result: DivergenceResult,
}

pub fn phi_index_bound(
    scn: &InclusionScenario,
    s: f64,
    grid: &QuadratureGrid,
) -> Result<PhiIndexOutcome> {
    let rho_m = scn.omega_on_m()?;
    let sigma_m = scn.omega_e_on_m()?;
    let result = generalized_fidelity_in(&rho_m, &sigma_m, s, grid, &scn.m)?;
    let estimate = result.value.as_f64();
    let log_index = scn.log_index();
    Ok(PhiIndexOutcome {
        estimate,
        log_index,
        gap: log_index - estimate,
        within_bound: estimate <= log_index + 1e-6,
        result,
    })
}

/// One row of the two-site saturation experiment.
#[derive(Debug, Clone)]
pub struct BellOrbifoldRow {
    pub s: f64,
    pub d_s: f64,
    pub phi_estimate: f64,
    pub phi_upper: f64,
    pub fidelity: f64,
    pub log_group_order: f64,
}

#[derive(Debug, Clone)]
pub struct BellOrbifoldReport {
    pub group: GroupName,
    pub site_dim: usize,
    pub group_order: usize,
    pub rows: Vec<BellOrbifoldRow>,
}

/// Two-site orbifold `M_n ⊗ M_n` with `E = E_A ⊗ E_B` (tensor square of the
/// group average) applied to a charge-correlated maximally entangled state
/// `Σ_i |ii⟩/√n` (unless another state is supplied). For these families the
/// sandwiched Rényi divergence equals `log|G|` at every order and the
/// fidelity equals `|G|^{−1/2}`: the finite-dimensional saturation of the
/// index bound.
pub fn bell_orbifold_experiment(
    n: usize,
    group: GroupName,
    s_values: &[f64],
    grid: &QuadratureGrid,
    state: Option<&DVector<Complex64>>,
) -> Result<BellOrbifoldReport> {
    let rep = group_unitaries(group, n)?;
    let dim = n * n;
    let default_state = bell_vector(n);
    let psi = normalize_vector(state.unwrap_or(&default_state), dim)?;

    let scale = Complex64::new(1.0 / rep.len() as f64, 0.0);
    let mut kraus = Vec::with_capacity(rep.len() * rep.len());
    for ua in &rep {
        for ub in &rep {
            kraus.push(ua.kronecker(ub).map(|z| z * scale));
        }
    }
    let e2 = Channel::from_kraus(kraus)?;

    let rho = State::pure(&psi)?;
    let sigma = e2.apply_schrodinger(&rho)?;
    let f = fidelity(&rho, &sigma)?.value.as_f64();
    let log_g = (rep.len() as f64).ln();

    let mut rows = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let d_s = sandwiched_renyi(&rho, &sigma, s)?.value.as_f64();
        let phi = generalized_fidelity(&rho, &sigma, s, grid)?;
        rows.push(BellOrbifoldRow {
            s,
            d_s,
            phi_estimate: phi.value.as_f64(),
            phi_upper: phi.upper_bound,
            fidelity: f,
            log_group_order: log_g,
        });
    }
    Ok(BellOrbifoldReport {
        group,
        site_dim: n,
        group_order: rep.len(),
        rows,
    })
}
