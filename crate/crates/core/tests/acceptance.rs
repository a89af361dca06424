//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured extremes. Run with `cargo test --test acceptance`
//! (add `-- --nocapture` to see the lines for passing criteria too).

use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vnd_core::algebra::State;
use vnd_core::algebra::{close_star_algebra, trace_conditional_expectation, MatrixAlgebra};
use vnd_core::channels::{
    dpi_harness_with, pimsner_popa_index, random_density, DivergenceKind, DpiOptions,
};
use vnd_core::divergences::{fidelity, lp_norm_oracle, relative_entropy, sandwiched_renyi};
use vnd_core::inclusions::{
    bell_orbifold_experiment, build_named_orbifold, certainty_relation, fidelity_certainty,
    renyi_certainty, GroupName,
};
use vnd_core::matrixkit::basis_vector;
use vnd_core::oracles::{diagonal_phi_closed_form, diagonal_phi_exact};
use vnd_core::variational::{build_grid, generalized_fidelity, kosaki_entropy, QuadratureGrid};

fn report(criterion: usize, ok: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn seeded_state(dim: usize, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_density(dim, &mut rng)
}

/// Random unit vector for the certainty sweeps.
fn seeded_vector(dim: usize, seed: u64) -> DVector<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let v = DVector::from_fn(dim, |_, _| Complex64::new(normal(), normal()));
    let n = v.norm();
    v.map(|z| z / Complex64::new(n, 0.0))
}

#[test]
fn criterion_01_kosaki_matches_umegaki() {
    let started = Instant::now();
    let grid = QuadratureGrid::default_for(0.5);
    let mut worst = 0.0f64;
    for i in 0..50u64 {
        let dim = 2 + (i % 3) as usize;
        let rho = seeded_state(dim, 0xC1_0000 + 2 * i);
        let sigma = seeded_state(dim, 0xC1_0000 + 2 * i + 1);
        let k = kosaki_entropy(&rho, &sigma, &grid).unwrap().value.as_f64();
        let s = relative_entropy(&rho, &sigma).unwrap().value.as_f64();
        worst = worst.max((k - s).abs());
    }
    let elapsed = started.elapsed();
    let ok = worst <= 1e-4 && elapsed.as_secs_f64() <= 60.0;
    report(
        1,
        ok,
        &format!("max |kosaki − umegaki| = {worst:.3e} over 50 pairs (dims 2–4) in {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_remark_closed_form_on_commuting_pairs() {
    // The closed form −(s/(1−s))·log F² is exact only while the optimal
    // diagonal profile stays below 1; the separations below keep that defect
    // under 3e-4 (certified in-test by the independent active-set oracle),
    // so the 1e-3 comparison genuinely measures the evaluator.
    let grid = QuadratureGrid::default_for(0.5);
    let mut worst = 0.0f64;
    let mut worst_defect = 0.0f64;
    for &(s, delta) in &[(0.6, 0.02), (0.75, 0.008), (0.9, 0.0025)] {
        for dim in 2..=4usize {
            let base = 1.0 / dim as f64;
            let mut p = vec![base; dim];
            let mut q = vec![base; dim];
            p[0] -= delta;
            p[dim - 1] += delta;
            q[0] += delta;
            q[dim - 1] -= delta;
            let target = diagonal_phi_closed_form(&p, &q, s).unwrap();
            let exact = diagonal_phi_exact(&p, &q, s).unwrap();
            worst_defect = worst_defect.max((exact - target).abs());
            assert!(
                (exact - target).abs() <= 3e-4,
                "closed form not valid at dim {dim}, s {s}: defect {:.3e}",
                (exact - target).abs()
            );
            let rho = State::diagonal(&p).unwrap();
            let sigma = State::diagonal(&q).unwrap();
            let phi = generalized_fidelity(&rho, &sigma, s, &grid)
                .unwrap()
                .value
                .as_f64();
            worst = worst.max((phi - target).abs());
        }
    }
    let ok = worst <= 1e-3;
    report(
        2,
        ok,
        &format!(
            "max |Φ̂ − closed form| = {worst:.3e} (oracle-certified closed-form defect ≤ {worst_defect:.3e})"
        ),
    );
}

#[test]
fn criterion_03_bracketing_on_random_pairs() {
    let grid = build_grid(0.5, 1e-6, 1e6, 512).unwrap();
    let s_phi = 0.75;
    let mut worst_upper = f64::NEG_INFINITY; // Φ̂ − upper ≤ 0
    let mut worst_floor = f64::NEG_INFINITY; // (−log F² − 0.05) − Φ̂ ≤ 0
    let mut worst_renyi = f64::NEG_INFINITY; // D_s − upper ≤ 1e-9
    for i in 0..100u64 {
        let dim = 2 + (i % 2) as usize;
        let rho = seeded_state(dim, 0xC3_0000 + 2 * i);
        let sigma = seeded_state(dim, 0xC3_0000 + 2 * i + 1);
        let f = fidelity(&rho, &sigma).unwrap().value.as_f64();
        let res = generalized_fidelity(&rho, &sigma, s_phi, &grid).unwrap();
        let phi = res.value.as_f64();
        let upper_phi = -(s_phi / (1.0 - s_phi)) * (f * f).ln();
        worst_upper = worst_upper.max(phi - upper_phi);
        worst_floor = worst_floor.max(-(f * f).ln() - 0.05 - phi);
        for s in [0.6, 0.75, 0.9] {
            let d = sandwiched_renyi(&rho, &sigma, s).unwrap().value.as_f64();
            let upper = -(s / (1.0 - s)) * (f * f).ln();
            worst_renyi = worst_renyi.max(d - upper);
        }
    }
    let ok = worst_upper <= 1e-9 && worst_floor <= 0.0 && worst_renyi <= 1e-9;
    report(
        3,
        ok,
        &format!(
            "max(Φ̂ − upper) = {worst_upper:.3e}, max(floor − Φ̂) = {worst_floor:.3e}, max(D_s − upper) = {worst_renyi:.3e} over 100 pairs"
        ),
    );
}

#[test]
fn criterion_04_certainty_relation_sweeps() {
    let mut worst = 0.0f64;
    for (group, n) in [
        (GroupName::Z2Pauli, 2usize),
        (GroupName::ZnClock, 3),
        (GroupName::PauliGroup, 2),
    ] {
        let dim = n * n;
        let scn = build_named_orbifold(group, n, &seeded_vector(dim, 0xC4)).unwrap();
        for i in 0..50u64 {
            let psi = seeded_vector(dim, 0xC4_0100 + 101 * i);
            let scn_i = scn.with_state(&psi).unwrap();
            let c = certainty_relation(&scn_i).unwrap();
            let dev = (c.sum.as_f64() - c.log_index).abs();
            worst = worst.max(dev);
        }
    }
    let ok = worst <= 1e-6;
    report(
        4,
        ok,
        &format!("max |S_M + S_N' − log index| = {worst:.3e} over 3 scenarios × 50 states"),
    );
}

#[test]
fn criterion_05_renyi_and_fidelity_certainty() {
    let mut worst_renyi = f64::NEG_INFINITY;
    let mut worst_fid = f64::NEG_INFINITY;
    for (group, n) in [
        (GroupName::Z2Pauli, 2usize),
        (GroupName::ZnClock, 3),
        (GroupName::PauliGroup, 2),
    ] {
        let dim = n * n;
        let scn = build_named_orbifold(group, n, &seeded_vector(dim, 0xC5)).unwrap();
        for i in 0..50u64 {
            let psi = seeded_vector(dim, 0xC5_0100 + 101 * i);
            let scn_i = scn.with_state(&psi).unwrap();
            for s in [0.6, 0.75, 0.9] {
                let r = renyi_certainty(&scn_i, s).unwrap();
                worst_renyi = worst_renyi.max(r.sum.as_f64() - r.bound);
            }
            let f = fidelity_certainty(&scn_i).unwrap();
            worst_fid = worst_fid.max(f.floor - f.product);
        }
    }
    // Saturation: ψ = |00⟩ with the Z2 orbifold hits the bound exactly.
    let psi00 = basis_vector(4, 0);
    let scn = build_named_orbifold(GroupName::Z2Pauli, 2, &psi00).unwrap();
    let f = fidelity_certainty(&scn).unwrap();
    let saturation = (f.product - f.floor).abs();
    let ok = worst_renyi <= 1e-9 && worst_fid <= 1e-9 && saturation <= 1e-9;
    report(
        5,
        ok,
        &format!(
            "max Rényi excess = {worst_renyi:.3e}, max fidelity-floor excess = {worst_fid:.3e}, |00⟩ saturation defect = {saturation:.3e}"
        ),
    );
}

#[test]
fn criterion_06_index_values() {
    let mut details = Vec::new();
    let mut ok = true;
    for n in [2usize, 3, 4] {
        let full = MatrixAlgebra::full(n);
        let diag = close_star_algebra(&[vnd_core::matrixkit::clock(n)], n).unwrap();
        let e = trace_conditional_expectation(&full, &diag).unwrap();
        let r = pimsner_popa_index(&e).unwrap();
        let dev = (r.index - n as f64).abs();
        ok &= dev <= 1e-9 && r.sampler_min_residual >= -1e-8;
        details.push(format!("pinch{n}: {dev:.1e}"));
    }
    for n in [2usize, 3, 4] {
        let full = MatrixAlgebra::full(n);
        let scalars = MatrixAlgebra::scalars(n);
        let e = trace_conditional_expectation(&full, &scalars).unwrap();
        let r = pimsner_popa_index(&e).unwrap();
        let dev = (r.index - (n * n) as f64).abs();
        ok &= dev <= 1e-6 && r.sampler_min_residual >= -1e-8;
        details.push(format!("trace{n}: {dev:.1e}"));
    }
    let scn = build_named_orbifold(GroupName::Z2Pauli, 2, &seeded_vector(4, 0xC6)).unwrap();
    let dev = (scn.index().index - 2.0).abs();
    ok &= dev <= 1e-6;
    details.push(format!("Z2 orbifold: {dev:.1e}"));
    report(6, ok, &details.join(", "));
}

#[test]
fn criterion_07_bell_orbifold_saturation() {
    let grid = QuadratureGrid::default_for(0.5);
    let s_values = [0.6, 0.75, 0.9];
    let mut worst_d = 0.0f64;
    let mut worst_phi_hi = f64::NEG_INFINITY;
    let mut worst_phi_lo = f64::NEG_INFINITY;
    let mut worst_f = 0.0f64;
    for (group, n) in [
        (GroupName::Z2Pauli, 2usize),
        (GroupName::ZnClock, 3),
        (GroupName::PauliGroup, 2),
    ] {
        let rep = bell_orbifold_experiment(n, group, &s_values, &grid, None).unwrap();
        let log_g = (rep.group_order as f64).ln();
        for row in &rep.rows {
            worst_d = worst_d.max((row.d_s - log_g).abs());
            worst_phi_hi = worst_phi_hi.max(row.phi_estimate - (log_g + 1e-6));
            worst_phi_lo = worst_phi_lo.max((log_g - 0.05) - row.phi_estimate);
            worst_f = worst_f.max((row.fidelity - 1.0 / (rep.group_order as f64).sqrt()).abs());
        }
    }
    let ok = worst_d <= 1e-9 && worst_phi_hi <= 0.0 && worst_phi_lo <= 0.0 && worst_f <= 1e-9;
    report(
        7,
        ok,
        &format!(
            "|G| ∈ {{2,3,4}}: max |D_s − log|G|| = {worst_d:.3e}, Φ̂ overshoot = {worst_phi_hi:.3e}, Φ̂ undershoot beyond 0.05 = {worst_phi_lo:.3e}, max |F − |G|^(-1/2)| = {worst_f:.3e}"
        ),
    );
}

#[test]
fn criterion_08_dpi_harness() {
    let hard = [
        DivergenceKind::RelativeEntropy,
        DivergenceKind::SandwichedRenyi(0.6),
        DivergenceKind::SandwichedRenyi(0.9),
        DivergenceKind::Fidelity,
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for kind in hard {
        let report = dpi_harness_with(kind, 200, 0xC8, &DpiOptions::default()).unwrap();
        let violations = report.violations();
        ok &= violations == 0;
        details.push(format!(
            "{}: {} violations (max {:.2e})",
            kind.label(),
            violations,
            report.max_violation()
        ));
    }
    let soft = dpi_harness_with(
        DivergenceKind::GeneralizedFidelity(0.75),
        200,
        0xC8,
        &DpiOptions::default(),
    )
    .unwrap();
    let soft_violations = soft.violations();
    ok &= soft_violations == 0;
    details.push(format!(
        "generalized_fidelity soft (beyond 0.05): {} (max {:.2e})",
        soft_violations,
        soft.max_violation()
    ));
    report(8, ok, &details.join("; "));
}

#[test]
fn criterion_09_quadrature_selftest() {
    let grid = QuadratureGrid::default_for(0.5);
    let mut worst = 0.0f64;
    for &lambda in &[0.5f64, 1.0, 2.0] {
        for &alpha in &[0.25f64, 0.5, 0.75] {
            let target =
                std::f64::consts::PI / (std::f64::consts::PI * alpha).sin() * lambda.powf(alpha);
            let got = grid.power_law_selftest(lambda, alpha);
            worst = worst.max((got - target).abs());
        }
    }
    let ok = worst <= 1e-8;
    report(
        9,
        ok,
        &format!("max |∫ − (π/sin πα)λ^α| = {worst:.3e} over the nine (λ, α) pairs"),
    );
}

#[test]
fn criterion_10_lp_oracle_consistency() {
    let mut worst = 0.0f64;
    for &s in &[0.6f64, 0.75] {
        let p = 2.0 * s;
        for i in 0..20u64 {
            let dim = 2 + (i % 2) as usize;
            let zeta = seeded_state(dim, 0xCA_0000 + 2 * i);
            let psi = seeded_state(dim, 0xCA_0000 + 2 * i + 1);
            let q = lp_norm_oracle(&zeta, &psi, p).unwrap();
            let d = sandwiched_renyi(&zeta, &psi, s).unwrap().value.as_f64();
            worst = worst.max((q.ln() / (s - 1.0) - d).abs());
        }
    }
    let ok = worst <= 1e-10;
    report(
        10,
        ok,
        &format!("max |(s−1)^(-1) log(oracle) − D_s| = {worst:.3e} over 20 pairs × 2 orders"),
    );
}
