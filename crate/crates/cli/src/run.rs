//! Implementations of the three verbs: compute, verify, experiment.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vnd_core::algebra::MatrixAlgebra;
use vnd_core::channels::{
    dpi_harness_with, pimsner_popa_index, random_density, ConditionalExpectation, DivergenceKind,
    DpiOptions,
};
use vnd_core::divergences::{
    fidelity, lp_norm_oracle, relative_entropy, sandwiched_renyi, DivergenceResult,
};
use vnd_core::inclusions::{
    bell_orbifold_experiment, build_named_orbifold, build_orbifold_inclusion, certainty_relation,
    fidelity_certainty, phi_index_bound, renyi_certainty, GroupName,
};
use vnd_core::matrixkit::ComplexMatrix;
use vnd_core::oracles::{diagonal_phi_closed_form, diagonal_phi_exact};
use vnd_core::variational::{
    build_grid, generalized_fidelity, generalized_fidelity_in, kosaki_entropy, QuadratureGrid,
};

use crate::problem::{parse, Resolved, Task};
use crate::report::{fmt_diagnostics, fmt_f64, fmt_value, Csv};
use crate::{CliError, GridArgs};

fn grid_for(args: &GridArgs, alpha: f64) -> Result<QuadratureGrid, CliError> {
    build_grid(alpha, args.t_min, args.t_max, args.grid_points).map_err(CliError::user_from)
}

fn param(task: &Task, key: &str) -> Result<f64, CliError> {
    task.params
        .get(key)
        .copied()
        .ok_or_else(|| CliError::user(format!("task {} needs parameter {key:?}", task.name)))
}

fn arg<'a>(task: &'a Task, key: &str) -> Result<&'a str, CliError> {
    task.args
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| CliError::user(format!("task {} needs argument {key:?}", task.name)))
}

fn inputs_string(task: &Task) -> String {
    task.args
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Execute the named task from a problem file; on numeric failure the CSV
/// still carries a diagnostic row and the error is propagated for exit 3.
pub fn compute(
    text: &str,
    task_name: &str,
    grid_args: &GridArgs,
    flags: &str,
) -> Result<String, (Option<String>, CliError)> {
    let mut csv = Csv::new(
        &[
            "task",
            "op",
            "inputs",
            "value",
            "lower",
            "upper",
            "diagnostics",
        ],
        flags,
    );
    let resolved = match parse(text) {
        Ok(r) => r,
        // Numeric failures while constructing named objects still emit a
        // diagnostic row; malformed input stays a bare usage error.
        Err(err @ CliError::Numeric(_)) => {
            csv.row(&[
                task_name.to_string(),
                String::new(),
                String::new(),
                "nan".into(),
                "nan".into(),
                "nan".into(),
                format!("error={err}"),
            ]);
            return Err((Some(csv.finish()), err));
        }
        Err(err) => return Err((None, err)),
    };
    let task = resolved.task(task_name).map_err(|e| (None, e))?;

    match run_task(&resolved, task, grid_args) {
        Ok(result) => {
            csv.row(&[
                task.name.clone(),
                task.op.clone(),
                inputs_string(task),
                fmt_value(&result.value),
                fmt_f64(result.lower_bound),
                fmt_f64(result.upper_bound),
                fmt_diagnostics(&result.diagnostics),
            ]);
            Ok(csv.finish())
        }
        Err(err @ CliError::User(_)) => Err((None, err)),
        Err(err) => {
            csv.row(&[
                task.name.clone(),
                task.op.clone(),
                inputs_string(task),
                "nan".into(),
                "nan".into(),
                "nan".into(),
                format!("error={err}"),
            ]);
            Err((Some(csv.finish()), err))
        }
    }
}

fn run_task(
    resolved: &Resolved,
    task: &Task,
    grid_args: &GridArgs,
) -> Result<DivergenceResult, CliError> {
    let num = CliError::numeric_from;
    match task.op.as_str() {
        "relative_entropy" => {
            let rho = resolved.state(arg(task, "rho")?)?;
            let sigma = resolved.state(arg(task, "sigma")?)?;
            relative_entropy(rho, sigma).map_err(num)
        }
        "fidelity" => {
            let rho = resolved.state(arg(task, "rho")?)?;
            let sigma = resolved.state(arg(task, "sigma")?)?;
            fidelity(rho, sigma).map_err(num)
        }
        "sandwiched_renyi" => {
            let rho = resolved.state(arg(task, "rho")?)?;
            let sigma = resolved.state(arg(task, "sigma")?)?;
            sandwiched_renyi(rho, sigma, param(task, "s")?).map_err(num)
        }
        "kosaki_entropy" => {
            let rho = resolved.state(arg(task, "rho")?)?;
            let sigma = resolved.state(arg(task, "sigma")?)?;
            let grid = grid_for(grid_args, 0.5)?;
            kosaki_entropy(rho, sigma, &grid).map_err(num)
        }
        "generalized_fidelity" => {
            let rho = resolved.state(arg(task, "rho")?)?;
            let sigma = resolved.state(arg(task, "sigma")?)?;
            let s = param(task, "s")?;
            let grid = grid_for(grid_args, 0.5)?;
            match task.args.get("algebra") {
                Some(name) => {
                    let alg = resolved.algebra(name)?;
                    generalized_fidelity_in(rho, sigma, s, &grid, alg).map_err(num)
                }
                None => generalized_fidelity(rho, sigma, s, &grid).map_err(num),
            }
        }
        "lp_norm_oracle" => {
            let zeta = resolved.state(arg(task, "zeta")?)?;
            let psi = resolved.state(arg(task, "psi")?)?;
            let q = lp_norm_oracle(zeta, psi, param(task, "p")?).map_err(num)?;
            Ok(DivergenceResult::exact(q))
        }
        "pimsner_popa_index" => {
            let channel = resolved.channel(arg(task, "expectation")?)?;
            let sub = resolved.algebra(arg(task, "subalgebra")?)?;
            let ambient = MatrixAlgebra::full(channel.in_dim());
            let e = ConditionalExpectation::certify(channel.clone(), sub.clone(), &ambient)
                .map_err(num)?;
            let r = pimsner_popa_index(&e).map_err(num)?;
            let mut out = DivergenceResult::exact(r.index);
            out = out
                .with_diag("choi_min_eig_at_index", r.certificate.0)
                .with_diag("choi_min_eig_below_index", r.certificate.1)
                .with_diag("sampler_min_residual", r.sampler_min_residual)
                .with_diag("bisection_steps", r.bisection_history.len() as f64);
            Ok(out)
        }
        "certainty_relation" => {
            let scn = resolved.scenario(arg(task, "scenario")?)?;
            let c = certainty_relation(scn).map_err(num)?;
            let mut out = DivergenceResult {
                value: c.sum,
                lower_bound: c.sum.as_f64(),
                upper_bound: c.sum.as_f64(),
                diagnostics: BTreeMap::new(),
            };
            out = out
                .with_diag("s_m", c.s_m.as_f64())
                .with_diag("s_n_prime", c.s_n_prime.as_f64())
                .with_diag("log_index", c.log_index);
            Ok(out)
        }
        "renyi_certainty" => {
            let scn = resolved.scenario(arg(task, "scenario")?)?;
            let r = renyi_certainty(scn, param(task, "s")?).map_err(num)?;
            let mut out = DivergenceResult {
                value: r.sum,
                lower_bound: r.sum.as_f64(),
                upper_bound: r.bound,
                diagnostics: BTreeMap::new(),
            };
            out = out
                .with_diag("d_m", r.d_m.as_f64())
                .with_diag("d_n_prime", r.d_n_prime.as_f64())
                .with_diag("bound", r.bound);
            Ok(out)
        }
        "fidelity_certainty" => {
            let scn = resolved.scenario(arg(task, "scenario")?)?;
            let f = fidelity_certainty(scn).map_err(num)?;
            let mut out = DivergenceResult::exact(f.product);
            out = out
                .with_diag("f_m", f.f_m)
                .with_diag("f_n_prime", f.f_n_prime)
                .with_diag("floor", f.floor);
            Ok(out)
        }
        "phi_index_bound" => {
            let scn = resolved.scenario(arg(task, "scenario")?)?;
            let s = param(task, "s")?;
            let grid = grid_for(grid_args, 0.5)?;
            let out = phi_index_bound(scn, s, &grid).map_err(num)?;
            let mut res = out.result.clone();
            res = res
                .with_diag("log_index", out.log_index)
                .with_diag("gap", out.gap)
                .with_diag("within_bound", if out.within_bound { 1.0 } else { 0.0 });
            Ok(res)
        }
        other => Err(CliError::user(format!("unknown operation: {other}"))),
    }
}

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

const SWEEP_GROUPS: [(GroupName, usize); 3] = [
    (GroupName::Z2Pauli, 2),
    (GroupName::ZnClock, 3),
    (GroupName::PauliGroup, 2),
];

/// Run a verification suite; returns the CSV and the number of hard
/// assertion failures.
pub fn verify(
    suite: &str,
    seed: u64,
    samples: Option<usize>,
    tol: Option<f64>,
    identity_only: bool,
    grid_args: &GridArgs,
    flags: &str,
) -> Result<(String, usize), CliError> {
    match suite {
        "quadrature_selftest" => {
            let grid = grid_for(grid_args, 0.5)?;
            let tol = tol.unwrap_or(1e-8);
            let mut csv = Csv::new(
                &["lambda", "alpha", "value", "target", "error", "pass"],
                flags,
            );
            let mut failures = 0;
            for &lambda in &[0.5f64, 1.0, 2.0] {
                for &alpha in &[0.25f64, 0.5, 0.75] {
                    let target = std::f64::consts::PI / (std::f64::consts::PI * alpha).sin()
                        * lambda.powf(alpha);
                    let value = grid.power_law_selftest(lambda, alpha);
                    let err = (value - target).abs();
                    let pass = err <= tol;
                    failures += usize::from(!pass);
                    csv.row(&[
                        fmt_f64(lambda),
                        fmt_f64(alpha),
                        fmt_f64(value),
                        fmt_f64(target),
                        fmt_f64(err),
                        pass.to_string(),
                    ]);
                }
            }
            Ok((csv.finish(), failures))
        }
        "kosaki_vs_umegaki" => {
            let grid = grid_for(grid_args, 0.5)?;
            let tol = tol.unwrap_or(1e-4);
            let samples = samples.unwrap_or(50);
            let mut csv = Csv::new(
                &["sample", "dim", "kosaki", "umegaki", "error", "pass"],
                flags,
            );
            let mut failures = 0;
            for i in 0..samples as u64 {
                let dim = 2 + (i % 3) as usize;
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
                let rho = random_density(dim, &mut rng);
                let sigma = random_density(dim, &mut rng);
                let k = kosaki_entropy(&rho, &sigma, &grid)
                    .map_err(CliError::numeric_from)?
                    .value
                    .as_f64();
                let s = relative_entropy(&rho, &sigma)
                    .map_err(CliError::numeric_from)?
                    .value
                    .as_f64();
                let err = (k - s).abs();
                let pass = err <= tol;
                failures += usize::from(!pass);
                csv.row(&[
                    i.to_string(),
                    dim.to_string(),
                    fmt_f64(k),
                    fmt_f64(s),
                    fmt_f64(err),
                    pass.to_string(),
                ]);
            }
            Ok((csv.finish(), failures))
        }
        "dpi" => {
            let hard_tol = tol.unwrap_or(1e-9);
            let samples = samples.unwrap_or(100);
            let opts = DpiOptions {
                identity_only,
                ..DpiOptions::default()
            };
            let mut csv = Csv::new(
                &[
                    "divergence",
                    "sample",
                    "dim",
                    "pre",
                    "post",
                    "violation",
                    "class",
                    "pass",
                ],
                flags,
            );
            let mut failures = 0;
            let kinds = [
                DivergenceKind::RelativeEntropy,
                DivergenceKind::SandwichedRenyi(0.6),
                DivergenceKind::SandwichedRenyi(0.9),
                DivergenceKind::Fidelity,
                DivergenceKind::GeneralizedFidelity(0.75),
            ];
            for kind in kinds {
                let soft = kind.is_soft();
                let n = if soft { samples.min(50) } else { samples };
                let report =
                    dpi_harness_with(kind, n, seed, &opts).map_err(CliError::numeric_from)?;
                for row in &report.rows {
                    let threshold = if soft { report.soft_tol } else { hard_tol };
                    let violated = row.violation > threshold;
                    let pass = !(violated && !soft);
                    failures += usize::from(!pass);
                    csv.row(&[
                        kind.label(),
                        row.sample.to_string(),
                        row.dim.to_string(),
                        fmt_f64(row.pre),
                        fmt_f64(row.post),
                        fmt_f64(row.violation),
                        if soft { "soft".into() } else { "hard".into() },
                        pass.to_string(),
                    ]);
                }
            }
            Ok((csv.finish(), failures))
        }
        "certainty" => {
            let tol = tol.unwrap_or(1e-6);
            let samples = samples.unwrap_or(50);
            let mut csv = Csv::new(
                &[
                    "group",
                    "sample",
                    "check",
                    "value",
                    "reference",
                    "deviation",
                    "pass",
                ],
                flags,
            );
            let mut failures = 0;
            for (group, n) in SWEEP_GROUPS {
                let dim = n * n;
                let base = build_named_orbifold(group, n, &seeded_vector(dim, seed))
                    .map_err(CliError::numeric_from)?;
                for i in 0..samples as u64 {
                    let psi = seeded_vector(dim, seed.wrapping_add(101 * i + 1));
                    let scn = base.with_state(&psi).map_err(CliError::numeric_from)?;
                    let c = certainty_relation(&scn).map_err(CliError::numeric_from)?;
                    let dev = (c.sum.as_f64() - c.log_index).abs();
                    let pass = dev <= tol;
                    failures += usize::from(!pass);
                    csv.row(&[
                        group.label().into(),
                        i.to_string(),
                        "certainty_sum".into(),
                        fmt_f64(c.sum.as_f64()),
                        fmt_f64(c.log_index),
                        fmt_f64(dev),
                        pass.to_string(),
                    ]);
                    let r = renyi_certainty(&scn, 0.75).map_err(CliError::numeric_from)?;
                    let excess = r.sum.as_f64() - r.bound;
                    let pass = excess <= 1e-9;
                    failures += usize::from(!pass);
                    csv.row(&[
                        group.label().into(),
                        i.to_string(),
                        "renyi_bound".into(),
                        fmt_f64(r.sum.as_f64()),
                        fmt_f64(r.bound),
                        fmt_f64(excess),
                        pass.to_string(),
                    ]);
                    let f = fidelity_certainty(&scn).map_err(CliError::numeric_from)?;
                    let short = f.floor - f.product;
                    let pass = short <= 1e-9;
                    failures += usize::from(!pass);
                    csv.row(&[
                        group.label().into(),
                        i.to_string(),
                        "fidelity_floor".into(),
                        fmt_f64(f.product),
                        fmt_f64(f.floor),
                        fmt_f64(short),
                        pass.to_string(),
                    ]);
                }
            }
            Ok((csv.finish(), failures))
        }
        "phi_bounds" => {
            let samples = samples.unwrap_or(20);
            let grid = grid_for(grid_args, 0.5)?;
            let s = 0.75;
            let mut csv = Csv::new(
                &["sample", "dim", "phi", "upper", "floor", "d_s", "pass"],
                flags,
            );
            let mut failures = 0;
            for i in 0..samples as u64 {
                let dim = 2 + (i % 2) as usize;
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
                let rho = random_density(dim, &mut rng);
                let sigma = random_density(dim, &mut rng);
                let f = fidelity(&rho, &sigma)
                    .map_err(CliError::numeric_from)?
                    .value
                    .as_f64();
                let phi = generalized_fidelity(&rho, &sigma, s, &grid)
                    .map_err(CliError::numeric_from)?
                    .value
                    .as_f64();
                let d = sandwiched_renyi(&rho, &sigma, s)
                    .map_err(CliError::numeric_from)?
                    .value
                    .as_f64();
                let upper = -(s / (1.0 - s)) * (f * f).ln();
                let floor = -(f * f).ln() - 0.05;
                let pass = phi <= upper + 1e-9 && phi >= floor && d <= upper + 1e-9;
                failures += usize::from(!pass);
                csv.row(&[
                    i.to_string(),
                    dim.to_string(),
                    fmt_f64(phi),
                    fmt_f64(upper),
                    fmt_f64(floor),
                    fmt_f64(d),
                    pass.to_string(),
                ]);
            }
            Ok((csv.finish(), failures))
        }
        other => Err(CliError::user(format!("unknown suite: {other}"))),
    }
}

fn parse_group(name: &str) -> Result<Vec<(Option<GroupName>, usize)>, CliError> {
    Ok(match name {
        "all" => vec![
            (Some(GroupName::Z2Pauli), 2),
            (Some(GroupName::ZnClock), 3),
            (Some(GroupName::PauliGroup), 2),
        ],
        "trivial" => vec![(None, 2)],
        other => {
            let g: GroupName = other
                .parse()
                .map_err(|_| CliError::user(format!("unknown group name: {other}")))?;
            let n = match g {
                GroupName::ZnClock => 3,
                _ => 2,
            };
            vec![(Some(g), n)]
        }
    })
}

/// Run a named experiment and return its CSV.
#[allow(clippy::too_many_arguments)]
pub fn experiment(
    name: &str,
    s_values: &[f64],
    n_override: Option<usize>,
    group: &str,
    seed: u64,
    samples: Option<usize>,
    grid_args: &GridArgs,
    flags: &str,
) -> Result<String, CliError> {
    let s_values = if s_values.is_empty() {
        vec![0.6, 0.75, 0.9]
    } else {
        s_values.to_vec()
    };
    match name {
        "diagonal_closed_form" => {
            let grid = grid_for(grid_args, 0.5)?;
            let mut csv = Csv::new(
                &[
                    "dim",
                    "family",
                    "s",
                    "phi_hat",
                    "closed_form",
                    "piecewise_exact",
                    "reference",
                    "deviation",
                ],
                flags,
            );
            for dim in 2..=4usize {
                for &s in &s_values {
                    // Near pairs where the closed form is exact, and one
                    // separated pair per dimension where the kink correction
                    // is the honest reference.
                    let delta = match s {
                        x if x >= 0.85 => 0.0025,
                        x if x >= 0.7 => 0.008,
                        _ => 0.02,
                    };
                    for (family, d) in [("near", delta), ("separated", 0.15)] {
                        let base = 1.0 / dim as f64;
                        let mut p = vec![base; dim];
                        let mut q = vec![base; dim];
                        p[0] -= d * base / 0.5;
                        p[dim - 1] += d * base / 0.5;
                        q[0] += d * base / 0.5;
                        q[dim - 1] -= d * base / 0.5;
                        let rho = vnd_core::algebra::State::diagonal(&p)
                            .map_err(CliError::numeric_from)?;
                        let sigma = vnd_core::algebra::State::diagonal(&q)
                            .map_err(CliError::numeric_from)?;
                        let phi = generalized_fidelity(&rho, &sigma, s, &grid)
                            .map_err(CliError::numeric_from)?
                            .value
                            .as_f64();
                        let closed =
                            diagonal_phi_closed_form(&p, &q, s).map_err(CliError::numeric_from)?;
                        let exact =
                            diagonal_phi_exact(&p, &q, s).map_err(CliError::numeric_from)?;
                        let reference = if family == "near" { closed } else { exact };
                        csv.row(&[
                            dim.to_string(),
                            family.into(),
                            fmt_f64(s),
                            fmt_f64(phi),
                            fmt_f64(closed),
                            fmt_f64(exact),
                            fmt_f64(reference),
                            fmt_f64((phi - reference).abs()),
                        ]);
                    }
                }
            }
            Ok(csv.finish())
        }
        "bell_orbifold" => {
            let grid = grid_for(grid_args, 0.5)?;
            let mut csv = Csv::new(
                &[
                    "group",
                    "n",
                    "group_order",
                    "s",
                    "d_s",
                    "phi_hat",
                    "fidelity",
                    "reference",
                    "dev_d",
                    "dev_phi",
                ],
                flags,
            );
            for (g, default_n) in parse_group(group)? {
                let g =
                    g.ok_or_else(|| CliError::user("bell_orbifold needs a nontrivial group"))?;
                let n = n_override.unwrap_or(default_n);
                let rep = bell_orbifold_experiment(n, g, &s_values, &grid, None)
                    .map_err(CliError::numeric_from)?;
                let log_g = (rep.group_order as f64).ln();
                for row in &rep.rows {
                    csv.row(&[
                        g.label().into(),
                        n.to_string(),
                        rep.group_order.to_string(),
                        fmt_f64(row.s),
                        fmt_f64(row.d_s),
                        fmt_f64(row.phi_estimate),
                        fmt_f64(row.fidelity),
                        fmt_f64(log_g),
                        fmt_f64((row.d_s - log_g).abs()),
                        fmt_f64((row.phi_estimate - log_g).abs()),
                    ]);
                }
            }
            Ok(csv.finish())
        }
        "certainty_sweep" => {
            let samples = samples.unwrap_or(20);
            let mut csv = Csv::new(
                &[
                    "group",
                    "sample",
                    "s_m",
                    "s_n_prime",
                    "sum",
                    "log_index",
                    "deviation",
                ],
                flags,
            );
            for (g, default_n) in parse_group(group)? {
                let n = n_override.unwrap_or(default_n);
                let dim = n * n;
                let base = match g {
                    Some(g) => build_named_orbifold(g, n, &seeded_vector(dim, seed))
                        .map_err(CliError::numeric_from)?,
                    None => build_orbifold_inclusion(
                        n,
                        &[ComplexMatrix::identity(n, n)],
                        &seeded_vector(dim, seed),
                    )
                    .map_err(CliError::numeric_from)?,
                };
                let label = g.map(|g| g.label().to_string()).unwrap_or("trivial".into());
                for i in 0..samples as u64 {
                    let psi = seeded_vector(dim, seed.wrapping_add(101 * i + 1));
                    let scn = base.with_state(&psi).map_err(CliError::numeric_from)?;
                    let c = certainty_relation(&scn).map_err(CliError::numeric_from)?;
                    csv.row(&[
                        label.clone(),
                        i.to_string(),
                        fmt_f64(c.s_m.as_f64()),
                        fmt_f64(c.s_n_prime.as_f64()),
                        fmt_f64(c.sum.as_f64()),
                        fmt_f64(c.log_index),
                        fmt_f64((c.sum.as_f64() - c.log_index).abs()),
                    ]);
                }
            }
            Ok(csv.finish())
        }
        other => Err(CliError::user(format!("unknown experiment: {other}"))),
    }
}
