//! Acceptance criteria 1–10. Runs every criterion, prints one PASS/FAIL line
//! each, and exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use steklov_core::ball::{
    eigenvalue_of_order, radial_profile, rayleigh_quotient, sorted_spectrum, verify_order_monotonicity,
};
use steklov_core::concentration::{convergence_sweep, MeshPolicy};
use steklov_core::geometry::{boundary_geometry, StarDomain};
use steklov_core::iso::{
    inverse_sum_bound, iso_scan, lambda2_of, weighted_boundary_inequality_check, FamilySpec, WeightFunction,
};
use steklov_core::shape::{
    criticality_residual, fd_derivative, hadamard_derivative, PerturbationField, SymmetricFunctionSpec,
};
use steklov_core::solver::{solve_domain, SolverParams};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ball_first_positive() -> Outcome {
    let mut worst = 0.0f64;
    for dim in [2, 3, 4] {
        for tau in [0.1, 1.0, 5.0, 20.0] {
            let s = sorted_spectrum(dim, tau, dim + 2).map_err(|e| e.to_string())?;
            let values = s.values();
            let orders = s.orders();
            // λ₁ = 0, then λ₂ = … = λ_{N+1} = τ, then a larger value
            for j in 1..=dim {
                worst = worst.max(rel(values[j], tau));
                ensure(orders[j] == 1, || {
                    format!("N={dim} τ={tau}: index {} has order {}", j + 1, orders[j])
                })?;
            }
            ensure(values[dim + 1] > tau * (1.0 + 1e-10), || {
                format!("N={dim} τ={tau}: multiplicity exceeds N")
            })?;
        }
    }
    ensure(worst <= 1e-10, || format!("max rel error {worst:.2e}"))?;
    Ok(format!("max rel error {worst:.2e}"))
}

fn formula_self_consistency() -> Outcome {
    let mut worst = 0.0f64;
    for l in [2, 3, 4] {
        for tau in [0.5, 1.0, 5.0] {
            let mode = radial_profile(l, 2, tau).map_err(|e| e.to_string())?;
            let closed = eigenvalue_of_order(l, 2, tau).map_err(|e| e.to_string())?;
            let rq = rayleigh_quotient(
                |r| {
                    let v = mode.radial(r);
                    (v[0], v[1], v[2])
                },
                l,
                2,
                tau,
            )
            .map_err(|e| e.to_string())?;
            worst = worst.max(rel(closed, rq));
        }
    }
    ensure(worst <= 1e-8, || format!("max rel error {worst:.2e}"))?;
    Ok(format!("max rel error {worst:.2e}"))
}

fn solver_vs_analytic() -> Outcome {
    let params = SolverParams::default();
    let mut worst = 0.0f64;
    for tau in [0.5, 1.0, 5.0] {
        let s = solve_domain(&StarDomain::disk(1.0).unwrap(), tau, &params).map_err(|e| e.to_string())?;
        let exact = sorted_spectrum(2, tau, 9).map_err(|e| e.to_string())?.values();
        for j in 2..=9 {
            worst = worst.max(rel(s.solution.eigenvalue(j), exact[j - 1]));
        }
    }
    ensure(worst <= 1e-8, || format!("max rel error {worst:.2e}"))?;
    Ok(format!("k_max=10, max rel error {worst:.2e}"))
}

fn order_monotonicity() -> Outcome {
    for dim in [2, 3, 4] {
        for tau in [0.1, 1.0, 5.0, 20.0] {
            let r = verify_order_monotonicity(dim, tau, 10).map_err(|e| e.to_string())?;
            ensure(r.passed, || format!("N={dim} τ={tau}: {:?}", r.values))?;
        }
    }
    Ok("N ∈ {2,3,4}, τ ∈ {0.1,1,5,20}, l ≤ 10".into())
}

fn hadamard_validation() -> Outcome {
    let params = SolverParams::default();
    let domain = StarDomain::cosine_perturbation(1.0, 2, 0.05)
        .and_then(|d| d.rescale_to_area(PI))
        .map_err(|e| e.to_string())?;
    let solve = solve_domain(&domain, 1.0, &params).map_err(|e| e.to_string())?;
    let spec = SymmetricFunctionSpec::new(vec![2], 1).map_err(|e| e.to_string())?;
    let field = PerturbationField::cos(2);
    let analytic = hadamard_derivative(&solve, &spec, &field, 512).map_err(|e| e.to_string())?;
    let fd = fd_derivative(&domain, 1.0, &params, &spec, &field, &[2e-3, 1e-3, 5e-4]).map_err(|e| e.to_string())?;
    let err = rel(analytic, fd.extrapolated);
    let step_errors: Vec<f64> = fd.estimates.iter().map(|e| (e - analytic).abs()).collect();
    // halving t divides the error by about four
    let ratios: Vec<f64> = step_errors.windows(2).map(|w| w[0] / w[1]).collect();
    let detail = format!(
        "analytic {analytic:.10e}, fd {:.10e}, rel {err:.2e}, error ratios {ratios:.2?}",
        fd.extrapolated
    );
    ensure(err <= 1e-3, || detail.clone())?;
    ensure(ratios.iter().all(|&q| (3.0..5.0).contains(&q)), || detail.clone())?;
    Ok(detail)
}

fn ball_criticality() -> Outcome {
    let params = SolverParams::default();
    let solve = solve_domain(&StarDomain::disk(1.0).unwrap(), 1.0, &params).map_err(|e| e.to_string())?;
    let cluster = solve.solution.cluster_of(2).ok_or("no cluster at index 2")?.to_vec();
    let report = criticality_residual(&solve, &cluster, 512).map_err(|e| e.to_string())?;
    ensure(report.residual <= 1e-7, || format!("residual {:.2e}", report.residual))?;
    let mut worst = 0.0f64;
    for s in 1..=cluster.len() {
        let spec = SymmetricFunctionSpec::new(cluster.clone(), s).map_err(|e| e.to_string())?;
        let bound = 1e-7 * report.lambda_f.powi(s as i32);
        for k in 1..=4 {
            for field in [PerturbationField::cos(k), PerturbationField::sin(k)] {
                let d = hadamard_derivative(&solve, &spec, &field, 512).map_err(|e| e.to_string())?;
                ensure(d.abs() <= bound, || format!("s={s} {field}: {d:.3e}"))?;
                worst = worst.max(d.abs());
            }
        }
    }
    Ok(format!(
        "F={cluster:?}, max |dΛ| {worst:.2e}, residual {:.2e}",
        report.residual
    ))
}

fn concentration_convergence() -> Outcome {
    let eps = [0.2, 0.1, 0.05, 0.025];
    let rows = convergence_sweep(1.0, &eps, &[1, 2], MeshPolicy::default()).map_err(|e| e.to_string())?;
    let first: Vec<f64> = rows.iter().filter(|r| r.j == 1).map(|r| r.lambda_eps.abs()).collect();
    let second: Vec<f64> = rows.iter().filter(|r| r.j == 2).map(|r| r.abs_error).collect();
    let detail = format!(
        "|λ₂(ε) - 1| = {second:.6?}, max |λ₁(ε)| {:.1e}",
        first.iter().fold(0.0f64, |a, &b| a.max(b))
    );
    ensure(first.iter().all(|&v| v <= 1e-8), || detail.clone())?;
    ensure(second.windows(2).all(|w| w[1] < w[0]), || {
        format!("not decreasing: {detail}")
    })?;
    ensure(second[3] < 0.02, || {
        format!("{detail}; at ε = 0.025 the error exceeds 0.02")
    })?;
    Ok(detail)
}

fn isoperimetric_scan() -> Outcome {
    let params = SolverParams::default();
    let mut min_margin = f64::INFINITY;
    let mut members = 0;
    for tau in [0.5, 1.0, 5.0] {
        for family in FamilySpec::default_families(tau) {
            let scan = iso_scan(&family, &params).map_err(|e| e.to_string())?;
            ensure(scan.inequality_holds, || {
                format!("{} τ={tau}: negative margin", family.name())
            })?;
            ensure(scan.equality_only_at_ball, || {
                format!("{} τ={tau}: equality off the ball", family.name())
            })?;
            members += scan.rows.len();
            for r in scan.rows.iter().filter(|r| !r.is_ball) {
                min_margin = min_margin.min(r.margin);
            }
        }
    }
    Ok(format!("{members} members, smallest non-ball margin {min_margin:.3e}"))
}

fn inverse_sum_chain() -> Outcome {
    let params = SolverParams::default();
    let mut worst_gap = f64::INFINITY;
    let mut disk_gap = 0.0f64;
    for tau in [0.5, 1.0, 5.0] {
        for family in FamilySpec::default_families(tau) {
            for m in family.members().map_err(|e| e.to_string())? {
                let b = inverse_sum_bound(&m.domain, tau, &params).map_err(|e| e.to_string())?;
                ensure(b.holds(), || {
                    format!("{} {} τ={tau}: gap {:.3e}", family.name(), m.parameter, b.gap)
                })?;
                if m.is_ball {
                    disk_gap = disk_gap.max(b.gap.abs());
                } else {
                    worst_gap = worst_gap.min(b.gap);
                }
                for w in WeightFunction::catalog() {
                    let c = weighted_boundary_inequality_check(&m.domain, w).map_err(|e| e.to_string())?;
                    ensure(c.pass, || format!("{} {} f={w}: {:?}", family.name(), m.parameter, c))?;
                }
            }
        }
    }
    ensure(disk_gap <= 1e-8, || format!("disk gap {disk_gap:.2e}"))?;
    Ok(format!("disk gap {disk_gap:.1e}, smallest other gap {worst_gap:.3e}"))
}

fn scaling_oracle() -> Outcome {
    let params = SolverParams::default();
    let mut worst = 0.0f64;
    for radius in [0.5, 1.0, 2.0] {
        for tau in [0.5, 1.0, 5.0] {
            let disk = StarDomain::disk(radius).unwrap();
            // u = x: D²u = 0, ∫|∇u|² = |Ω|, so λ = τ|Ω| / ∮x² dσ
            let quad = boundary_geometry(&disk, 256).map_err(|e| e.to_string())?;
            let analytic = tau * disk.area() / quad.integrate(quad.points.iter().map(|p| p[0] * p[0]));
            let solved = lambda2_of(&disk, tau, &params).map_err(|e| e.to_string())?;
            let expected = tau / radius;
            worst = worst.max(rel(analytic, expected)).max(rel(solved, expected));
        }
    }
    ensure(worst <= 1e-8, || format!("max rel error {worst:.2e}"))?;
    Ok(format!("max rel error {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "ball first positive eigenvalue",
            Duration::from_secs(1),
            ball_first_positive,
        ),
        (
            "closed form equals Rayleigh quotient",
            Duration::from_secs(5),
            formula_self_consistency,
        ),
        (
            "solver matches the disk spectrum",
            Duration::from_secs(10),
            solver_vs_analytic,
        ),
        ("order monotonicity", Duration::MAX, order_monotonicity),
        (
            "Hadamard derivative vs finite differences",
            Duration::from_secs(30),
            hadamard_validation,
        ),
        ("ball criticality", Duration::from_secs(30), ball_criticality),
        (
            "concentration convergence",
            Duration::from_secs(60),
            concentration_convergence,
        ),
        ("isoperimetric scan", Duration::from_secs(120), isoperimetric_scan),
        (
            "inverse-sum and weighted boundary chain",
            Duration::from_secs(30),
            inverse_sum_chain,
        ),
        ("disk scaling oracle", Duration::MAX, scaling_oracle),
    ];
    let mut failures = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:.0?}")),
            other => other,
        };
        let (verdict, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if outcome.is_err() {
            failures += 1;
        }
        println!("criterion {:>2}: {verdict} {name} ({elapsed:.2?}): {detail}", i + 1);
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
