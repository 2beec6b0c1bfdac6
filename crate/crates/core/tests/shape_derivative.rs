//! Shape derivatives checked against finite differences of re-solved
//! eigenvalues along the realized perturbation family.

use std::f64::consts::PI;

use steklov_core::geometry::StarDomain;
use steklov_core::shape::{
    criticality_residual, fd_derivative, hadamard_derivative, volume_preserving_projection, PerturbationField,
    SymmetricFunctionSpec,
};
use steklov_core::solver::{solve_domain, SolverParams};

const STEPS: [f64; 3] = [2e-3, 1e-3, 5e-4];

/// Test domains, each with fields whose derivative is not forced to vanish
/// by the domain's symmetry.
fn domains() -> Vec<(&'static str, StarDomain, [&'static str; 3])> {
    vec![
        (
            "1+0.05cos2",
            StarDomain::cosine_perturbation(1.0, 2, 0.05)
                .unwrap()
                .rescale_to_area(PI)
                .unwrap(),
            ["cos2", "cos4+0.5*cos2", "1+0.3*cos2"],
        ),
        (
            "1+0.1cos3",
            StarDomain::cosine_perturbation(1.0, 3, 0.1)
                .unwrap()
                .rescale_to_area(PI)
                .unwrap(),
            ["cos3", "cos6+0.5*cos3", "1+0.3*cos3"],
        ),
        (
            "mixed",
            StarDomain::new(1.0, vec![0.0, 0.04], vec![0.0, 0.0, 0.03], [0.0, 0.0])
                .unwrap()
                .center_boundary_centroid(512)
                .unwrap(),
            ["cos2", "sin3+0.5*cos1", "1+0.3*sin1+0.2*cos4"],
        ),
    ]
}

fn fields(domain: &StarDomain, specs: &[&str]) -> Vec<PerturbationField> {
    specs
        .iter()
        .map(|s| volume_preserving_projection(&s.parse().unwrap(), domain).unwrap())
        .collect()
}

#[test]
fn derivative_matches_finite_differences() {
    let params = SolverParams::default();
    let tau = 1.0;
    for (name, domain, field_specs) in domains() {
        let solve = solve_domain(&domain, tau, &params).unwrap();
        let spec = SymmetricFunctionSpec::cluster_containing(&solve.solution, 2, 1).unwrap();
        for field in fields(&domain, &field_specs) {
            let analytic = hadamard_derivative(&solve, &spec, &field, 512).unwrap();
            let fd = fd_derivative(&domain, tau, &params, &spec, &field, &STEPS).unwrap();
            let rel = (analytic - fd.extrapolated).abs() / (fd.extrapolated.abs() + 1e-12);
            println!(
                "{name} F={:?} g={field}: analytic {analytic:.10e} fd {:.10e} rel {rel:.2e} order {:?}",
                spec.indices, fd.extrapolated, fd.observed_order
            );
            assert!(rel <= 1e-3, "{name} {field}: {analytic} vs {}", fd.extrapolated);
            // per-step errors shrink like t²
            let errs: Vec<f64> = fd.estimates.iter().map(|e| (e - analytic).abs()).collect();
            assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        }
    }
}

#[test]
fn second_degree_and_unprojected_fields() {
    let params = SolverParams::default();
    // product λ₂λ₃ on a 3-fold symmetric domain where the pair stays degenerate
    let domain = StarDomain::cosine_perturbation(1.0, 3, 0.1)
        .unwrap()
        .rescale_to_area(PI)
        .unwrap();
    let solve = solve_domain(&domain, 2.0, &params).unwrap();
    let spec = SymmetricFunctionSpec::cluster_containing(&solve.solution, 2, 2).unwrap();
    let field: PerturbationField = "cos3".parse().unwrap();
    let analytic = hadamard_derivative(&solve, &spec, &field, 512).unwrap();
    let fd = fd_derivative(&domain, 2.0, &params, &spec, &field, &STEPS).unwrap();
    assert!(
        (analytic - fd.extrapolated).abs() <= 1e-3 * fd.extrapolated.abs(),
        "{analytic} vs {fd:?}"
    );

    // uniform growth of the disk is not volume preserving; the formula still holds
    let disk = StarDomain::disk(1.0).unwrap();
    let solve = solve_domain(&disk, 1.0, &params).unwrap();
    let spec = SymmetricFunctionSpec::cluster_containing(&solve.solution, 2, 1).unwrap();
    let one = PerturbationField::constant(1.0);
    let analytic = hadamard_derivative(&solve, &spec, &one, 512).unwrap();
    let fd = fd_derivative(&disk, 1.0, &params, &spec, &one, &STEPS).unwrap();
    assert!(analytic.abs() > 1.0);
    assert!(
        (analytic - fd.extrapolated).abs() <= 1e-3 * fd.extrapolated.abs(),
        "{analytic} vs {fd:?}"
    );
}

#[test]
fn disk_fd_vanishes_for_volume_preserving_field() {
    let params = SolverParams::default();
    let disk = StarDomain::disk(1.0).unwrap();
    let spec = SymmetricFunctionSpec::new(vec![2, 3], 2).unwrap();
    let fd = fd_derivative(&disk, 1.0, &params, &spec, &PerturbationField::cos(2), &STEPS).unwrap();
    assert!(fd.extrapolated.abs() <= 1e-6, "{fd:?}");
    assert!(fd.estimates.iter().all(|e| e.abs() <= 1e-6));
}

#[test]
fn translations_do_not_change_eigenvalues() {
    let params = SolverParams::default();
    for (name, domain, _) in domains() {
        let solve = solve_domain(&domain, 1.0, &params).unwrap();
        let spec = SymmetricFunctionSpec::cluster_containing(&solve.solution, 2, 1).unwrap();
        for dir in [[1.0, 0.0], [0.0, 1.0]] {
            let g = PerturbationField::translation(&domain, dir);
            let d = hadamard_derivative(&solve, &spec, &g, 512).unwrap();
            assert!(d.abs() < 1e-7, "{name} {dir:?}: {d}");
        }
    }
}

#[test]
fn derivative_bounded_by_criticality_deviation() {
    let params = SolverParams::default();
    for (name, domain, field_specs) in domains() {
        let solve = solve_domain(&domain, 1.0, &params).unwrap();
        let cluster = solve.solution.cluster_of(2).unwrap().to_vec();
        let report = criticality_residual(&solve, &cluster, 512).unwrap();
        for field in fields(&domain, &field_specs) {
            let norm = field.boundary_norm(&domain, 512).unwrap();
            for s in 1..=cluster.len() {
                let spec = SymmetricFunctionSpec::new(cluster.clone(), s).unwrap();
                let d = hadamard_derivative(&solve, &spec, &field, 512).unwrap();
                let bound = report.deviation * norm * report.lambda_f.powi(s as i32 - 1) * spec.multiplicity_factor();
                assert!(d.abs() <= bound + 1e-9, "{name} {field} s={s}: {d} > {bound}");
            }
        }
    }
}

#[test]
fn non_critical_domain_has_large_residual() {
    let params = SolverParams::default();
    let disk = solve_domain(&StarDomain::disk(1.0).unwrap(), 1.0, &params).unwrap();
    let disk_res = criticality_residual(&disk, &[2, 3], 512).unwrap().residual;
    let d = StarDomain::cosine_perturbation(1.0, 3, 0.1)
        .unwrap()
        .rescale_to_area(PI)
        .unwrap();
    let solve = solve_domain(&d, 1.0, &params).unwrap();
    let cluster = solve.solution.cluster_of(2).unwrap().to_vec();
    let res = criticality_residual(&solve, &cluster, 512).unwrap().residual;
    assert!(res > 1e-3 && res > 100.0 * disk_res, "{res} vs disk {disk_res}");
}
