//! Isoperimetric scans and the closed-form scaling of `λ₂` on disks.

use std::f64::consts::PI;

use steklov_core::geometry::StarDomain;
use steklov_core::iso::{iso_scan, lambda2_of, FamilySpec};
use steklov_core::solver::SolverParams;

#[test]
fn disk_lambda2_scales_inversely_with_radius() {
    // u = x_l on B_R: ∫|∇u|² = πR², ∮u² = πR³, D²u = 0, so λ₂ = τ/R.
    let params = SolverParams::default();
    for area in [PI / 2.0, PI, 2.0 * PI, 4.0 * PI] {
        let r = (area / PI).sqrt();
        for tau in [0.5, 1.0, 5.0] {
            let l2 = lambda2_of(&StarDomain::disk(r).unwrap(), tau, &params).unwrap();
            assert!((l2 - tau / r).abs() < 1e-8 * tau / r, "A={area} τ={tau}: {l2}");
        }
    }
}

#[test]
fn perturbed_disk_lies_below_the_ball() {
    let d = StarDomain::cosine_perturbation(1.0, 2, 0.1)
        .unwrap()
        .rescale_to_area(PI)
        .unwrap();
    let l2 = lambda2_of(&d, 1.0, &SolverParams::default()).unwrap();
    assert!(l2 < 1.0 - 1e-4, "{l2}");
}

#[test]
fn default_scan_at_unit_tension() {
    let params = SolverParams::default();
    for family in FamilySpec::default_families(1.0) {
        let scan = iso_scan(&family, &params).unwrap();
        for row in &scan.rows {
            println!(
                "{} {:.2} λ₂ {:.12} margin {:.3e}",
                row.family, row.parameter, row.lambda2, row.margin
            );
        }
        assert!(scan.verdict(), "{scan:?}");
        let ball = scan.rows.iter().find(|r| r.is_ball).unwrap();
        assert!(ball.margin.abs() <= 1e-8);
        let margins: Vec<f64> = scan.rows.iter().map(|r| r.margin).collect();
        if margins.windows(2).any(|w| w[1] <= w[0]) {
            println!("{}: margins not monotone in the parameter", family.name());
        }
    }
    let ellipse = iso_scan(&FamilySpec::ellipse_like(vec![1.2], 1.0), &params).unwrap();
    assert!(ellipse.rows[0].margin > 0.0);
}
