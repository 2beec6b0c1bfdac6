//! One function per subcommand. Each returns both a table (for CSV) and a
//! JSON document, and names its default format.

use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};
use steklov_core::ball::sorted_spectrum;
use steklov_core::concentration::{convergence_sweep, empirical_rates, MeshPolicy};
use steklov_core::geometry::{StarDomain, StarDomainSpec};
use steklov_core::iso::{inverse_sum_bound, iso_scan, weighted_boundary_inequality_check, FamilySpec, WeightFunction};
use steklov_core::shape::{
    criticality_residual, fd_derivative, hadamard_derivative, volume_preserving_projection, PerturbationField,
    SymmetricFunctionSpec,
};
use steklov_core::solver::{solve_domain, DomainSolve};

use crate::args::*;
use crate::error::CliError;
use crate::output::{Cell, Format, Table};

pub struct Report {
    pub table: Table,
    pub json: Value,
    pub default_format: Format,
}

fn verdict(pass: bool) -> Cell {
    Cell::from(if pass { "PASS" } else { "FAIL" })
}

fn joined(indices: &[usize]) -> String {
    indices.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

fn domain_json(domain: &StarDomain) -> Value {
    serde_json::to_value(StarDomainSpec::from(domain.clone())).expect("domain spec serializes")
}

pub fn ball_spectrum(a: &BallSpectrumArgs) -> Result<Report, CliError> {
    if a.count == 0 {
        return Err(CliError::Validation("count must be at least 1".into()));
    }
    let spectrum = sorted_spectrum(a.dim, a.tau, a.count)?;
    let mut table = Table::new(&["j", "eigenvalue", "order"]);
    let mut rows = Vec::new();
    for (j, value, l) in spectrum.rows().take(a.count) {
        table.push(vec![j.into(), value.into(), l.into()]);
        rows.push(json!({"j": j, "eigenvalue": value, "order": l}));
    }
    Ok(Report {
        table,
        json: json!({"dim": a.dim, "tau": a.tau, "rows": rows}),
        default_format: Format::Csv,
    })
}

pub fn solve(a: &SolveArgs, base: Option<&Path>) -> Result<Report, CliError> {
    let domain = a.domain.load(base)?;
    let params = a.solver.params()?;
    let s = solve_domain(&domain, a.tau, &params)?;
    let sol = &s.solution;
    let count = a.count.unwrap_or(sol.len()).min(sol.len());
    if let Some(j) = a.trace {
        return trace(&s, j, params.quad.n_boundary);
    }
    let mut table = Table::new(&["j", "eigenvalue", "cluster"]);
    for j in 1..=count {
        let cluster = sol.cluster_of(j).map(joined).unwrap_or_default();
        table.push(vec![j.into(), sol.eigenvalue(j).into(), cluster.into()]);
    }
    let clusters: Vec<&Vec<usize>> = sol.clusters.iter().filter(|c| c[0] <= count).collect();
    Ok(Report {
        table,
        json: json!({
            "domain": domain_json(&domain),
            "tau": a.tau,
            "k_max": params.k_max,
            "eigenvalues": &sol.eigenvalues[..count],
            "clusters": clusters,
            "diagnostics": sol.diagnostics,
        }),
        default_format: Format::Json,
    })
}

fn trace(s: &DomainSolve, j: usize, n_boundary: usize) -> Result<Report, CliError> {
    if j == 0 || j > s.solution.len() {
        return Err(CliError::Validation(format!(
            "trace index {j} outside 1..={}",
            s.solution.len()
        )));
    }
    let data = s.boundary_data(&[j], n_boundary)?;
    let points = data.trace(j)?;
    let q = &data.quadrature;
    let mut table = Table::new(&["theta", "x", "y", "value", "normal_derivative"]);
    for (i, p) in points.iter().enumerate() {
        table.push(vec![
            q.thetas[i].into(),
            q.points[i][0].into(),
            q.points[i][1].into(),
            p.value.into(),
            p.normal_derivative.into(),
        ]);
    }
    Ok(Report {
        table,
        json: json!({
            "j": j,
            "eigenvalue": s.solution.eigenvalue(j),
            "theta": q.thetas,
            "x": q.points.iter().map(|p| p[0]).collect::<Vec<_>>(),
            "y": q.points.iter().map(|p| p[1]).collect::<Vec<_>>(),
            "value": points.iter().map(|p| p.value).collect::<Vec<_>>(),
            "normal_derivative": points.iter().map(|p| p.normal_derivative).collect::<Vec<_>>(),
        }),
        default_format: Format::Csv,
    })
}

fn select_indices(s: &DomainSolve, sel: &IndexSelection) -> Result<Vec<usize>, CliError> {
    match sel {
        IndexSelection::Auto => s
            .solution
            .cluster_of(2)
            .map(<[usize]>::to_vec)
            .ok_or_else(|| CliError::Numerical("fewer than two eigenvalues survive filtering".into())),
        IndexSelection::Explicit(v) => Ok(v.clone()),
    }
}

pub fn shape_derivative(a: &ShapeDerivativeArgs, base: Option<&Path>) -> Result<Report, CliError> {
    let domain = a.domain.load(base)?;
    let params = a.solver.params()?;
    let mut field: PerturbationField = a.field.parse()?;
    if a.project {
        field = volume_preserving_projection(&field, &domain)?;
    }
    let s = solve_domain(&domain, a.tau, &params)?;
    let indices = select_indices(&s, &a.indices)?;
    let spec = SymmetricFunctionSpec::new(indices, a.s)?;
    spec.validate(&s.solution.eigenvalues)?;
    let n = params.quad.n_boundary;
    let hadamard = hadamard_derivative(&s, &spec, &field, n)?;
    let report = criticality_residual(&s, &spec.indices, n)?;
    let fd = if a.validate_fd {
        Some(fd_derivative(&domain, a.tau, &params, &spec, &field, &a.fd_steps)?)
    } else {
        None
    };
    let rel = fd
        .as_ref()
        .map(|f| (hadamard - f.extrapolated).abs() / f.extrapolated.abs().max(1e-300));

    let mut table = Table::new(&[
        "F",
        "s",
        "field",
        "lambda_f",
        "hadamard",
        "residual",
        "fd_extrapolated",
        "fd_rel_error",
        "fd_observed_order",
    ]);
    table.push(vec![
        joined(&spec.indices).into(),
        spec.s.into(),
        field.to_string().into(),
        report.lambda_f.into(),
        hadamard.into(),
        report.residual.into(),
        fd.as_ref().map(|f| f.extrapolated).into(),
        rel.into(),
        fd.as_ref().and_then(|f| f.observed_order).into(),
    ]);
    Ok(Report {
        table,
        json: json!({
            "domain": domain_json(&domain),
            "tau": a.tau,
            "F": spec.indices,
            "s": spec.s,
            "field": field.to_string(),
            "lambda_f": report.lambda_f,
            "hadamard": hadamard,
            "residual": report.residual,
            "fd_steps": fd.as_ref().map(|f| f.steps.clone()),
            "fd_estimates": fd.as_ref().map(|f| f.estimates.clone()),
            "fd_extrapolated": fd.as_ref().map(|f| f.extrapolated),
            "fd_rel_error": rel,
            "fd_observed_order": fd.as_ref().and_then(|f| f.observed_order),
        }),
        default_format: Format::Json,
    })
}

pub fn criticality(a: &CriticalityArgs, base: Option<&Path>) -> Result<Report, CliError> {
    let domain = a.domain.load(base)?;
    let params = a.solver.params()?;
    let s = solve_domain(&domain, a.tau, &params)?;
    let indices = select_indices(&s, &a.indices)?;
    let r = criticality_residual(&s, &indices, params.quad.n_boundary)?;
    let mut table = Table::new(&["F", "lambda_f", "c_best", "deviation", "residual"]);
    table.push(vec![
        joined(&indices).into(),
        r.lambda_f.into(),
        r.c_best.into(),
        r.deviation.into(),
        r.residual.into(),
    ]);
    Ok(Report {
        table,
        json: json!({
            "domain": domain_json(&domain),
            "tau": a.tau,
            "F": indices,
            "lambda_f": r.lambda_f,
            "c_best": r.c_best,
            "deviation": r.deviation,
            "residual": r.residual,
        }),
        default_format: Format::Json,
    })
}

pub fn concentration(a: &ConcentrationArgs) -> Result<Report, CliError> {
    if a.modes == 0 {
        return Err(CliError::Validation("modes must be at least 1".into()));
    }
    let policy = MeshPolicy {
        bulk_elements: a.bulk_elements,
        layer_elements: a.layer_elements,
        grading: a.grading,
    };
    let js: Vec<usize> = (1..=a.modes).collect();
    let rows = convergence_sweep(a.tau, &a.eps, &js, policy)?;
    let rates = empirical_rates(&rows);
    let mut table = Table::new(&["eps", "j", "lambda_eps", "lambda_limit", "abs_error", "rate"]);
    let mut out = Vec::new();
    for (r, rate) in rows.iter().zip(&rates) {
        table.push(vec![
            r.eps.into(),
            r.j.into(),
            r.lambda_eps.into(),
            r.lambda_limit.into(),
            r.abs_error.into(),
            (*rate).into(),
        ]);
        out.push(json!({
            "eps": r.eps,
            "j": r.j,
            "lambda_eps": r.lambda_eps,
            "lambda_limit": r.lambda_limit,
            "abs_error": r.abs_error,
            "rate": rate,
        }));
    }
    Ok(Report {
        table,
        json: json!({"tau": a.tau, "rows": out}),
        default_format: Format::Csv,
    })
}

pub fn iso(a: &IsoScanArgs) -> Result<Report, CliError> {
    let params = a.solver.params()?;
    if a.tau.is_empty() {
        return Err(CliError::Validation("at least one tau is required".into()));
    }
    let mut families = Vec::new();
    for &tau in &a.tau {
        let defaults = FamilySpec::default_families(tau);
        let mut pick = |choice: FamilyChoice| {
            let spec = match (choice, a.params.is_empty()) {
                (FamilyChoice::PerturbedDisk, true) => {
                    let mut f = defaults[0].clone();
                    if let steklov_core::iso::FamilyKind::PerturbedDisk { mode, .. } = &mut f.kind {
                        *mode = a.mode;
                    }
                    f
                }
                (FamilyChoice::PerturbedDisk, false) => FamilySpec::perturbed_disk(a.mode, a.params.clone(), tau),
                (FamilyChoice::EllipseLike, true) => defaults[1].clone(),
                (FamilyChoice::EllipseLike, false) => FamilySpec::ellipse_like(a.params.clone(), tau),
                (FamilyChoice::All, _) => unreachable!(),
            };
            families.push(FamilySpec {
                target_area: a.area,
                ..spec
            });
        };
        match a.family {
            FamilyChoice::All => {
                if !a.params.is_empty() {
                    return Err(CliError::Validation(
                        "--params needs a single family (perturbed_disk or ellipse_like)".into(),
                    ));
                }
                pick(FamilyChoice::PerturbedDisk);
                pick(FamilyChoice::EllipseLike);
            }
            choice => pick(choice),
        }
    }
    for f in &families {
        f.members()?;
    }
    let scans = families
        .par_iter()
        .map(|f| iso_scan(f, &params))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&[
        "family",
        "parameter",
        "area",
        "tau",
        "lambda2",
        "ball_bound",
        "margin",
        "verdict",
    ]);
    let mut rows = Vec::new();
    for r in scans.iter().flat_map(|s| &s.rows) {
        table.push(vec![
            r.family.clone().into(),
            r.parameter.into(),
            r.area.into(),
            r.tau.into(),
            r.lambda2.into(),
            r.ball_bound.into(),
            r.margin.into(),
            verdict(r.pass),
        ]);
        rows.push(r);
    }
    let holds = scans.iter().all(|s| s.inequality_holds);
    let equality = scans.iter().all(|s| s.equality_only_at_ball);
    let overall = holds && equality;
    let mut summary = vec![Cell::from("all")];
    summary.extend(std::iter::repeat_n(Cell::Empty, 6));
    summary.push(verdict(overall));
    table.push(summary);
    Ok(Report {
        table,
        json: json!({
            "rows": rows,
            "inequality_holds": holds,
            "equality_only_at_ball": equality,
            "verdict": if overall { "PASS" } else { "FAIL" },
        }),
        default_format: Format::Csv,
    })
}

pub fn inverse_sum(a: &InverseSumArgs, base: Option<&Path>) -> Result<Report, CliError> {
    let domain = a.domain.load(base)?;
    let params = a.solver.params()?;
    let weights = a
        .weights
        .iter()
        .map(|w| w.parse::<WeightFunction>())
        .collect::<Result<Vec<_>, _>>()?;
    let b = inverse_sum_bound(&domain, a.tau, &params)?;
    let mut table = Table::new(&["check", "f", "lhs", "rhs", "gap", "verdict"]);
    table.push(vec![
        "inverse_sum".into(),
        Cell::Empty,
        b.lhs.into(),
        b.rhs.into(),
        b.gap.into(),
        verdict(b.holds()),
    ]);
    let mut weighted = Vec::new();
    for w in weights {
        let c = weighted_boundary_inequality_check(&domain, w)?;
        table.push(vec![
            "weighted_boundary".into(),
            w.to_string().into(),
            c.lhs.into(),
            c.rhs.into(),
            (c.lhs - c.rhs).into(),
            verdict(c.pass),
        ]);
        weighted.push(json!({"f": w.to_string(), "lhs": c.lhs, "rhs": c.rhs, "pass": c.pass}));
    }
    Ok(Report {
        table,
        json: json!({
            "domain": domain_json(&domain),
            "tau": a.tau,
            "lhs": b.lhs,
            "rhs": b.rhs,
            "gap": b.gap,
            "mean_constraint": b.mean_constraint,
            "holds": b.holds(),
            "weighted": weighted,
        }),
        default_format: Format::Json,
    })
}
