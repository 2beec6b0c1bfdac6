//! Symmetric functions of clustered eigenvalues and their shape derivatives.
//!
//! For an eigenvalue cluster `F` with common value `λ_F` and a boundary
//! perturbation with normal speed `g`, the derivative of
//! `Λ_{F,s} = Σ_{j1<…<js ∈ F} λ_{j1}⋯λ_{js}` is
//!
//! ```text
//! dΛ_{F,s} = -λ_F^s C(|F|-1, s-1) Σ_l ∮ (λ_F K v_l² + λ_F ∂_ν(v_l²) - τ|∇v_l|² - |D²v_l|²) g dσ
//! ```
//!
//! with `v_l` orthonormal for the energy form `a`. The solver returns
//! eigenfunctions normalized in `L²(∂Ω)`, for which `a(v, v) = λ_F`; the
//! rescaling turns the prefactor into `λ_F^{s-1}`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{boundary_geometry, BoundaryQuadrature, StarDomain};
use crate::solver::{solve_domain, BoundaryData, DomainSolve, EigenSolution, SolverParams, CLUSTER_GAP};

/// Relative spread above which a cluster is not treated as one eigenvalue.
pub const DEGENERACY_SPREAD: f64 = 1e-4;
/// Samples used to project functions of θ onto Fourier modes.
const PROJECTION_SAMPLES: usize = 512;
const MAX_PROJECTED_MODES: usize = 64;

/// Normal speed `g(θ) = c + Σ_k (a_k cos kθ + b_k sin kθ)` along the
/// boundary parametrization `θ ↦ center + ρ(θ)(cos θ, sin θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationField {
    #[serde(default)]
    pub constant: f64,
    /// `a_k` for `k = 1..`.
    #[serde(default)]
    pub cos_coeffs: Vec<f64>,
    /// `b_k` for `k = 1..`.
    #[serde(default)]
    pub sin_coeffs: Vec<f64>,
}

impl PerturbationField {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            cos_coeffs: vec![],
            sin_coeffs: vec![],
        }
    }

    pub fn cos(k: usize) -> Self {
        Self::constant(0.0).plus_mode(k, 1.0, 0.0)
    }

    pub fn sin(k: usize) -> Self {
        Self::constant(0.0).plus_mode(k, 0.0, 1.0)
    }

    fn plus_mode(mut self, k: usize, a: f64, b: f64) -> Self {
        if k == 0 {
            self.constant += a;
            return self;
        }
        if self.cos_coeffs.len() < k {
            self.cos_coeffs.resize(k, 0.0);
        }
        if self.sin_coeffs.len() < k {
            self.sin_coeffs.resize(k, 0.0);
        }
        self.cos_coeffs[k - 1] += a;
        self.sin_coeffs[k - 1] += b;
        self
    }

    /// Normal component `e·ν` of the rigid translation in direction `e`,
    /// projected onto Fourier modes in θ.
    pub fn translation(domain: &StarDomain, direction: [f64; 2]) -> Self {
        Self::from_samples(|theta| {
            let (r, dr, _) = domain.radius(theta);
            let (s, c) = theta.sin_cos();
            let speed = r.hypot(dr);
            let nx = (r * c + dr * s) / speed;
            let ny = (r * s - dr * c) / speed;
            direction[0] * nx + direction[1] * ny
        })
    }

    /// Fourier projection of a smooth periodic function, truncated where the
    /// coefficients fall below roundoff.
    pub fn from_samples<F: Fn(f64) -> f64>(f: F) -> Self {
        let n = PROJECTION_SAMPLES;
        let samples: Vec<f64> = (0..n).map(|i| f(2.0 * PI * i as f64 / n as f64)).collect();
        let constant = samples.iter().sum::<f64>() / n as f64;
        let mut cos_coeffs = Vec::with_capacity(MAX_PROJECTED_MODES);
        let mut sin_coeffs = Vec::with_capacity(MAX_PROJECTED_MODES);
        for k in 1..=MAX_PROJECTED_MODES {
            let (mut a, mut b) = (0.0, 0.0);
            for (i, v) in samples.iter().enumerate() {
                let (s, c) = (2.0 * PI * (k * i) as f64 / n as f64).sin_cos();
                a += v * c;
                b += v * s;
            }
            cos_coeffs.push(2.0 * a / n as f64);
            sin_coeffs.push(2.0 * b / n as f64);
        }
        let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = 1e-13 * scale;
        for c in cos_coeffs.iter_mut().chain(sin_coeffs.iter_mut()) {
            if c.abs() < floor {
                *c = 0.0;
            }
        }
        while cos_coeffs.last() == Some(&0.0) && sin_coeffs.last() == Some(&0.0) {
            cos_coeffs.pop();
            sin_coeffs.pop();
        }
        Self {
            constant,
            cos_coeffs,
            sin_coeffs,
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        let mut v = self.constant;
        for (i, a) in self.cos_coeffs.iter().enumerate() {
            v += a * ((i + 1) as f64 * theta).cos();
        }
        for (i, b) in self.sin_coeffs.iter().enumerate() {
            v += b * ((i + 1) as f64 * theta).sin();
        }
        v
    }

    pub fn values_on(&self, quad: &BoundaryQuadrature) -> Vec<f64> {
        quad.thetas.iter().map(|&t| self.value(t)).collect()
    }

    /// `∮ g dσ`.
    pub fn boundary_integral(&self, domain: &StarDomain, n_nodes: usize) -> Result<f64> {
        let quad = boundary_geometry(domain, domain.resolved_nodes(n_nodes))?;
        Ok(quad.integrate(self.values_on(&quad)))
    }

    /// `‖g‖_{L²(∂Ω)}`.
    pub fn boundary_norm(&self, domain: &StarDomain, n_nodes: usize) -> Result<f64> {
        let quad = boundary_geometry(domain, domain.resolved_nodes(n_nodes))?;
        Ok(quad.integrate(self.values_on(&quad).iter().map(|v| v * v)).sqrt())
    }

    /// `∮ g dσ = 0` to `1e-12` (relative to `‖g‖ √|∂Ω|`).
    pub fn is_volume_preserving(&self, domain: &StarDomain, n_nodes: usize) -> Result<bool> {
        let quad = boundary_geometry(domain, domain.resolved_nodes(n_nodes))?;
        let vals = self.values_on(&quad);
        let integral = quad.integrate(vals.iter().copied());
        let norm = quad.integrate(vals.iter().map(|v| v * v)).sqrt();
        Ok(integral.abs() <= 1e-12 * (1.0 + norm * quad.length().sqrt()))
    }
}

impl fmt::Display for PerturbationField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        if self.constant != 0.0 {
            terms.push(format!("{}", self.constant));
        }
        for (name, coeffs) in [("cos", &self.cos_coeffs), ("sin", &self.sin_coeffs)] {
            for (i, c) in coeffs.iter().enumerate() {
                if *c == 1.0 {
                    terms.push(format!("{name}{}", i + 1));
                } else if *c != 0.0 {
                    terms.push(format!("{c}*{name}{}", i + 1));
                }
            }
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join("+"))
        }
    }
}

/// Parses sums such as `cos2`, `0.5*cos2+sin3`, `1+cos1`, `const`.
impl FromStr for PerturbationField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |t: &str| Error::InvalidArgument(format!("cannot parse field term '{t}'"));
        let mut field = Self::constant(0.0);
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad(s));
        }
        for term in compact.split('+') {
            let (coef, func) = match term.split_once('*') {
                Some((c, f)) => (c.parse::<f64>().map_err(|_| bad(term))?, f),
                None => (1.0, term),
            };
            let (sign, func) = match func.strip_prefix('-') {
                Some(rest) => (-1.0, rest),
                None => (1.0, func),
            };
            let coef = coef * sign;
            if func == "const" {
                field.constant += coef;
            } else if let Some(k) = func.strip_prefix("cos") {
                let k: usize = k.parse().map_err(|_| bad(term))?;
                field = field.plus_mode(k, coef, 0.0);
            } else if let Some(k) = func.strip_prefix("sin") {
                let k: usize = k.parse().map_err(|_| bad(term))?;
                if k == 0 {
                    return Err(bad(term));
                }
                field = field.plus_mode(k, 0.0, coef);
            } else {
                let v: f64 = func.parse().map_err(|_| bad(term))?;
                field.constant += coef * v;
            }
        }
        Ok(field)
    }
}

/// Projects `g` onto `{g : ∮ g dσ = 0}` by subtracting its boundary mean.
pub fn volume_preserving_projection(field: &PerturbationField, domain: &StarDomain) -> Result<PerturbationField> {
    let quad = boundary_geometry(domain, domain.resolved_nodes(PROJECTION_SAMPLES))?;
    let mean = quad.integrate(field.values_on(&quad)) / quad.length();
    Ok(PerturbationField {
        constant: field.constant - mean,
        ..field.clone()
    })
}

/// `ρ_t = ρ + t g s` with `s = √(ρ² + ρ'²)/ρ`, so the boundary moves with
/// normal speed `g` at `t = 0`. The correction `g s` is projected onto
/// Fourier modes; the base coefficients are kept exactly.
pub fn realize_perturbation(domain: &StarDomain, field: &PerturbationField, t: f64) -> Result<StarDomain> {
    let step = PerturbationField::from_samples(|theta| {
        let (r, dr, _) = domain.radius(theta);
        field.value(theta) * r.hypot(dr) / r
    });
    let len = domain
        .cos_coeffs()
        .len()
        .max(step.cos_coeffs.len())
        .max(step.sin_coeffs.len());
    let mut cos = domain.cos_coeffs().to_vec();
    let mut sin = domain.sin_coeffs().to_vec();
    cos.resize(len, 0.0);
    sin.resize(len, 0.0);
    for (i, c) in step.cos_coeffs.iter().enumerate() {
        cos[i] += t * c;
    }
    for (i, s) in step.sin_coeffs.iter().enumerate() {
        sin[i] += t * s;
    }
    StarDomain::new(domain.a0() + t * step.constant, cos, sin, domain.center())
}

/// Index set `F` (1-based) and degree `s` of `Λ_{F,s}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetricFunctionSpec {
    pub indices: Vec<usize>,
    pub s: usize,
}

impl SymmetricFunctionSpec {
    pub fn new(mut indices: Vec<usize>, s: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() || indices[0] == 0 {
            return Err(Error::InvalidSpec("F must be a nonempty set of 1-based indexes".into()));
        }
        if s == 0 || s > indices.len() {
            return Err(Error::InvalidSpec(format!(
                "degree s = {s} must lie in 1..={}",
                indices.len()
            )));
        }
        Ok(Self { indices, s })
    }

    /// The cluster of `solution` containing index `j`, with degree `s`.
    pub fn cluster_containing(solution: &EigenSolution, j: usize, s: usize) -> Result<Self> {
        let cluster = solution
            .cluster_of(j)
            .ok_or_else(|| Error::InvalidSpec(format!("no eigenvalue with index {j}")))?;
        Self::new(cluster.to_vec(), s)
    }

    /// `C(|F| - 1, s - 1)`.
    pub fn multiplicity_factor(&self) -> f64 {
        binomial(self.indices.len() - 1, self.s - 1)
    }

    /// Every index in range and no eigenvalue outside `F` numerically equal to
    /// one inside.
    pub fn validate(&self, eigenvalues: &[f64]) -> Result<()> {
        let n = eigenvalues.len();
        if let Some(&j) = self.indices.iter().find(|&&j| j > n) {
            return Err(Error::InvalidSpec(format!(
                "index {j} exceeds the {n} computed eigenvalues"
            )));
        }
        for &j in &self.indices {
            let lj = eigenvalues[j - 1];
            for (i, &li) in eigenvalues.iter().enumerate() {
                if self.indices.contains(&(i + 1)) {
                    continue;
                }
                if (li - lj).abs() <= CLUSTER_GAP * li.abs().max(lj.abs()) {
                    return Err(Error::InvalidSpec(format!(
                        "λ_{} = {li} coincides with λ_{j} = {lj} but is not in F",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Elementary symmetric polynomial of degree `s` of `{λ_j : j ∈ F}`.
pub fn symmetric_function(eigenvalues: &[f64], spec: &SymmetricFunctionSpec) -> Result<f64> {
    spec.validate(eigenvalues)?;
    let values: Vec<f64> = spec.indices.iter().map(|&j| eigenvalues[j - 1]).collect();
    Ok(elementary_symmetric(&values, spec.s))
}

fn elementary_symmetric(values: &[f64], s: usize) -> f64 {
    let mut e = vec![0.0; s + 1];
    e[0] = 1.0;
    for &x in values {
        for j in (1..=s).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e[s]
}

/// Common value of a numerically degenerate cluster.
pub fn cluster_value(eigenvalues: &[f64], spec: &SymmetricFunctionSpec) -> Result<f64> {
    spec.validate(eigenvalues)?;
    let vals: Vec<f64> = spec.indices.iter().map(|&j| eigenvalues[j - 1]).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / mean.abs().max(f64::MIN_POSITIVE);
    if hi - lo > 0.0 && spread > DEGENERACY_SPREAD {
        return Err(Error::NonDegenerateCluster { spread });
    }
    Ok(mean)
}

fn is_zero_eigenvalue(lambda: f64, tau: f64) -> bool {
    lambda.abs() <= 1e-8 * tau.max(1.0)
}

/// Pointwise `Σ_l (λ_F K v_l² + 2 λ_F v_l ∂_ν v_l - τ|∇v_l|² - |D²v_l|²)` with
/// `L²(∂Ω)`-normalized `v_l`.
pub fn shape_integrand(data: &BoundaryData, indices: &[usize], lambda_f: f64, tau: f64) -> Result<Vec<f64>> {
    let q = &data.quadrature;
    let mut out = vec![0.0; q.len()];
    for &j in indices {
        let trace = data.trace(j)?;
        for (i, p) in trace.iter().enumerate() {
            out[i] += lambda_f * q.curvatures[i] * p.value * p.value + lambda_f * 2.0 * p.value * p.normal_derivative
                - tau * p.gradient_norm2()
                - p.hessian_norm2();
        }
    }
    Ok(out)
}

/// Shape derivative of `Λ_{F,s}` along the normal speed `field`.
pub fn hadamard_derivative(
    solve: &DomainSolve,
    spec: &SymmetricFunctionSpec,
    field: &PerturbationField,
    n_boundary: usize,
) -> Result<f64> {
    let lambda_f = cluster_value(&solve.solution.eigenvalues, spec)?;
    if is_zero_eigenvalue(lambda_f, solve.tau) {
        return Ok(0.0);
    }
    let data = solve.boundary_data(&spec.indices, n_boundary)?;
    let integrand = shape_integrand(&data, &spec.indices, lambda_f, solve.tau)?;
    let g = field.values_on(&data.quadrature);
    let integral = data.quadrature.integrate(integrand.iter().zip(&g).map(|(a, b)| a * b));
    Ok(-lambda_f.powi(spec.s as i32 - 1) * spec.multiplicity_factor() * integral)
}

/// How far the shape integrand is from constant on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalityReport {
    pub lambda_f: f64,
    /// `dσ`-weighted mean of the integrand.
    pub c_best: f64,
    /// `‖I - c_best‖_{L²(∂Ω)}`.
    pub deviation: f64,
    /// `deviation / (|c_best| + 1)`.
    pub residual: f64,
}

pub fn criticality_residual(solve: &DomainSolve, indices: &[usize], n_boundary: usize) -> Result<CriticalityReport> {
    let spec = SymmetricFunctionSpec::new(indices.to_vec(), 1)?;
    let lambda_f = cluster_value(&solve.solution.eigenvalues, &spec)?;
    let data = solve.boundary_data(&spec.indices, n_boundary)?;
    let integrand = if is_zero_eigenvalue(lambda_f, solve.tau) {
        vec![0.0; data.quadrature.len()]
    } else {
        shape_integrand(&data, &spec.indices, lambda_f, solve.tau)?
    };
    let q = &data.quadrature;
    let c_best = q.integrate(integrand.iter().copied()) / q.length();
    let deviation = q.integrate(integrand.iter().map(|v| (v - c_best).powi(2))).sqrt();
    Ok(CriticalityReport {
        lambda_f,
        c_best,
        deviation,
        residual: deviation / (c_best.abs() + 1.0),
    })
}

/// Central finite differences of `Λ_{F,s}` along the realized family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdReport {
    pub steps: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Richardson extrapolation of the two smallest steps.
    pub extrapolated: f64,
    /// Order fitted from successive estimate differences (needs ≥ 3 steps).
    pub observed_order: Option<f64>,
}

pub fn fd_derivative(
    domain: &StarDomain,
    tau: f64,
    params: &SolverParams,
    spec: &SymmetricFunctionSpec,
    field: &PerturbationField,
    steps: &[f64],
) -> Result<FdReport> {
    if steps.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two finite-difference steps".into(),
        ));
    }
    if steps.iter().any(|&t| !(t > 0.0)) || steps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "steps must be positive and strictly decreasing".into(),
        ));
    }
    let base = solve_domain(domain, tau, params)?.solution.eigenvalues;
    spec.validate(&base)?;

    let signed: Vec<f64> = steps.iter().flat_map(|&t| [t, -t]).collect();
    let values = signed
        .par_iter()
        .map(|&t| {
            let perturbed = realize_perturbation(domain, field, t)?;
            let eig = solve_domain(&perturbed, tau, params)?.solution.eigenvalues;
            check_tracking(&base, &eig, &spec.indices, t)?;
            symmetric_function(&eig, spec)
        })
        .collect::<Result<Vec<f64>>>()?;

    let estimates: Vec<f64> = steps
        .iter()
        .enumerate()
        .map(|(i, t)| (values[2 * i] - values[2 * i + 1]) / (2.0 * t))
        .collect();
    let n = steps.len();
    let (t1, t2) = (steps[n - 2], steps[n - 1]);
    let (d1, d2) = (estimates[n - 2], estimates[n - 1]);
    let extrapolated = d2 + (d2 - d1) / ((t1 / t2).powi(2) - 1.0);
    let observed_order = (n >= 3).then(|| {
        let e1 = (estimates[n - 3] - d1).abs();
        let e2 = (d1 - d2).abs();
        let r1 = steps[n - 3] / t1;
        let r2 = t1 / t2;
        // For a common ratio this is log(e1/e2)/log(r).
        ((e1 / e2).ln() / (0.5 * (r1 + r2)).ln()).max(0.0)
    });
    Ok(FdReport {
        steps: steps.to_vec(),
        estimates,
        extrapolated,
        observed_order,
    })
}

/// The base eigenvalue nearest to each perturbed `λ_j`, `j ∈ F`, searched
/// over `F` and its neighbouring indexes, must itself belong to `F`.
fn check_tracking(base: &[f64], perturbed: &[f64], indices: &[usize], t: f64) -> Result<()> {
    let lo = indices[0].saturating_sub(1).max(1);
    let hi = (indices[indices.len() - 1] + 1).min(base.len());
    for &j in indices {
        let value = perturbed[j - 1];
        let nearest = (lo..=hi)
            .min_by(|&a, &b| (base[a - 1] - value).abs().total_cmp(&(base[b - 1] - value).abs()))
            .unwrap_or(j);
        if !indices.contains(&nearest) {
            return Err(Error::TrackingAmbiguity { t, index: j });
        }
    }
    Ok(())
}
