//! Galerkin eigensolver for the biharmonic Steklov problem on star domains.
//!
//! Every trial function solves `Δ²u - τΔu = 0` exactly: harmonic
//! polynomials `Re/Im (z - c)^k` and modified-Helmholtz modes
//! `I_k(√τ r) {cos, sin}(kθ)` about the star center `c`. Only the boundary
//! conditions are left to the discretization, and both are natural for
//!
//! ```text
//! a(u, v) = ∫_Ω D²u : D²v + τ ∇u·∇v dx,      b(u, v) = ∮_∂Ω u v dσ,
//! ```
//!
//! so eigenpairs come from the pencil `a x = λ b x`.
//!
//! The basis is badly conditioned and, on the disk, `b` is singular (both
//! families have proportional traces for each `k`). [`solve`] first filters
//! the basis through the spectral decomposition of the Jacobi-scaled
//! `a + b`, then solves `b y = β (a + b) y` on the retained subspace.
//! `λ = (1 - β) / β`, and `β → 0` marks the `λ = ∞` directions, which are
//! dropped and counted in the diagnostics.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{boundary_geometry, interior_quadrature, BoundaryQuadrature, StarDomain};
use crate::special::ultraspherical_i;

const NEAR_CENTER: f64 = 1e-12;
/// `β = b/(a+b)` below this is treated as an infinite eigenvalue.
const INFINITE_BETA: f64 = 1e-11;
/// Relative gap below which neighbouring eigenvalues share a cluster.
pub const CLUSTER_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Harmonic,
    Bessel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BasisFunction {
    pub family: Family,
    pub k: usize,
    pub parity: Parity,
}

/// Ordered trial functions: for each `k = 0..=k_max`, harmonic cos, harmonic
/// sin, Bessel cos, Bessel sin (sin entries only for `k >= 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialBasis {
    pub k_max: usize,
    pub tau: f64,
    pub functions: Vec<BasisFunction>,
}

impl TrialBasis {
    pub fn new(k_max: usize, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("tension τ = {tau} must be > 0")));
        }
        let mut functions = Vec::with_capacity(2 * (2 * k_max + 1));
        for family in [Family::Harmonic, Family::Bessel] {
            for k in 0..=k_max {
                functions.push(BasisFunction {
                    family,
                    k,
                    parity: Parity::Cos,
                });
                if k >= 1 {
                    functions.push(BasisFunction {
                        family,
                        k,
                        parity: Parity::Sin,
                    });
                }
            }
        }
        Ok(Self { k_max, tau, functions })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Position of the constant function `(harmonic, 0, cos)`.
    pub fn constant_index(&self) -> usize {
        0
    }
}

/// Value, gradient and Hessian at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointEval {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

impl PointEval {
    fn axpy(&mut self, alpha: f64, other: &PointEval) {
        self.value += alpha * other.value;
        for i in 0..2 {
            self.gradient[i] += alpha * other.gradient[i];
            for j in 0..2 {
                self.hessian[i][j] += alpha * other.hessian[i][j];
            }
        }
    }

    /// Frobenius norm squared of the Hessian.
    pub fn hessian_norm2(&self) -> f64 {
        let h = &self.hessian;
        h[0][0] * h[0][0] + 2.0 * h[0][1] * h[0][1] + h[1][1] * h[1][1]
    }

    pub fn gradient_norm2(&self) -> f64 {
        self.gradient[0] * self.gradient[0] + self.gradient[1] * self.gradient[1]
    }
}

/// Evaluates one trial function at `point`, in polar coordinates about
/// `center`.
pub fn eval_basis(basis: &TrialBasis, index: usize, point: [f64; 2], center: [f64; 2]) -> Result<PointEval> {
    let f = basis
        .functions
        .get(index)
        .ok_or_else(|| Error::InvalidArgument(format!("basis index {index} out of range")))?;
    let dx = point[0] - center[0];
    let dy = point[1] - center[1];
    match f.family {
        Family::Harmonic => {
            let w = Complex::new(dx, dy);
            let powers = complex_powers(w, f.k);
            Ok(harmonic_eval(&powers, f.k, f.parity))
        }
        Family::Bessel => {
            let radial = bessel_radial(basis.tau, f.k, dx, dy)?;
            Ok(bessel_eval(&radial, f.k, f.parity, basis.tau))
        }
    }
}

fn complex_powers(w: Complex<f64>, k_max: usize) -> Vec<Complex<f64>> {
    let mut powers = Vec::with_capacity(k_max + 1);
    let mut p = Complex::new(1.0, 0.0);
    for _ in 0..=k_max {
        powers.push(p);
        p *= w;
    }
    powers
}

fn harmonic_eval(powers: &[Complex<f64>], k: usize, parity: Parity) -> PointEval {
    let kf = k as f64;
    let zero = Complex::new(0.0, 0.0);
    let f = powers[k];
    let f1 = if k >= 1 { powers[k - 1] * kf } else { zero };
    let f2 = if k >= 2 {
        powers[k - 2] * (kf * (kf - 1.0))
    } else {
        zero
    };
    match parity {
        Parity::Cos => PointEval {
            value: f.re,
            gradient: [f1.re, -f1.im],
            hessian: [[f2.re, -f2.im], [-f2.im, -f2.re]],
        },
        Parity::Sin => PointEval {
            value: f.im,
            gradient: [f1.im, f1.re],
            hessian: [[f2.im, f2.re], [f2.re, -f2.im]],
        },
    }
}

/// Radial factor `g(r) = I_k(√τ r)` and its polar frame at a point.
struct BesselRadial {
    r: f64,
    cos_t: f64,
    sin_t: f64,
    theta: f64,
    g: f64,
    g1: f64,
    g2: f64,
}

fn bessel_radial(tau: f64, k: usize, dx: f64, dy: f64) -> Result<BesselRadial> {
    let r = dx.hypot(dy);
    if r < NEAR_CENTER {
        if k >= 1 {
            return Err(Error::NearCenter { distance: r });
        }
        return Ok(BesselRadial {
            r: 0.0,
            cos_t: 1.0,
            sin_t: 0.0,
            theta: 0.0,
            g: 1.0,
            g1: 0.0,
            g2: 0.5 * tau,
        });
    }
    let st = tau.sqrt();
    let i = ultraspherical_i(k, 2, st * r)?;
    Ok(BesselRadial {
        r,
        cos_t: dx / r,
        sin_t: dy / r,
        theta: dy.atan2(dx),
        g: i.value,
        g1: st * i.d1,
        g2: tau * i.d2,
    })
}

fn bessel_eval(rad: &BesselRadial, k: usize, parity: Parity, tau: f64) -> PointEval {
    if rad.r == 0.0 {
        // k = 0 at the center: u = I_0(√τ r), Hessian (τ/2) I.
        return PointEval {
            value: 1.0,
            gradient: [0.0, 0.0],
            hessian: [[0.5 * tau, 0.0], [0.0, 0.5 * tau]],
        };
    }
    let kf = k as f64;
    let (s, c) = (kf * rad.theta).sin_cos();
    let (t, t1, t2) = match parity {
        Parity::Cos => (c, -kf * s, -kf * kf * c),
        Parity::Sin => (s, kf * c, -kf * kf * s),
    };
    let r = rad.r;
    let er = [rad.cos_t, rad.sin_t];
    let et = [-rad.sin_t, rad.cos_t];
    let g_r = rad.g1 * t;
    let g_t = rad.g * t1 / r;
    let h_rr = rad.g2 * t;
    let h_rt = (rad.g1 / r - rad.g / (r * r)) * t1;
    let h_tt = rad.g1 * t / r + rad.g * t2 / (r * r);
    let mut hessian = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            hessian[i][j] = h_rr * er[i] * er[j] + h_rt * (er[i] * et[j] + et[i] * er[j]) + h_tt * et[i] * et[j];
        }
    }
    PointEval {
        value: rad.g * t,
        gradient: [g_r * er[0] + g_t * et[0], g_r * er[1] + g_t * et[1]],
        hessian,
    }
}

/// Evaluates every trial function at one point.
fn eval_all(basis: &TrialBasis, point: [f64; 2], center: [f64; 2]) -> Result<Vec<PointEval>> {
    let dx = point[0] - center[0];
    let dy = point[1] - center[1];
    let powers = complex_powers(Complex::new(dx, dy), basis.k_max);
    let mut radial: Vec<Option<BesselRadial>> = (0..=basis.k_max).map(|_| None).collect();
    let mut out = Vec::with_capacity(basis.len());
    for f in &basis.functions {
        let e = match f.family {
            Family::Harmonic => harmonic_eval(&powers, f.k, f.parity),
            Family::Bessel => {
                if radial[f.k].is_none() {
                    radial[f.k] = Some(bessel_radial(basis.tau, f.k, dx, dy)?);
                }
                bessel_eval(radial[f.k].as_ref().unwrap(), f.k, f.parity, basis.tau)
            }
        };
        out.push(e);
    }
    Ok(out)
}

/// Quadrature resolution. Angular and boundary counts are raised as needed
/// to resolve the domain's highest Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadratureSizes {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_boundary: usize,
}

impl Default for QuadratureSizes {
    fn default() -> Self {
        Self {
            n_r: 32,
            n_theta: 256,
            n_boundary: 512,
        }
    }
}

impl QuadratureSizes {
    pub fn doubled(&self) -> Self {
        Self {
            n_r: 2 * self.n_r,
            n_theta: 2 * self.n_theta,
            n_boundary: 2 * self.n_boundary,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AssembledForms {
    pub stiffness: DMatrix<f64>,
    pub boundary_mass: DMatrix<f64>,
    /// Largest relative asymmetry removed by symmetrization.
    pub asymmetry: f64,
}

pub fn assemble(domain: &StarDomain, tau: f64, basis: &TrialBasis, quad: QuadratureSizes) -> Result<AssembledForms> {
    if basis.tau != tau {
        return Err(Error::InvalidArgument(format!(
            "basis built for τ = {} used with τ = {tau}",
            basis.tau
        )));
    }
    let n = basis.len();
    let center = domain.center();

    let nodes = interior_quadrature(domain, quad.n_r, domain.resolved_nodes(quad.n_theta))?;
    let st = tau.sqrt();
    let mut features = DMatrix::<f64>::zeros(5 * nodes.len(), n);
    for (q, node) in nodes.iter().enumerate() {
        let sw = node.weight.sqrt();
        let evals = eval_all(basis, node.point, center)?;
        for (j, e) in evals.iter().enumerate() {
            let row = 5 * q;
            features[(row, j)] = sw * e.hessian[0][0];
            features[(row + 1, j)] = sw * std::f64::consts::SQRT_2 * e.hessian[0][1];
            features[(row + 2, j)] = sw * e.hessian[1][1];
            features[(row + 3, j)] = sw * st * e.gradient[0];
            features[(row + 4, j)] = sw * st * e.gradient[1];
        }
    }
    let stiffness = features.tr_mul(&features);

    let bq = boundary_geometry(domain, domain.resolved_nodes(quad.n_boundary))?;
    let mut traces = DMatrix::<f64>::zeros(bq.len(), n);
    for (i, p) in bq.points.iter().enumerate() {
        let sw = bq.weights[i].sqrt();
        for (j, e) in eval_all(basis, *p, center)?.iter().enumerate() {
            traces[(i, j)] = sw * e.value;
        }
    }
    let boundary_mass = traces.tr_mul(&traces);

    let (stiffness, s_asym) = symmetrize(stiffness);
    let (boundary_mass, b_asym) = symmetrize(boundary_mass);
    Ok(AssembledForms {
        stiffness,
        boundary_mass,
        asymmetry: s_asym.max(b_asym),
    })
}

fn symmetrize(m: DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let t = m.transpose();
    let asym = (&m - &t).amax() / scale;
    ((m + t) * 0.5, asym)
}

/// Largest relative change of any matrix entry when the interior radial
/// resolution is doubled. Entries are compared relative to the geometric
/// mean of their diagonal entries.
pub fn quadrature_refinement_change(
    domain: &StarDomain,
    tau: f64,
    basis: &TrialBasis,
    quad: QuadratureSizes,
) -> Result<f64> {
    let coarse = assemble(domain, tau, basis, quad)?;
    let fine = assemble(
        domain,
        tau,
        basis,
        QuadratureSizes {
            n_r: 2 * quad.n_r,
            ..quad
        },
    )?;
    let n = basis.len();
    let mut worst = 0.0f64;
    for (c, f) in [
        (&coarse.stiffness, &fine.stiffness),
        (&coarse.boundary_mass, &fine.boundary_mass),
    ] {
        for i in 0..n {
            for j in 0..n {
                let scale = (f[(i, i)] * f[(j, j)]).sqrt();
                if scale > 0.0 {
                    worst = worst.max((c[(i, j)] - f[(i, j)]).abs() / scale);
                }
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub basis_size: usize,
    /// Directions kept after filtering the conditioning of `a + b`.
    pub filtered_dimension: usize,
    /// Ratio of largest to smallest retained eigenvalue of the scaled `a + b`.
    pub condition_estimate: f64,
    /// Retained directions with `b ≈ 0`, i.e. `λ = ∞`.
    pub infinite_count: usize,
}

/// Eigenpairs sorted by eigenvalue. Columns of `coefficients` are in trial
/// basis coordinates and `b`-orthonormal. Clusters hold 1-based eigenvalue
/// indexes.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub eigenvalues: Vec<f64>,
    pub coefficients: DMatrix<f64>,
    pub clusters: Vec<Vec<usize>>,
    pub diagnostics: SolveDiagnostics,
}

impl EigenSolution {
    /// `λ_j`, 1-based.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        self.eigenvalues[j - 1]
    }

    /// Coefficient vector of the `j`-th eigenfunction, 1-based.
    pub fn coefficients_of(&self, j: usize) -> DVector<f64> {
        self.coefficients.column(j - 1).into_owned()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// The cluster containing eigenvalue index `j` (1-based).
    pub fn cluster_of(&self, j: usize) -> Option<&[usize]> {
        self.clusters.iter().find(|c| c.contains(&j)).map(|c| c.as_slice())
    }
}

fn symmetric_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenSolver("symmetric eigensolver hit its iteration cap".into()))
}

pub fn solve(forms: &AssembledForms, svd_tol: f64) -> Result<EigenSolution> {
    if !(svd_tol > 0.0 && svd_tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "svd_tol = {svd_tol} must lie in (0, 1)"
        )));
    }
    let a = &forms.stiffness;
    let b = &forms.boundary_mass;
    let n = a.nrows();
    let gram = a + b;

    // Jacobi scaling, then spectral filtering of the scaled Gram matrix.
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = gram[(i, i)];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut scaled = gram.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] *= scale[i] * scale[j];
        }
    }
    let eig = symmetric_eigen(scaled)?;
    let s_max = eig.eigenvalues.max();
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > svd_tol * s_max).collect();
    if keep.is_empty() {
        return Err(Error::AllFiltered);
    }
    let m = keep.len();
    let s_min = keep.iter().map(|&i| eig.eigenvalues[i]).fold(f64::INFINITY, f64::min);
    let mut w = DMatrix::<f64>::zeros(n, m);
    for (col, &i) in keep.iter().enumerate() {
        let inv = 1.0 / eig.eigenvalues[i].sqrt();
        for row in 0..n {
            w[(row, col)] = scale[row] * eig.eigenvectors[(row, i)] * inv;
        }
    }

    // b y = β (a + b) y on the retained subspace.
    let ar = symmetrize(w.tr_mul(&(a * &w))).0;
    let br = symmetrize(w.tr_mul(&(b * &w))).0;
    let gr = &ar + &br;
    let chol = gr
        .cholesky()
        .ok_or_else(|| Error::EigenSolver("reduced Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let half = l
        .solve_lower_triangular(&br)
        .ok_or_else(|| Error::EigenSolver("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&half.transpose())
        .ok_or_else(|| Error::EigenSolver("triangular solve failed".into()))?;
    let ceig = symmetric_eigen(symmetrize(c).0)?;
    let y = l
        .tr_solve_lower_triangular(&ceig.eigenvectors)
        .ok_or_else(|| Error::EigenSolver("triangular solve failed".into()))?;
    let x_all = &w * y;

    let mut pairs: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut infinite = 0;
    for i in 0..m {
        if ceig.eigenvalues[i] <= INFINITE_BETA {
            infinite += 1;
            continue;
        }
        let x = x_all.column(i).into_owned();
        let bx = (b * &x).dot(&x);
        let ax = (a * &x).dot(&x);
        if !(bx > 0.0) {
            infinite += 1;
            continue;
        }
        pairs.push((ax / bx, x / bx.sqrt()));
    }
    if pairs.is_empty() {
        return Err(Error::AllFiltered);
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));

    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let clusters = detect_clusters(&values);
    let mut coefficients = DMatrix::<f64>::zeros(n, pairs.len());
    let mut eigenvalues = values.clone();
    for cluster in &clusters {
        let cols: Vec<DVector<f64>> = cluster.iter().map(|&j| pairs[j - 1].1.clone()).collect();
        let (vals, vecs) = rayleigh_ritz(a, b, cols)?;
        for (slot, (&j, (v, x))) in cluster.iter().zip(vals.into_iter().zip(vecs)).enumerate() {
            let _ = slot;
            eigenvalues[j - 1] = v;
            coefficients.set_column(j - 1, &fix_sign(x));
        }
    }

    Ok(EigenSolution {
        eigenvalues,
        coefficients,
        clusters,
        diagnostics: SolveDiagnostics {
            basis_size: n,
            filtered_dimension: m,
            condition_estimate: s_max / s_min,
            infinite_count: infinite,
        },
    })
}

/// Groups consecutive sorted eigenvalues whose relative gap is below
/// [`CLUSTER_GAP`]. Returns 1-based indexes.
pub fn detect_clusters(values: &[f64]) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            let prev = values[i - 1];
            let gap = (v - prev).abs();
            if gap <= CLUSTER_GAP * v.abs().max(prev.abs()) {
                clusters.last_mut().unwrap().push(i + 1);
                continue;
            }
        }
        clusters.push(vec![i + 1]);
    }
    clusters
}

/// b-orthonormalizes the vectors of one cluster and diagonalizes `a` on
/// their span.
fn rayleigh_ritz(a: &DMatrix<f64>, b: &DMatrix<f64>, cols: Vec<DVector<f64>>) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(cols.len());
    for mut v in cols {
        for _ in 0..2 {
            for u in &q {
                let proj = (b * u).dot(&v);
                v -= u * proj;
            }
        }
        let norm = (b * &v).dot(&v).sqrt();
        q.push(v / norm);
    }
    if q.len() == 1 {
        let x = q.pop().unwrap();
        let lam = (a * &x).dot(&x);
        return Ok((vec![lam], vec![x]));
    }
    let k = q.len();
    let basis = DMatrix::from_columns(&q);
    let small = symmetrize(basis.tr_mul(&(a * &basis))).0;
    let eig = symmetric_eigen(small)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order.iter().map(|&i| &basis * eig.eigenvectors.column(i)).collect();
    Ok((vals, vecs))
}

/// Makes the largest-magnitude coefficient positive.
fn fix_sign(x: DVector<f64>) -> DVector<f64> {
    let idx = x.iamax();
    if x[idx] < 0.0 {
        -x
    } else {
        x
    }
}

/// Normalized Galerkin residual of eigenpair `j` (1-based):
/// `max_i |a(v, u_i) - λ b(v, u_i)| / (√(a(v,v) a(u_i,u_i)) + max(λ, 1) √(b(v,v) b(u_i,u_i)))`.
pub fn galerkin_residual(forms: &AssembledForms, solution: &EigenSolution, j: usize) -> f64 {
    let a = &forms.stiffness;
    let b = &forms.boundary_mass;
    let lam = solution.eigenvalue(j);
    let x = solution.coefficients_of(j);
    let ax = a * &x;
    let bx = b * &x;
    let av = ax.dot(&x).max(0.0).sqrt();
    let bv = bx.dot(&x).max(0.0).sqrt();
    (0..x.len())
        .map(|i| {
            let bound = av * a[(i, i)].max(0.0).sqrt() + lam.abs().max(1.0) * bv * b[(i, i)].max(0.0).sqrt();
            if bound > 0.0 {
                (ax[i] - lam * bx[i]).abs() / bound
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Eigenfunction `j` (1-based) at an arbitrary point.
pub fn evaluate_eigenfunction(
    solution: &EigenSolution,
    basis: &TrialBasis,
    center: [f64; 2],
    j: usize,
    point: [f64; 2],
) -> Result<PointEval> {
    let x = solution.coefficients.column(j - 1);
    let mut out = PointEval::default();
    for (i, e) in eval_all(basis, point, center)?.iter().enumerate() {
        out.axpy(x[i], e);
    }
    Ok(out)
}

/// Boundary trace of one eigenfunction at one quadrature node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub value: f64,
    pub normal_derivative: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

impl TracePoint {
    pub fn gradient_norm2(&self) -> f64 {
        self.gradient[0].powi(2) + self.gradient[1].powi(2)
    }

    pub fn hessian_norm2(&self) -> f64 {
        let h = &self.hessian;
        h[0][0] * h[0][0] + 2.0 * h[0][1] * h[0][1] + h[1][1] * h[1][1]
    }

    /// `∂²v/∂ν²` for the given unit normal.
    pub fn second_normal_derivative(&self, normal: [f64; 2]) -> f64 {
        let h = &self.hessian;
        normal[0] * (h[0][0] * normal[0] + h[0][1] * normal[1])
            + normal[1] * (h[1][0] * normal[0] + h[1][1] * normal[1])
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub quadrature: BoundaryQuadrature,
    /// 1-based eigenvalue indexes, in the order of `traces`.
    pub indices: Vec<usize>,
    pub traces: Vec<Vec<TracePoint>>,
}

impl BoundaryData {
    pub fn trace(&self, j: usize) -> Result<&[TracePoint]> {
        self.indices
            .iter()
            .position(|&i| i == j)
            .map(|p| self.traces[p].as_slice())
            .ok_or(Error::MissingTrace(j))
    }

    /// `max |∂²v/∂ν²| / max |D²v|` over the nodes for eigenfunction `j`; the
    /// first boundary condition holds only weakly, so this is a monitor.
    pub fn second_condition_residual(&self, j: usize) -> Result<f64> {
        let trace = self.trace(j)?;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (t, n) in trace.iter().zip(&self.quadrature.normals) {
            worst = worst.max(t.second_normal_derivative(*n).abs());
            scale = scale.max(t.hessian_norm2().sqrt());
        }
        Ok(if scale > 0.0 { worst / scale } else { 0.0 })
    }
}

/// Values and derivatives of the selected eigenfunctions at the boundary
/// quadrature nodes.
pub fn eigenfunction_boundary_data(
    solution: &EigenSolution,
    domain: &StarDomain,
    basis: &TrialBasis,
    which: &[usize],
    n_boundary: usize,
) -> Result<BoundaryData> {
    for &j in which {
        if j == 0 || j > solution.len() {
            return Err(Error::InvalidArgument(format!(
                "eigenvalue index {j} outside 1..={}",
                solution.len()
            )));
        }
    }
    let quadrature = boundary_geometry(domain, domain.resolved_nodes(n_boundary))?;
    let center = domain.center();
    let mut traces: Vec<Vec<TracePoint>> = vec![Vec::with_capacity(quadrature.len()); which.len()];
    for (p, normal) in quadrature.points.iter().zip(&quadrature.normals) {
        let evals = eval_all(basis, *p, center)?;
        for (slot, &j) in which.iter().enumerate() {
            let x = solution.coefficients.column(j - 1);
            let mut v = PointEval::default();
            for (i, e) in evals.iter().enumerate() {
                v.axpy(x[i], e);
            }
            traces[slot].push(TracePoint {
                value: v.value,
                normal_derivative: v.gradient[0] * normal[0] + v.gradient[1] * normal[1],
                gradient: v.gradient,
                hessian: v.hessian,
            });
        }
    }
    Ok(BoundaryData {
        quadrature,
        indices: which.to_vec(),
        traces,
    })
}

/// Basis size, filtering threshold and quadrature resolution for one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverParams {
    pub k_max: usize,
    pub svd_tol: f64,
    pub quad: QuadratureSizes,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            k_max: 10,
            svd_tol: 1e-12,
            quad: QuadratureSizes::default(),
        }
    }
}

/// Everything produced by one solve on one domain.
#[derive(Debug, Clone)]
pub struct DomainSolve {
    pub domain: StarDomain,
    pub tau: f64,
    pub basis: TrialBasis,
    pub forms: AssembledForms,
    pub solution: EigenSolution,
}

impl DomainSolve {
    pub fn boundary_data(&self, which: &[usize], n_boundary: usize) -> Result<BoundaryData> {
        eigenfunction_boundary_data(&self.solution, &self.domain, &self.basis, which, n_boundary)
    }
}

pub fn solve_domain(domain: &StarDomain, tau: f64, params: &SolverParams) -> Result<DomainSolve> {
    let basis = TrialBasis::new(params.k_max, tau)?;
    let forms = assemble(domain, tau, &basis, params.quad)?;
    let solution = solve(&forms, params.svd_tol)?;
    Ok(DomainSolve {
        domain: domain.clone(),
        tau,
        basis,
        forms,
        solution,
    })
}

/// `2π` for `k = 0`, `π` otherwise: `∫_0^{2π} trig(kθ)² dθ`.
pub fn angular_factor(k: usize) -> f64 {
    if k == 0 {
        2.0 * PI
    } else {
        PI
    }
}
