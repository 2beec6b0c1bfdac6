//! Neumann problem `Δ²u - τΔu = λ(ε) ρ_ε u` on the unit disk with a density
//! that is `ε` in the bulk and large in the collar `1 - ε < r < 1`.
//!
//! For `u = R(r) trig(kθ)` the angular integrals are exact and the problem
//! reduces to a fourth-order radial eigenproblem, discretized with cubic
//! Hermite elements.
//!
//! The unknowns are `R(0)`, the increments `Δ_i = R(r_{i+1}) - R(r_i)` and
//! the slopes `R'(r_i)`. On an element, `R = R_a + R'_a H₂ + Δ H₃ + R'_b H₄`,
//! so smooth functions are not formed by cancelling `O(h⁻³)` stiffness
//! entries of nodal values and the assembled matrices keep their accuracy on
//! fine meshes.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::ball;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::solver::angular_factor;

const ELEMENT_NODES: usize = 10;
/// Minimum number of elements inside the collar.
pub const MIN_LAYER_ELEMENTS: usize = 4;
const SHIFT: f64 = 1.0;

/// Piecewise-constant density on the unit disk, `ε` for `r < 1 - ε` and
/// `boundary_value` on the collar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityProfile {
    pub eps: f64,
    pub mass: f64,
    pub bulk_value: f64,
    pub boundary_value: f64,
}

impl DensityProfile {
    /// Two-level density with `∫ρ = mass`.
    pub fn new(eps: f64, mass: f64) -> Result<Self> {
        check_eps(eps)?;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidArgument(format!("mass {mass} must be positive")));
        }
        let inner = PI * (1.0 - eps).powi(2);
        let collar = PI - inner;
        let boundary_value = (mass - eps * inner) / collar;
        if !(boundary_value > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ε = {eps} leaves no positive collar density for mass {mass}"
            )));
        }
        Ok(Self {
            eps,
            mass,
            bulk_value: eps,
            boundary_value,
        })
    }

    /// Default mass `2π`, the perimeter of the unit circle.
    pub fn with_unit_circle_mass(eps: f64) -> Result<Self> {
        Self::new(eps, 2.0 * PI)
    }

    /// Constant density `mass / π`; `eps` only places the collar node.
    pub fn uniform(eps: f64, mass: f64) -> Result<Self> {
        check_eps(eps)?;
        let v = mass / PI;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("mass {mass} must be positive")));
        }
        Ok(Self {
            eps,
            mass,
            bulk_value: v,
            boundary_value: v,
        })
    }

    pub fn value(&self, r: f64) -> f64 {
        if r < 1.0 - self.eps {
            self.bulk_value
        } else {
            self.boundary_value
        }
    }

    /// `∫_Ω ρ dx` in closed form.
    pub fn total_mass(&self) -> f64 {
        let inner = PI * (1.0 - self.eps).powi(2);
        self.bulk_value * inner + self.boundary_value * (PI - inner)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("ε = {eps} must lie in (0, 1)")));
    }
    Ok(())
}

/// Element counts for [`RadialMesh::graded`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshPolicy {
    pub bulk_elements: usize,
    pub layer_elements: usize,
    /// Exponent `p` in `r_i = L (1 - (1 - i/n)^p)`, clustering bulk nodes
    /// toward the collar.
    pub grading: f64,
}

impl Default for MeshPolicy {
    fn default() -> Self {
        Self {
            bulk_elements: 40,
            layer_elements: 8,
            grading: 1.5,
        }
    }
}

impl MeshPolicy {
    /// Every element halved.
    pub fn halved(&self) -> Self {
        Self {
            bulk_elements: 2 * self.bulk_elements,
            layer_elements: 2 * self.layer_elements,
            grading: self.grading,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialMesh {
    pub nodes: Vec<f64>,
    pub eps: f64,
}

impl RadialMesh {
    pub fn graded(eps: f64, policy: MeshPolicy) -> Result<Self> {
        check_eps(eps)?;
        if policy.bulk_elements == 0 || !(policy.grading >= 1.0) {
            return Err(Error::InvalidArgument(
                "mesh needs bulk elements and grading >= 1".into(),
            ));
        }
        let jump = 1.0 - eps;
        let n = policy.bulk_elements;
        let mut nodes: Vec<f64> = (0..n)
            .map(|i| jump * (1.0 - (1.0 - i as f64 / n as f64).powf(policy.grading)))
            .collect();
        let m = policy.layer_elements;
        for i in 0..m {
            nodes.push(jump + eps * i as f64 / m.max(1) as f64);
        }
        nodes.push(1.0);
        Self::from_nodes(nodes, eps)
    }

    /// Validates an explicit node list: increasing from 0 to 1 with `1 - ε`
    /// exactly a node and at least [`MIN_LAYER_ELEMENTS`] elements in the
    /// collar.
    pub fn from_nodes(nodes: Vec<f64>, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        if nodes.first() != Some(&0.0) || nodes.last() != Some(&1.0) {
            return Err(Error::InvalidArgument("mesh must start at 0 and end at 1".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("mesh nodes must increase strictly".into()));
        }
        let jump = 1.0 - eps;
        let Some(at) = nodes.iter().position(|&r| r == jump) else {
            return Err(Error::InvalidArgument(format!("1 - ε = {jump} is not a mesh node")));
        };
        let layer = nodes.len() - 1 - at;
        if layer < MIN_LAYER_ELEMENTS {
            return Err(Error::InvalidArgument(format!(
                "collar resolved by {layer} elements, need {MIN_LAYER_ELEMENTS}"
            )));
        }
        Ok(Self { nodes, eps })
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn layer_elements(&self) -> usize {
        let jump = 1.0 - self.eps;
        self.nodes.iter().filter(|&&r| r > jump).count()
    }

    /// Number of unknowns: `R(0)`, one increment per element, one slope per
    /// node.
    pub fn dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    fn increment_index(&self, element: usize) -> usize {
        1 + element
    }

    fn slope_index(&self, node: usize) -> usize {
        self.nodes.len() + node
    }

    /// Unknowns of the Hermite interpolant of a radial function given as
    /// `r ↦ (R, R')`.
    pub fn interpolate<F: Fn(f64) -> (f64, f64)>(&self, f: F) -> Vec<f64> {
        let samples: Vec<(f64, f64)> = self.nodes.iter().map(|&r| f(r)).collect();
        let mut z = vec![0.0; self.dofs()];
        z[0] = samples[0].0;
        for e in 0..self.elements() {
            z[self.increment_index(e)] = samples[e + 1].0 - samples[e].0;
        }
        for (i, s) in samples.iter().enumerate() {
            z[self.slope_index(i)] = s.1;
        }
        z
    }
}

/// Cubic Hermite shape functions on an element of length `h`, local
/// coordinate `ξ ∈ [0, 1]`: values, r-derivatives and second r-derivatives.
fn hermite(xi: f64, h: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let x2 = xi * xi;
    let x3 = x2 * xi;
    let v = [
        1.0 - 3.0 * x2 + 2.0 * x3,
        h * (xi - 2.0 * x2 + x3),
        3.0 * x2 - 2.0 * x3,
        h * (x3 - x2),
    ];
    let d = [
        (-6.0 * xi + 6.0 * x2) / h,
        1.0 - 4.0 * xi + 3.0 * x2,
        (6.0 * xi - 6.0 * x2) / h,
        3.0 * x2 - 2.0 * xi,
    ];
    let dd = [
        (-6.0 + 12.0 * xi) / (h * h),
        (-4.0 + 6.0 * xi) / h,
        (6.0 - 12.0 * xi) / (h * h),
        (6.0 * xi - 2.0) / h,
    ];
    (v, d, dd)
}

/// Energy features of `u = R trig(kθ)` at radius `r`, whose squares summed
/// and multiplied by `r` and the angular factor give the energy density:
/// `|D²u|² = R''² + 2k²(R'/r - R/r²)² + (R'/r - k²R/r²)²`,
/// `|∇u|² = R'² + k²R²/r²`.
pub fn mode_features(k: usize, tau: f64, r: f64, rv: f64, rd: f64, rdd: f64) -> [f64; 5] {
    let kf = k as f64;
    let st = tau.sqrt();
    [
        rdd,
        std::f64::consts::SQRT_2 * kf * (rd / r - rv / (r * r)),
        rd / r - kf * kf * rv / (r * r),
        st * rd,
        st * kf * rv / r,
    ]
}

/// Stiffness and mass of mode `k` (angular factor included) on all unknowns,
/// plus the unknowns left free by regularity at `r = 0`: `R'(0) = 0` for
/// `k = 0`, `R(0) = 0` for `k = 1`, both for `k >= 2`.
#[derive(Debug, Clone)]
pub struct ModeMatrices {
    pub k: usize,
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub free_dofs: Vec<usize>,
}

impl ModeMatrices {
    /// `(K_ff, M_ff)` restricted to the free unknowns.
    pub fn reduced(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let f = &self.free_dofs;
        let n = f.len();
        let k = DMatrix::from_fn(n, n, |i, j| self.stiffness[(f[i], f[j])]);
        let m = DMatrix::from_fn(n, n, |i, j| self.mass[(f[i], f[j])]);
        (k, m)
    }

    /// `zᵀ K z` for a full unknown vector from [`RadialMesh::interpolate`].
    pub fn energy(&self, z: &[f64]) -> f64 {
        let x = nalgebra::DVector::from_column_slice(z);
        (&self.stiffness * &x).dot(&x)
    }
}

pub fn assemble_mode(k: usize, tau: f64, profile: &DensityProfile, mesh: &RadialMesh) -> Result<ModeMatrices> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tension τ = {tau} must be > 0")));
    }
    if profile.eps != mesh.eps {
        return Err(Error::InvalidArgument("mesh and density use different ε".into()));
    }
    let n = mesh.dofs();
    let mut stiffness = DMatrix::<f64>::zeros(n, n);
    let mut mass = DMatrix::<f64>::zeros(n, n);
    let rule = GaussLegendre::new(ELEMENT_NODES);
    let ang = angular_factor(k);
    let mut idx: Vec<usize> = Vec::with_capacity(n);
    let mut feats: Vec<[f64; 5]> = Vec::with_capacity(n);
    let mut vals: Vec<f64> = Vec::with_capacity(n);
    for (e, w) in mesh.nodes.windows(2).enumerate() {
        let (ra, rb) = (w[0], w[1]);
        let h = rb - ra;
        // density is constant on every element since 1 - ε is a node
        let rho = profile.value(0.5 * (ra + rb));
        for (xi, wt) in rule.on_interval(0.0, 1.0) {
            let r = ra + h * xi;
            let weight = ang * wt * h * r;
            let (v, d, dd) = hermite(xi, h);
            let one = mode_features(k, tau, r, 1.0, 0.0, 0.0);
            idx.clear();
            feats.clear();
            vals.clear();
            // R_a = R(0) + Σ_{i<e} Δ_i enters through the constant function
            for j in std::iter::once(0).chain((0..e).map(|i| mesh.increment_index(i))) {
                idx.push(j);
                feats.push(one);
                vals.push(1.0);
            }
            for (j, a) in [
                (mesh.slope_index(e), 1),
                (mesh.increment_index(e), 2),
                (mesh.slope_index(e + 1), 3),
            ] {
                idx.push(j);
                feats.push(mode_features(k, tau, r, v[a], d[a], dd[a]));
                vals.push(v[a]);
            }
            for a in 0..idx.len() {
                for b in 0..idx.len() {
                    let dot: f64 = (0..5).map(|c| feats[a][c] * feats[b][c]).sum();
                    stiffness[(idx[a], idx[b])] += weight * dot;
                    mass[(idx[a], idx[b])] += weight * rho * vals[a] * vals[b];
                }
            }
        }
    }
    let constrained: Vec<usize> = match k {
        0 => vec![mesh.slope_index(0)],
        1 => vec![0],
        _ => vec![0, mesh.slope_index(0)],
    };
    let free_dofs = (0..n).filter(|i| !constrained.contains(i)).collect();
    Ok(ModeMatrices {
        k,
        stiffness,
        mass,
        free_dofs,
    })
}

/// Lowest `count` eigenvalues of mode `k`.
pub fn neumann_mode_eigenvalues(
    k: usize,
    tau: f64,
    profile: &DensityProfile,
    mesh: &RadialMesh,
    count: usize,
) -> Result<Vec<f64>> {
    if mesh.layer_elements() < MIN_LAYER_ELEMENTS {
        return Err(Error::InvalidArgument(format!(
            "collar resolved by {} elements, need {MIN_LAYER_ELEMENTS}",
            mesh.layer_elements()
        )));
    }
    let (kk, mm) = assemble_mode(k, tau, profile, mesh)?.reduced();
    lowest_pencil_eigenvalues(&kk, &mm, count)
}

fn eigen_err() -> Error {
    Error::EigenSolver("dense eigensolver failed".into())
}

/// Lowest eigenvalues of `K x = λ M x` with `K` semidefinite and `M` definite.
///
/// The shift-inverted form `M x = μ (K + M) x` supplies starting vectors.
/// Forming it loses accuracy on fine meshes (the stiffness scales like
/// `h⁻⁴`), so the block is refined by two steps of subspace iteration with
/// Rayleigh–Ritz on `K` and `M` themselves.
fn lowest_pencil_eigenvalues(kk: &DMatrix<f64>, mm: &DMatrix<f64>, count: usize) -> Result<Vec<f64>> {
    let n = kk.nrows();
    let block = (count + 4).min(n);
    let shifted = kk + mm * SHIFT;
    let chol = shifted
        .clone()
        .cholesky()
        .ok_or_else(|| Error::EigenSolver("shifted stiffness is not positive definite".into()))?;
    let l = chol.l();
    let half = l.solve_lower_triangular(mm).ok_or_else(eigen_err)?;
    let c = l.solve_lower_triangular(&half.transpose()).ok_or_else(eigen_err)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 10_000).ok_or_else(eigen_err)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let y = DMatrix::from_fn(n, block, |i, j| eig.eigenvectors[(i, order[j])]);
    let mut x = l.tr_solve_lower_triangular(&y).ok_or_else(eigen_err)?;

    let mut ritz = Vec::new();
    for _ in 0..2 {
        x = chol.solve(&(mm * &x));
        let (values, vectors) = rayleigh_ritz(kk, mm, &x)?;
        ritz = values;
        x = vectors;
    }
    ritz.truncate(count);
    Ok(ritz)
}

/// Ritz pairs of `(K, M)` on the span of the columns of `x`, ascending.
fn rayleigh_ritz(kk: &DMatrix<f64>, mm: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let kr = x.tr_mul(&(kk * x));
    let mr = x.tr_mul(&(mm * x));
    let kr = (&kr + kr.transpose()) * 0.5;
    let mr = (&mr + mr.transpose()) * 0.5;
    let lm = mr.cholesky().ok_or_else(eigen_err)?.l();
    let half = lm.solve_lower_triangular(&kr).ok_or_else(eigen_err)?;
    let c = lm.solve_lower_triangular(&half.transpose()).ok_or_else(eigen_err)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 10_000).ok_or_else(eigen_err)?;
    let m = x.ncols();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let z = DMatrix::from_fn(m, m, |i, j| eig.eigenvectors[(i, order[j])]);
    let coeffs = lm.tr_solve_lower_triangular(&z).ok_or_else(eigen_err)?;
    Ok((order.iter().map(|&i| eig.eigenvalues[i]).collect(), x * coeffs))
}

/// Sorted spectrum assembled from modes `0..=k_cap`, each `k >= 1`
/// eigenvalue counted twice.
pub fn merged_spectrum(
    tau: f64,
    profile: &DensityProfile,
    mesh: &RadialMesh,
    k_cap: usize,
    count: usize,
) -> Result<Vec<f64>> {
    let per_mode = (0..=k_cap)
        .into_par_iter()
        .map(|k| neumann_mode_eigenvalues(k, tau, profile, mesh, count))
        .collect::<Result<Vec<_>>>()?;
    let mut all = Vec::new();
    for (k, vals) in per_mode.into_iter().enumerate() {
        for v in vals {
            all.push(v);
            if k >= 1 {
                all.push(v);
            }
        }
    }
    all.sort_by(f64::total_cmp);
    all.truncate(count);
    Ok(all)
}

/// Angular modes used for the merged spectrum.
pub const DEFAULT_K_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub j: usize,
    pub lambda_eps: f64,
    pub lambda_limit: f64,
    pub abs_error: f64,
}

/// `λ_j(ε)` against the limiting Steklov eigenvalues of the unit disk, with
/// mass `2π` and the mesh policy applied at every `ε`.
pub fn convergence_sweep(tau: f64, eps_list: &[f64], j_list: &[usize], policy: MeshPolicy) -> Result<Vec<SweepRow>> {
    if eps_list.is_empty() || j_list.is_empty() {
        return Err(Error::InvalidArgument("empty ε or index list".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("ε list must be strictly decreasing".into()));
    }
    if j_list.contains(&0) {
        return Err(Error::InvalidArgument("eigenvalue indexes are 1-based".into()));
    }
    let j_max = *j_list.iter().max().unwrap();
    let limit = ball::sorted_spectrum(2, tau, j_max)?;
    if let Some(&l) = limit.orders().iter().find(|&&l| l > DEFAULT_K_CAP) {
        return Err(Error::InvalidArgument(format!(
            "index {j_max} needs angular mode {l}, beyond the {DEFAULT_K_CAP} modes assembled"
        )));
    }
    let limit = limit.values();
    let spectra = eps_list
        .par_iter()
        .map(|&eps| {
            let profile = DensityProfile::with_unit_circle_mass(eps)?;
            let mesh = RadialMesh::graded(eps, policy)?;
            merged_spectrum(tau, &profile, &mesh, DEFAULT_K_CAP, j_max)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(eps_list.len() * j_list.len());
    for (&eps, spec) in eps_list.iter().zip(&spectra) {
        for &j in j_list {
            let lambda_eps = spec[j - 1];
            let lambda_limit = limit[j - 1];
            rows.push(SweepRow {
                eps,
                j,
                lambda_eps,
                lambda_limit,
                abs_error: (lambda_eps - lambda_limit).abs(),
            });
        }
    }
    Ok(rows)
}

/// Observed order `log(e_prev/e) / log(ε_prev/ε)` between each row and the
/// previous row with the same `j`. `None` for the first `ε` and where either
/// error is at roundoff level.
pub fn empirical_rates(rows: &[SweepRow]) -> Vec<Option<f64>> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let prev = rows[..i].iter().rev().find(|p| p.j == row.j)?;
            let floor = 1e-12 * row.lambda_limit.abs().max(1.0);
            if prev.abs_error <= floor || row.abs_error <= floor {
                return None;
            }
            Some((prev.abs_error / row.abs_error).ln() / (prev.eps / row.eps).ln())
        })
        .collect()
}
