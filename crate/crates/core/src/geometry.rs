//! Planar star-shaped domains `{center + r(cos θ, sin θ) : 0 <= r < ρ(θ)}`
//! with `ρ(θ) = a0 + Σ_k (a_k cos kθ + b_k sin kθ)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

const POSITIVITY_GRID: usize = 4096;

/// Serialized form of a [`StarDomain`]; validated on conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarDomainSpec {
    pub a0: f64,
    #[serde(default)]
    pub cos_coeffs: Vec<f64>,
    #[serde(default)]
    pub sin_coeffs: Vec<f64>,
    #[serde(default)]
    pub center: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StarDomainSpec", into = "StarDomainSpec")]
pub struct StarDomain {
    a0: f64,
    /// `a_k` for `k = 1..`, padded with zeros to the same length as `sin`.
    cos: Vec<f64>,
    sin: Vec<f64>,
    center: [f64; 2],
}

impl TryFrom<StarDomainSpec> for StarDomain {
    type Error = Error;

    fn try_from(spec: StarDomainSpec) -> Result<Self> {
        StarDomain::new(spec.a0, spec.cos_coeffs, spec.sin_coeffs, spec.center)
    }
}

impl From<StarDomain> for StarDomainSpec {
    fn from(d: StarDomain) -> Self {
        StarDomainSpec {
            a0: d.a0,
            cos_coeffs: d.cos,
            sin_coeffs: d.sin,
            center: d.center,
        }
    }
}

impl StarDomain {
    pub fn new(a0: f64, mut cos: Vec<f64>, mut sin: Vec<f64>, center: [f64; 2]) -> Result<Self> {
        let finite =
            a0.is_finite() && center.iter().all(|c| c.is_finite()) && cos.iter().chain(&sin).all(|c| c.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("domain coefficients must be finite".into()));
        }
        let len = cos.len().max(sin.len());
        cos.resize(len, 0.0);
        sin.resize(len, 0.0);
        while cos.last() == Some(&0.0) && sin.last() == Some(&0.0) {
            cos.pop();
            sin.pop();
        }
        let domain = Self { a0, cos, sin, center };
        domain.check_positive()?;
        Ok(domain)
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(radius, vec![], vec![], [0.0, 0.0])
    }

    /// `ρ(θ) = a0 (1 + amplitude cos(kθ))`.
    pub fn cosine_perturbation(a0: f64, k: usize, amplitude: f64) -> Result<Self> {
        assert!(k >= 1, "perturbation mode must be >= 1");
        let mut cos = vec![0.0; k];
        cos[k - 1] = a0 * amplitude;
        Self::new(a0, cos, vec![], [0.0, 0.0])
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    /// Highest Fourier index with a nonzero coefficient (0 for a disk).
    pub fn max_mode(&self) -> usize {
        self.cos.len()
    }

    pub fn with_center(&self, center: [f64; 2]) -> Self {
        Self { center, ..self.clone() }
    }

    /// The same shape rotated by `alpha` about its center:
    /// `ρ_new(θ) = ρ(θ - alpha)`.
    pub fn rotated(&self, alpha: f64) -> Self {
        let mut cos = Vec::with_capacity(self.cos.len());
        let mut sin = Vec::with_capacity(self.sin.len());
        for (i, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let (s, c) = ((i + 1) as f64 * alpha).sin_cos();
            cos.push(a * c - b * s);
            sin.push(a * s + b * c);
        }
        Self {
            a0: self.a0,
            cos,
            sin,
            center: self.center,
        }
    }

    /// `(ρ, ρ', ρ'')` at angle `theta`.
    pub fn radius(&self, theta: f64) -> (f64, f64, f64) {
        let mut r = self.a0;
        let mut dr = 0.0;
        let mut ddr = 0.0;
        for (i, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let k = (i + 1) as f64;
            let (s, c) = (k * theta).sin_cos();
            r += a * c + b * s;
            dr += k * (b * c - a * s);
            ddr -= k * k * (a * c + b * s);
        }
        (r, dr, ddr)
    }

    /// Boundary point at angle `theta`.
    pub fn point(&self, theta: f64) -> [f64; 2] {
        let (r, _, _) = self.radius(theta);
        [self.center[0] + r * theta.cos(), self.center[1] + r * theta.sin()]
    }

    fn check_positive(&self) -> Result<()> {
        let mut min = f64::INFINITY;
        let mut at = 0.0;
        for i in 0..POSITIVITY_GRID {
            let theta = 2.0 * PI * i as f64 / POSITIVITY_GRID as f64;
            let r = self.radius(theta).0;
            if r < min {
                min = r;
                at = theta;
            }
        }
        if !(min > 0.0) {
            return Err(Error::NonPositiveRadius { min, theta: at });
        }
        Ok(())
    }

    /// Smallest radius on the positivity check grid.
    pub fn min_radius(&self) -> f64 {
        (0..POSITIVITY_GRID)
            .map(|i| self.radius(2.0 * PI * i as f64 / POSITIVITY_GRID as f64).0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        (0..POSITIVITY_GRID)
            .map(|i| self.radius(2.0 * PI * i as f64 / POSITIVITY_GRID as f64).0)
            .fold(0.0, f64::max)
    }

    /// `½∮ρ² dθ = π(a0² + ½Σ(a_k² + b_k²))`, exact.
    pub fn area(&self) -> f64 {
        let modes: f64 = self.cos.iter().chain(&self.sin).map(|c| c * c).sum();
        PI * (self.a0 * self.a0 + 0.5 * modes)
    }

    /// Scales all radius coefficients so that the area equals `target_area`.
    pub fn rescale_to_area(&self, target_area: f64) -> Result<Self> {
        if !(target_area > 0.0 && target_area.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "target area {target_area} must be positive"
            )));
        }
        let factor = (target_area / self.area()).sqrt();
        Ok(Self {
            a0: self.a0 * factor,
            cos: self.cos.iter().map(|c| c * factor).collect(),
            sin: self.sin.iter().map(|c| c * factor).collect(),
            center: self.center,
        })
    }

    /// Moves `center` so that the boundary centroid `∮ x dσ / |∂Ω|` is at the
    /// origin.
    pub fn center_boundary_centroid(&self, n_nodes: usize) -> Result<Self> {
        let quad = boundary_geometry(self, n_nodes)?;
        let c = quad.centroid();
        Ok(self.with_center([self.center[0] - c[0], self.center[1] - c[1]]))
    }

    /// Node count that resolves the boundary: at least `min`, at least
    /// `4 (max_mode + 1)`, rounded up to a multiple of 4.
    pub fn resolved_nodes(&self, min: usize) -> usize {
        let need = (4 * (self.max_mode() + 1)).max(min);
        need.div_ceil(4) * 4
    }
}

/// Uniform-in-θ boundary rule with outward normals, arclength weights and
/// curvature (`K = 1` on the unit circle).
#[derive(Debug, Clone)]
pub struct BoundaryQuadrature {
    pub thetas: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub normals: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub curvatures: Vec<f64>,
}

impl BoundaryQuadrature {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `∮ f dσ` for values given at the nodes.
    pub fn integrate(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let len = self.length();
        let x = self.integrate(self.points.iter().map(|p| p[0]));
        let y = self.integrate(self.points.iter().map(|p| p[1]));
        [x / len, y / len]
    }
}

pub fn boundary_geometry(domain: &StarDomain, n_nodes: usize) -> Result<BoundaryQuadrature> {
    let need = 4 * (domain.max_mode() + 1);
    if n_nodes < need {
        return Err(Error::InvalidArgument(format!(
            "{n_nodes} boundary nodes cannot resolve mode {}; need >= {need}",
            domain.max_mode()
        )));
    }
    let h = 2.0 * PI / n_nodes as f64;
    let mut quad = BoundaryQuadrature {
        thetas: Vec::with_capacity(n_nodes),
        points: Vec::with_capacity(n_nodes),
        normals: Vec::with_capacity(n_nodes),
        weights: Vec::with_capacity(n_nodes),
        curvatures: Vec::with_capacity(n_nodes),
    };
    for i in 0..n_nodes {
        let theta = h * i as f64;
        let (r, dr, ddr) = domain.radius(theta);
        if !(r > 0.0) {
            return Err(Error::NonPositiveRadius { min: r, theta });
        }
        let (s, c) = theta.sin_cos();
        let speed2 = r * r + dr * dr;
        let speed = speed2.sqrt();
        quad.thetas.push(theta);
        quad.points.push([domain.center[0] + r * c, domain.center[1] + r * s]);
        // tangent (dr c - r s, dr s + r c) rotated by -90°
        quad.normals.push([(r * c + dr * s) / speed, (r * s - dr * c) / speed]);
        quad.weights.push(speed * h);
        quad.curvatures
            .push((r * r + 2.0 * dr * dr - r * ddr) / (speed2 * speed));
    }
    Ok(quad)
}

/// Node of the interior rule; `r` and `theta` are polar coordinates about the
/// domain center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorNode {
    pub point: [f64; 2],
    pub weight: f64,
    pub r: f64,
    pub theta: f64,
}

/// Tensor rule: Gauss–Legendre in `r ∈ [0, ρ(θ)]` at each of `n_theta`
/// uniform angles (trapezoid), with the polar Jacobian folded into the
/// weights.
pub fn interior_quadrature(domain: &StarDomain, n_r: usize, n_theta: usize) -> Result<Vec<InteriorNode>> {
    if n_r < 8 {
        return Err(Error::InvalidArgument(format!("n_r = {n_r} must be >= 8")));
    }
    let need = 4 * (domain.max_mode() + 1);
    if n_theta < need {
        return Err(Error::InvalidArgument(format!(
            "n_theta = {n_theta} cannot resolve mode {}; need >= {need}",
            domain.max_mode()
        )));
    }
    let rule = GaussLegendre::new(n_r);
    let h = 2.0 * PI / n_theta as f64;
    let mut nodes = Vec::with_capacity(n_r * n_theta);
    for i in 0..n_theta {
        let theta = h * i as f64;
        let (rho, _, _) = domain.radius(theta);
        let (s, c) = theta.sin_cos();
        for (r, w) in rule.on_interval(0.0, rho) {
            nodes.push(InteriorNode {
                point: [domain.center[0] + r * c, domain.center[1] + r * s],
                weight: w * r * h,
                r,
                theta,
            });
        }
    }
    Ok(nodes)
}
