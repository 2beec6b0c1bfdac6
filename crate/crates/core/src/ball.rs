//! Closed-form Steklov spectrum on the unit ball in any dimension `N >= 2`.
//!
//! Eigenfunctions separate as `R_l(r) Y_l(θ)` with `Y_l` a spherical harmonic
//! of order `l` and `R_l(r) = A r^l + B i_l(√τ r)`. Imposing `∂²u/∂r² = 0` at
//! `r = 1` fixes `B / A = l(1 - l) / (τ i_l''(√τ))`, and the third-order
//! boundary condition then yields one eigenvalue `λ_(l)` per order, with the
//! multiplicity of the order-`l` harmonics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::special::{ultraspherical_i, ultraspherical_series};

/// How to read the cubic coefficient in the `i_l'` term of the eigenvalue
/// formula, `N - 1 + 2Nl + X + τ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubicTermReading {
    /// `X = 2l(l - 2)`. Matches the Rayleigh quotient of the explicit
    /// eigenprofile and the boundary condition residual; used by default.
    Quadratic,
    /// `X = 2l(l - 2)l`, the triple product. Agrees with `Quadratic` for
    /// `l <= 2` only and produces negative values from `l = 3` on.
    TripleProduct,
}

fn check_args(dim: usize, tau: f64) -> Result<()> {
    if dim < 2 {
        return Err(Error::Domain(format!("dimension N = {dim} must be >= 2")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tension τ = {tau} must be > 0")));
    }
    Ok(())
}

/// Eigenvalue `λ_(l)` of order `l` on the unit ball.
pub fn eigenvalue_of_order(l: usize, dim: usize, tau: f64) -> Result<f64> {
    eigenvalue_of_order_with(l, dim, tau, CubicTermReading::Quadratic)
}

pub fn eigenvalue_of_order_with(l: usize, dim: usize, tau: f64, reading: CubicTermReading) -> Result<f64> {
    check_args(dim, tau)?;
    let st = tau.sqrt();
    let i = ultraspherical_i(l, dim, st)?;
    let lf = l as f64;
    let nf = dim as f64;

    let den_a = (1.0 - lf) * lf * i.value;
    let den_b = tau * i.d2;
    let den = den_a + den_b;
    let scale = den_a.abs() + den_b.abs();
    if den.abs() < 1e-12 * scale || scale == 0.0 {
        return Err(Error::DegenerateDenominator { l, value: den, scale });
    }

    let cubic = match reading {
        CubicTermReading::Quadratic => 2.0 * lf * (lf - 2.0),
        CubicTermReading::TripleProduct => 2.0 * lf * (lf - 2.0) * lf,
    };
    let bracket = 3.0 * (lf - 1.0) * lf * (lf + nf - 2.0) * i.value
        - (lf - 1.0) * st * (nf - 1.0 + 2.0 * nf * lf + cubic + tau) * i.d1
        + tau * ((lf - 1.0) * (lf + 2.0 * nf - 3.0) + tau) * i.d2
        + (lf - 1.0) * tau * st * i.d3;
    Ok(lf / den * bracket)
}

/// Dimension of the space of spherical harmonics of order `l` on `S^(N-1)`:
/// `(2l + N - 2)(l + N - 3)! / (l! (N - 2)!)` for `l >= 1`, and 1 for `l = 0`.
pub fn multiplicity_of_order(l: usize, dim: usize) -> usize {
    assert!(dim >= 2, "dimension must be >= 2");
    if l == 0 {
        return 1;
    }
    // Harmonic homogeneous polynomials: C(l+N-1, N-1) - C(l+N-3, N-1).
    binomial(l + dim - 1, dim - 1) - binomial((l + dim).saturating_sub(3), dim - 1)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc as usize
}

/// One angular order on the ball: eigenvalue, radial coefficients with the
/// normalization `A = 1`, and multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallMode {
    pub l: usize,
    pub dim: usize,
    pub tau: f64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub multiplicity: usize,
}

impl BallMode {
    /// `(R, R', R'', R''')` at radius `r >= 0`.
    pub fn radial(&self, r: f64) -> [f64; 4] {
        let lf = self.l as f64;
        let st = self.tau.sqrt();
        let mut out = [0.0; 4];
        // r^l and its derivatives
        let mut coef = 1.0;
        for (k, slot) in out.iter_mut().enumerate() {
            if k <= self.l {
                *slot = self.a * coef * r.powi((self.l - k) as i32);
                coef *= lf - k as f64;
            }
        }
        if self.b != 0.0 {
            let i =
                ultraspherical_series(self.l, self.dim, st * r).expect("radial profile evaluated inside the unit ball");
            out[0] += self.b * i.value;
            out[1] += self.b * st * i.d1;
            out[2] += self.b * self.tau * i.d2;
            out[3] += self.b * self.tau * st * i.d3;
        }
        out
    }

    /// Residuals of the two ball boundary conditions at `r = 1`:
    /// `R''(1)` and `τR' + Λ(R' - R) - (ΔR)'(1) - λR(1)` with
    /// `Λ = l(l + N - 2)` the eigenvalue of `-Δ_S`.
    pub fn boundary_residuals(&self) -> (f64, f64) {
        let [r0, r1, r2, r3] = self.radial(1.0);
        let n = self.dim as f64;
        let big_l = (self.l * (self.l + self.dim - 2)) as f64;
        let d_laplacian = r3 + (n - 1.0) * (r2 - r1) - big_l * (r1 - 2.0 * r0);
        let second = self.tau * r1 + big_l * (r1 - r0) - d_laplacian - self.lambda * r0;
        (r2, second)
    }
}

pub fn radial_profile(l: usize, dim: usize, tau: f64) -> Result<BallMode> {
    check_args(dim, tau)?;
    let lambda = eigenvalue_of_order(l, dim, tau)?;
    let b = if l <= 1 {
        0.0
    } else {
        let i = ultraspherical_i(l, dim, tau.sqrt())?;
        let lf = l as f64;
        lf * (1.0 - lf) / (tau * i.d2)
    };
    Ok(BallMode {
        l,
        dim,
        tau,
        lambda,
        a: 1.0,
        b,
        multiplicity: multiplicity_of_order(l, dim),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub eigenvalue: f64,
    pub order: usize,
    /// First and last 1-based eigenvalue index covered by this order.
    pub first_index: usize,
    pub last_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SortedSpectrum {
    pub dim: usize,
    pub tau: f64,
    pub entries: Vec<SpectrumEntry>,
}

impl SortedSpectrum {
    /// Eigenvalues repeated according to multiplicity, index 1 first.
    pub fn values(&self) -> Vec<f64> {
        self.rows().map(|(_, v, _)| v).collect()
    }

    pub fn orders(&self) -> Vec<usize> {
        self.rows().map(|(_, _, l)| l).collect()
    }

    /// `(index, eigenvalue, order)` triples.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        self.entries
            .iter()
            .flat_map(|e| (e.first_index..=e.last_index).map(move |j| (j, e.eigenvalue, e.order)))
    }

    pub fn len(&self) -> usize {
        self.entries.last().map_or(0, |e| e.last_index)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The first `j_max` ball eigenvalues with multiplicity, in nondecreasing
/// order.
///
/// Orders are enumerated until, past `l = 2`, `λ_(l)` exceeds the current
/// `j_max`-th smallest value; strict growth of `λ_(l)` for `l >= 1` is checked
/// on every enumerated order and a violation is an error.
pub fn sorted_spectrum(dim: usize, tau: f64, j_max: usize) -> Result<SortedSpectrum> {
    check_args(dim, tau)?;
    if j_max == 0 {
        return Err(Error::InvalidArgument("j_max must be >= 1".into()));
    }
    let mut modes: Vec<(f64, usize, usize)> = Vec::new();
    let mut total = 0usize;
    let mut l = 0usize;
    loop {
        let lambda = eigenvalue_of_order(l, dim, tau)?;
        if l >= 2 {
            let (prev, _, _) = modes[l - 1];
            if lambda <= prev {
                return Err(Error::NonMonotone {
                    l: l - 1,
                    next: l,
                    lower: prev,
                    upper: lambda,
                });
            }
        }
        if l >= 2 && total >= j_max && lambda > kth_smallest(&modes, j_max) {
            break;
        }
        let mult = multiplicity_of_order(l, dim);
        modes.push((lambda, l, mult));
        total += mult;
        l += 1;
    }
    if modes.len() >= 2 && modes[0].0 >= modes[1].0 {
        return Err(Error::NonMonotone {
            l: 0,
            next: 1,
            lower: modes[0].0,
            upper: modes[1].0,
        });
    }

    modes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut entries = Vec::new();
    let mut next = 1usize;
    for (eigenvalue, order, mult) in modes {
        if next > j_max {
            break;
        }
        let last = (next + mult - 1).min(j_max);
        entries.push(SpectrumEntry {
            eigenvalue,
            order,
            first_index: next,
            last_index: last,
        });
        next = last + 1;
    }
    Ok(SortedSpectrum { dim, tau, entries })
}

fn kth_smallest(modes: &[(f64, usize, usize)], k: usize) -> f64 {
    let mut sorted: Vec<(f64, usize)> = modes.iter().map(|m| (m.0, m.2)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut count = 0;
    for (v, mult) in sorted {
        count += mult;
        if count >= k {
            return v;
        }
    }
    f64::INFINITY
}

/// Angular integral over the unit sphere of `|D²u|² + τ|∇u|²` for
/// `u = R(r) Y_l(θ)` with `Y_l` normalized in `L²(S^(N-1))`, at radius `r`.
/// Multiply by `r^(N-1)` for the radial measure.
///
/// Uses `∫|∇_S Y|² = Λ`, `∫ Y Δ_S Y = -Λ` and the Bochner identity
/// `∫|∇²_S Y|² = Λ² - (N - 2)Λ` with `Λ = l(l + N - 2)`.
pub fn radial_energy_density(r: f64, radial: (f64, f64, f64), l: usize, dim: usize, tau: f64) -> f64 {
    let (f, fp, fpp) = radial;
    let n = dim as f64;
    let big_l = (l * (l + dim - 2)) as f64;
    let mixed = fp / r - f / (r * r);
    let hessian = fpp * fpp + 2.0 * big_l * mixed * mixed + (big_l * big_l - (n - 2.0) * big_l) * f * f / r.powi(4)
        - 2.0 * big_l * f * fp / r.powi(3)
        + (n - 1.0) * fp * fp / (r * r);
    let gradient = fp * fp + big_l * f * f / (r * r);
    hessian + tau * gradient
}

/// Rayleigh quotient `(∫_B |D²u|² + τ|∇u|²) / ∮ u²` of `u = R(r) Y_l(θ)` on
/// the unit ball, by Gauss–Legendre quadrature in `r` starting at 32 nodes
/// and doubling until two successive estimates agree to 1e-8 relative.
pub fn rayleigh_quotient<F>(radial: F, l: usize, dim: usize, tau: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64, f64),
{
    check_args(dim, tau)?;
    let boundary = radial(1.0).0;
    if boundary == 0.0 || !boundary.is_finite() {
        return Err(Error::InvalidArgument("radial profile vanishes at r = 1".into()));
    }
    let denominator = boundary * boundary;
    let estimate = |n: usize| {
        GaussLegendre::new(n).integrate(0.0, 1.0, |r| {
            radial_energy_density(r, radial(r), l, dim, tau) * r.powi(dim as i32 - 1)
        }) / denominator
    };
    let mut n = 32;
    let mut previous = estimate(n);
    while n < 4096 {
        n *= 2;
        let current = estimate(n);
        if (current - previous).abs() <= 1e-8 * current.abs().max(1e-300) || current == previous {
            return Ok(current);
        }
        previous = current;
    }
    let current = estimate(n * 2);
    Err(Error::QuadratureNotConverged { previous, current })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub dim: usize,
    pub tau: f64,
    /// `λ_(l)` for `l = 0..=l_max`.
    pub values: Vec<f64>,
    pub passed: bool,
}

/// Checks `λ_(1) < λ_(2) < … < λ_(l_max)`.
pub fn verify_order_monotonicity(dim: usize, tau: f64, l_max: usize) -> Result<MonotonicityReport> {
    check_args(dim, tau)?;
    if l_max < 3 {
        return Err(Error::InvalidArgument("l_max must be >= 3".into()));
    }
    let values = (0..=l_max)
        .map(|l| eigenvalue_of_order(l, dim, tau))
        .collect::<Result<Vec<_>>>()?;
    let passed = values[1..].windows(2).all(|w| w[0] < w[1]);
    Ok(MonotonicityReport {
        dim,
        tau,
        values,
        passed,
    })
}
