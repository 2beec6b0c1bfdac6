//! Numerical checks of the isoperimetric inequality `λ₂(Ω) ≤ λ₂(Ω*)` for
//! planar domains of fixed area, the trial bound on `1/λ₂ + 1/λ₃` from
//! coordinate functions, and the boundary rearrangement inequality
//! `∮_{∂Ω} f(|x|) dσ ≥ ∮_{∂Ω*} f(|x|) dσ`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{boundary_geometry, StarDomain};
use crate::solver::{solve_domain, SolverParams};

/// Margins above `-MARGIN_TOL` pass; `|margin| ≤ MARGIN_TOL` counts as equality.
pub const MARGIN_TOL: f64 = 1e-7;
/// Allowed violation of the inverse-sum bound.
pub const GAP_TOL: f64 = 1e-8;
/// Allowed violation of the boundary rearrangement inequality.
pub const WEIGHTED_TOL: f64 = 1e-9;
/// Family members must keep `ρ ≥ MIN_RELATIVE_RADIUS · R*` with `R*` the
/// radius of the same-area disk.
pub const MIN_RELATIVE_RADIUS: f64 = 0.5;
const BOUNDARY_NODES: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `ρ = 1 + a cos(kθ)` for each amplitude `a`.
    PerturbedDisk { mode: usize, amplitudes: Vec<f64> },
    /// `ρ = 1 + a cos(2θ)` with `a = (q-1)/(q+1)`, so that the ratio of the
    /// longest to the shortest radius is `q`.
    EllipseLike { aspects: Vec<f64> },
}

/// Serialized flat: `{"kind": "perturbed_disk", "mode": 3, "amplitudes": […],
/// "tau": 1}` or `{"kind": "ellipse_like", "aspects": […], "tau": 1}`, with
/// optional `target_area` (default `π`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFamilySpec")]
pub struct FamilySpec {
    #[serde(flatten)]
    pub kind: FamilyKind,
    pub target_area: f64,
    pub tau: f64,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawKind {
    PerturbedDisk,
    EllipseLike,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamilySpec {
    kind: RawKind,
    mode: Option<usize>,
    amplitudes: Option<Vec<f64>>,
    aspects: Option<Vec<f64>>,
    target_area: Option<f64>,
    tau: f64,
}

impl TryFrom<RawFamilySpec> for FamilySpec {
    type Error = String;

    fn try_from(raw: RawFamilySpec) -> std::result::Result<Self, String> {
        let kind = match raw.kind {
            RawKind::PerturbedDisk => {
                if raw.aspects.is_some() {
                    return Err("perturbed_disk takes 'mode' and 'amplitudes', not 'aspects'".into());
                }
                FamilyKind::PerturbedDisk {
                    mode: raw.mode.ok_or("perturbed_disk requires 'mode'")?,
                    amplitudes: raw.amplitudes.ok_or("perturbed_disk requires 'amplitudes'")?,
                }
            }
            RawKind::EllipseLike => {
                if raw.mode.is_some() || raw.amplitudes.is_some() {
                    return Err("ellipse_like takes 'aspects', not 'mode' or 'amplitudes'".into());
                }
                FamilyKind::EllipseLike {
                    aspects: raw.aspects.ok_or("ellipse_like requires 'aspects'")?,
                }
            }
        };
        Ok(Self {
            kind,
            target_area: raw.target_area.unwrap_or(PI),
            tau: raw.tau,
        })
    }
}

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub parameter: f64,
    pub domain: StarDomain,
    pub is_ball: bool,
}

impl FamilySpec {
    pub fn perturbed_disk(mode: usize, amplitudes: Vec<f64>, tau: f64) -> Self {
        Self {
            kind: FamilyKind::PerturbedDisk { mode, amplitudes },
            target_area: PI,
            tau,
        }
    }

    pub fn ellipse_like(aspects: Vec<f64>, tau: f64) -> Self {
        Self {
            kind: FamilyKind::EllipseLike { aspects },
            target_area: PI,
            tau,
        }
    }

    /// `k = 3` with amplitudes `0, 0.02, …, 0.12`, and aspects
    /// `1.0, 1.1, …, 1.5`.
    pub fn default_families(tau: f64) -> Vec<Self> {
        vec![
            Self::perturbed_disk(3, (0..=6).map(|i| 0.02 * i as f64).collect(), tau),
            Self::ellipse_like((0..=5).map(|i| 1.0 + 0.1 * i as f64).collect(), tau),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::PerturbedDisk { .. } => "perturbed_disk",
            FamilyKind::EllipseLike { .. } => "ellipse_like",
        }
    }

    pub fn members(&self) -> Result<Vec<FamilyMember>> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        let shapes: Vec<(f64, usize, f64)> = match &self.kind {
            FamilyKind::PerturbedDisk { mode, amplitudes } => {
                if *mode == 0 {
                    return Err(Error::InvalidArgument("perturbation mode must be at least 1".into()));
                }
                amplitudes.iter().map(|&a| (a, *mode, a)).collect()
            }
            FamilyKind::EllipseLike { aspects } => {
                for &q in aspects {
                    if !(q >= 1.0 && q.is_finite()) {
                        return Err(Error::InvalidArgument(format!("aspect ratio {q} must be at least 1")));
                    }
                }
                aspects.iter().map(|&q| (q, 2, (q - 1.0) / (q + 1.0))).collect()
            }
        };
        if shapes.is_empty() {
            return Err(Error::InvalidArgument("family has no members".into()));
        }
        let ball_radius = (self.target_area / PI).sqrt();
        shapes
            .into_iter()
            .map(|(parameter, k, a)| {
                if !a.is_finite() {
                    return Err(Error::InvalidArgument(format!("parameter {parameter} is not finite")));
                }
                let domain = StarDomain::cosine_perturbation(1.0, k, a)?.rescale_to_area(self.target_area)?;
                let min = domain.min_radius();
                if min < MIN_RELATIVE_RADIUS * ball_radius {
                    return Err(Error::InvalidArgument(format!(
                        "member {parameter} has minimum radius {min:.4} below {MIN_RELATIVE_RADIUS}·R*"
                    )));
                }
                Ok(FamilyMember {
                    parameter,
                    domain,
                    is_ball: a == 0.0,
                })
            })
            .collect()
    }
}

/// `λ₂` after moving the origin to the boundary centroid.
pub fn lambda2_of(domain: &StarDomain, tau: f64, params: &SolverParams) -> Result<f64> {
    let centered = domain.center_boundary_centroid(domain.resolved_nodes(BOUNDARY_NODES))?;
    let solve = solve_domain(&centered, tau, params)?;
    if solve.solution.len() < 2 {
        return Err(Error::AllFiltered);
    }
    Ok(solve.solution.eigenvalue(2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsoRow {
    pub family: String,
    pub parameter: f64,
    pub area: f64,
    pub tau: f64,
    pub lambda2: f64,
    pub ball_bound: f64,
    pub margin: f64,
    pub is_ball: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsoScan {
    pub rows: Vec<IsoRow>,
    /// Every margin is at least `-MARGIN_TOL`.
    pub inequality_holds: bool,
    /// `|margin| ≤ MARGIN_TOL` at ball members and nowhere else.
    pub equality_only_at_ball: bool,
}

impl IsoScan {
    pub fn verdict(&self) -> bool {
        self.inequality_holds && self.equality_only_at_ball
    }
}

/// Compares each member's `λ₂` with `λ₂` of the same-area disk, both from the
/// solver with the same parameters.
pub fn iso_scan(family: &FamilySpec, params: &SolverParams) -> Result<IsoScan> {
    let members = family.members()?;
    let ball = StarDomain::disk((family.target_area / PI).sqrt())?;
    let ball_bound = lambda2_of(&ball, family.tau, params)?;
    let values: Vec<f64> = members
        .par_iter()
        .map(|m| lambda2_of(&m.domain, family.tau, params))
        .collect::<Result<_>>()?;
    let rows: Vec<IsoRow> = members
        .iter()
        .zip(values)
        .map(|(m, lambda2)| {
            let margin = ball_bound - lambda2;
            IsoRow {
                family: family.name().to_string(),
                parameter: m.parameter,
                area: m.domain.area(),
                tau: family.tau,
                lambda2,
                ball_bound,
                margin,
                is_ball: m.is_ball,
                pass: margin >= -MARGIN_TOL,
            }
        })
        .collect();
    let inequality_holds = rows.iter().all(|r| r.pass);
    let equality_only_at_ball = rows.iter().all(|r| (r.margin.abs() <= MARGIN_TOL) == r.is_ball);
    Ok(IsoScan {
        rows,
        inequality_holds,
        equality_only_at_ball,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InverseSumBound {
    /// `1/λ₂ + 1/λ₃`.
    pub lhs: f64,
    /// `(τ|Ω|)⁻¹ ∮ |x|² dσ`.
    pub rhs: f64,
    pub gap: f64,
    /// `max_l |∮ v_l dσ|` for the trial functions `v_l = (τ|Ω|)^{-1/2} x_l`.
    pub mean_constraint: f64,
}

impl InverseSumBound {
    pub fn holds(&self) -> bool {
        self.gap >= -GAP_TOL
    }
}

/// Trial bound from the coordinate functions, with the origin at the
/// boundary centroid so that their boundary means vanish.
pub fn inverse_sum_bound(domain: &StarDomain, tau: f64, params: &SolverParams) -> Result<InverseSumBound> {
    let n = domain.resolved_nodes(BOUNDARY_NODES);
    let centered = domain.center_boundary_centroid(n)?;
    let solve = solve_domain(&centered, tau, params)?;
    if solve.solution.len() < 3 {
        return Err(Error::AllFiltered);
    }
    let lhs = 1.0 / solve.solution.eigenvalue(2) + 1.0 / solve.solution.eigenvalue(3);
    let quad = boundary_geometry(&centered, n)?;
    let scale = 1.0 / (tau * centered.area());
    let rhs = scale * quad.integrate(quad.points.iter().map(|p| p[0] * p[0] + p[1] * p[1]));
    let mean_constraint = (0..2)
        .map(|l| (scale.sqrt() * quad.integrate(quad.points.iter().map(|p| p[l]))).abs())
        .fold(0.0, f64::max);
    Ok(InverseSumBound {
        lhs,
        rhs,
        gap: lhs - rhs,
        mean_constraint,
    })
}

/// `f(t) = t^p`. In the plane `t ↦ (f(√t) - f(0))√t = t^{(p+1)/2}` is convex
/// exactly when `p ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct WeightFunction {
    power: f64,
}

impl WeightFunction {
    pub const LINEAR: Self = Self { power: 1.0 };
    pub const SQUARE: Self = Self { power: 2.0 };
    pub const QUARTIC: Self = Self { power: 4.0 };

    pub fn catalog() -> [Self; 3] {
        [Self::LINEAR, Self::SQUARE, Self::QUARTIC]
    }

    pub fn power(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::InadmissibleWeight(format!(
                "t^{p}: t^((p+1)/2) is not convex for p < 1"
            )));
        }
        Ok(Self { power: p })
    }

    pub fn exponent(&self) -> f64 {
        self.power
    }

    pub fn eval(&self, t: f64) -> f64 {
        t.powf(self.power)
    }
}

impl TryFrom<f64> for WeightFunction {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::power(p)
    }
}

impl From<WeightFunction> for f64 {
    fn from(w: WeightFunction) -> f64 {
        w.power
    }
}

impl fmt::Display for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.power == 1.0 {
            write!(f, "t")
        } else {
            write!(f, "t^{}", self.power)
        }
    }
}

impl FromStr for WeightFunction {
    type Err = Error;

    /// `t` or `t^p`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let p = match s.strip_prefix('t') {
            Some("") => 1.0,
            Some(rest) => rest
                .strip_prefix('^')
                .and_then(|e| e.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::InadmissibleWeight(format!("cannot parse '{s}', expected t or t^p")))?,
            None => {
                return Err(Error::InadmissibleWeight(format!(
                    "cannot parse '{s}', expected t or t^p"
                )))
            }
        };
        Self::power(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedCheck {
    /// `∮_{∂Ω} f(|x|) dσ` with the origin at the boundary centroid.
    pub lhs: f64,
    /// `2πR f(R)` on the same-area circle.
    pub rhs: f64,
    pub pass: bool,
}

pub fn weighted_boundary_inequality_check(domain: &StarDomain, weight: WeightFunction) -> Result<WeightedCheck> {
    let n = domain.resolved_nodes(BOUNDARY_NODES);
    let centered = domain.center_boundary_centroid(n)?;
    let quad = boundary_geometry(&centered, n)?;
    let lhs = quad.integrate(quad.points.iter().map(|p| weight.eval(p[0].hypot(p[1]))));
    let r = (centered.area() / PI).sqrt();
    let rhs = 2.0 * PI * r * weight.eval(r);
    Ok(WeightedCheck {
        lhs,
        rhs,
        pass: lhs >= rhs - WEIGHTED_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coarse() -> SolverParams {
        SolverParams::default()
    }

    #[test]
    fn default_members_are_admissible_and_area_normalized() {
        for family in FamilySpec::default_families(1.0) {
            let members = family.members().unwrap();
            assert!(members.len() >= 6);
            assert_eq!(members.iter().filter(|m| m.is_ball).count(), 1);
            for m in members {
                assert!((m.domain.area() - PI).abs() < 1e-12);
                assert!(m.domain.min_radius() > 0.5);
            }
        }
    }

    #[test]
    fn ellipse_like_radius_ratio_is_aspect() {
        let family = FamilySpec::ellipse_like(vec![1.3], 1.0);
        let d = &family.members().unwrap()[0].domain;
        assert!((d.max_radius() / d.min_radius() - 1.3).abs() < 1e-9);
    }

    #[test]
    fn rejects_thin_members() {
        assert!(FamilySpec::perturbed_disk(3, vec![0.6], 1.0).members().is_err());
        assert!(FamilySpec::ellipse_like(vec![4.0], 1.0).members().is_err());
        assert!(FamilySpec::ellipse_like(vec![0.9], 1.0).members().is_err());
        assert!(FamilySpec::perturbed_disk(0, vec![0.1], 1.0).members().is_err());
    }

    #[test]
    fn family_spec_json_shape() {
        let json = r#"{"kind":"perturbed_disk","mode":3,"amplitudes":[0.0,0.1],"tau":1.0}"#;
        let spec: FamilySpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec, FamilySpec::perturbed_disk(3, vec![0.0, 0.1], 1.0));
        let bad = r#"{"kind":"ellipse_like","aspects":[1.0],"tau":1.0,"extra":1}"#;
        assert!(serde_json::from_str::<FamilySpec>(bad).is_err());
        let mixed = r#"{"kind":"ellipse_like","aspects":[1.0],"mode":2,"tau":1.0}"#;
        assert!(serde_json::from_str::<FamilySpec>(mixed).is_err());
        let spec = FamilySpec::ellipse_like(vec![1.0, 1.2], 5.0);
        let back: FamilySpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn unit_disk_lambda2_is_tau() {
        for tau in [0.5, 1.0, 5.0] {
            let l2 = lambda2_of(&StarDomain::disk(1.0).unwrap(), tau, &coarse()).unwrap();
            assert!((l2 - tau).abs() < 1e-8 * tau, "{tau}: {l2}");
        }
    }

    #[test]
    fn off_center_disk_is_recentered() {
        let d = StarDomain::disk(1.0).unwrap().with_center([0.3, -0.2]);
        let b = inverse_sum_bound(&d, 1.0, &coarse()).unwrap();
        assert!(b.mean_constraint < 1e-10);
        assert!(b.gap.abs() < 1e-8, "{b:?}");
    }

    #[test]
    fn disk_inverse_sum_is_tight() {
        let b = inverse_sum_bound(&StarDomain::disk(1.0).unwrap(), 1.0, &coarse()).unwrap();
        assert!((b.lhs - 2.0).abs() < 1e-8 && (b.rhs - 2.0).abs() < 1e-12, "{b:?}");
    }

    #[test]
    fn perturbed_inverse_sum_gap_is_positive() {
        let d = StarDomain::cosine_perturbation(1.0, 2, 0.1)
            .unwrap()
            .rescale_to_area(PI)
            .unwrap();
        let b = inverse_sum_bound(&d, 1.0, &coarse()).unwrap();
        assert!(b.gap > 1e-6, "{b:?}");
    }

    #[test]
    fn weighted_inequality_examples() {
        let disk = StarDomain::disk(1.0).unwrap();
        let c = weighted_boundary_inequality_check(&disk, WeightFunction::SQUARE).unwrap();
        assert!((c.lhs - 2.0 * PI).abs() < 1e-12 && (c.rhs - 2.0 * PI).abs() < 1e-12);
        let d3 = StarDomain::cosine_perturbation(1.0, 3, 0.1)
            .unwrap()
            .rescale_to_area(PI)
            .unwrap();
        let c = weighted_boundary_inequality_check(&d3, WeightFunction::SQUARE).unwrap();
        assert!(c.pass && c.lhs > 2.0 * PI + 1e-6);
        let d2 = StarDomain::cosine_perturbation(1.0, 2, 0.05)
            .unwrap()
            .rescale_to_area(PI)
            .unwrap();
        let c = weighted_boundary_inequality_check(&d2, WeightFunction::LINEAR).unwrap();
        let perimeter = boundary_geometry(&d2, 1024).unwrap().length();
        // f = t on a centered domain: ∮|x| ≥ R* |∂Ω| ≥ R* · 2πR*
        assert!(c.pass && c.lhs >= 2.0 * PI && perimeter >= 2.0 * PI);
    }

    #[test]
    fn weight_parsing_and_admissibility() {
        assert_eq!("t".parse::<WeightFunction>().unwrap(), WeightFunction::LINEAR);
        assert_eq!("t^4".parse::<WeightFunction>().unwrap(), WeightFunction::QUARTIC);
        assert_eq!(WeightFunction::SQUARE.to_string(), "t^2");
        assert!(matches!(
            "t^0.5".parse::<WeightFunction>(),
            Err(Error::InadmissibleWeight(_))
        ));
        assert!("x^2".parse::<WeightFunction>().is_err());
        assert!(WeightFunction::power(f64::NAN).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rearrangement_inequality_holds(
            cos in proptest::collection::vec(-0.08f64..0.08, 1..5),
            sin in proptest::collection::vec(-0.08f64..0.08, 1..5),
            p in 1.0f64..5.0,
        ) {
            let d = StarDomain::new(1.0, cos, sin, [0.0, 0.0]).unwrap();
            let c = weighted_boundary_inequality_check(&d, WeightFunction::power(p).unwrap()).unwrap();
            prop_assert!(c.pass, "{:?}", c);
        }
    }
}
