//! Subcommand arguments. Each struct is both a clap argument group and the
//! schema of the matching `run-config` JSON block.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::de::{self, IgnoredAny, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use steklov_core::geometry::{StarDomain, StarDomainSpec};
use steklov_core::solver::{QuadratureSizes, SolverParams};

use crate::error::CliError;
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "steklov", version, about = "Biharmonic Steklov eigenvalue experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form spectrum of the unit ball, sorted with multiplicity.
    BallSpectrum(BallSpectrumArgs),
    /// Eigenvalues of a star-shaped domain.
    Solve(SolveArgs),
    /// Shape derivative of a symmetric function of a cluster of eigenvalues.
    ShapeDerivative(ShapeDerivativeArgs),
    /// How far the shape-derivative integrand is from constant.
    Criticality(CriticalityArgs),
    /// Neumann eigenvalues on the disk with mass concentrating at the boundary.
    Concentration(ConcentrationArgs),
    /// λ₂ across a family of domains of fixed area against the same-area disk.
    IsoScan(IsoScanArgs),
    /// Coordinate-function bound on 1/λ₂ + 1/λ₃ and boundary moment inequalities.
    InverseSum(InverseSumArgs),
    /// Run the experiment described by a JSON config file.
    RunConfig(RunConfigArgs),
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputArgs {
    /// Output format; each command has its own default.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long = "output", short = 'o')]
    #[serde(rename = "path")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverArgs {
    /// Highest angular order of the trial functions.
    #[arg(long = "kmax", default_value_t = 10)]
    pub k_max: usize,
    /// Relative cutoff for filtering ill-conditioned directions.
    #[arg(long, default_value_t = 1e-12)]
    pub svd_tol: f64,
    /// Radial Gauss–Legendre nodes.
    #[arg(long, default_value_t = 32)]
    pub n_r: usize,
    /// Angular nodes for interior quadrature.
    #[arg(long, default_value_t = 256)]
    pub n_theta: usize,
    /// Boundary quadrature nodes.
    #[arg(long, default_value_t = 512)]
    pub n_boundary: usize,
}

impl Default for SolverArgs {
    fn default() -> Self {
        let p = SolverParams::default();
        Self {
            k_max: p.k_max,
            svd_tol: p.svd_tol,
            n_r: p.quad.n_r,
            n_theta: p.quad.n_theta,
            n_boundary: p.quad.n_boundary,
        }
    }
}

impl SolverArgs {
    pub fn params(&self) -> Result<SolverParams, CliError> {
        if self.k_max == 0 || self.n_r == 0 || self.n_theta == 0 || self.n_boundary == 0 {
            return Err(CliError::Validation(
                "k_max and quadrature sizes must be positive".into(),
            ));
        }
        if !(self.svd_tol > 0.0 && self.svd_tol < 1.0) {
            return Err(CliError::Validation(format!(
                "svd_tol {} must lie in (0, 1)",
                self.svd_tol
            )));
        }
        Ok(SolverParams {
            k_max: self.k_max,
            svd_tol: self.svd_tol,
            quad: QuadratureSizes {
                n_r: self.n_r,
                n_theta: self.n_theta,
                n_boundary: self.n_boundary,
            },
        })
    }
}

/// A domain file path, or an inline `{a0, cos_coeffs, sin_coeffs, center}`
/// object in a config.
#[derive(Debug, Clone)]
pub enum DomainSource {
    File(PathBuf),
    Inline(StarDomainSpec),
}

impl FromStr for DomainSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(DomainSource::File(PathBuf::from(s)))
    }
}

impl<'de> Deserialize<'de> for DomainSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = DomainSource;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a domain file path or an object {a0, cos_coeffs, sin_coeffs, center}")
            }

            fn visit_str<E: de::Error>(self, s: &str) -> Result<DomainSource, E> {
                Ok(DomainSource::File(PathBuf::from(s)))
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<DomainSource, A::Error> {
                StarDomainSpec::deserialize(de::value::MapAccessDeserializer::new(map)).map(DomainSource::Inline)
            }
        }
        d.deserialize_any(V)
    }
}

impl DomainSource {
    /// Relative paths are resolved against `base` when given.
    pub fn load(&self, base: Option<&Path>) -> Result<StarDomain, CliError> {
        let spec = match self {
            DomainSource::Inline(spec) => spec.clone(),
            DomainSource::File(path) => {
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Validation(format!("cannot read domain file {}: {e}", path.display())))?;
                crate::config::parse_json::<StarDomainSpec>(&text)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
            }
        };
        StarDomain::try_from(spec).map_err(CliError::from)
    }
}

/// `AUTO` (the cluster containing index 2) or explicit 1-based indexes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum IndexSelection {
    #[serde(serialize_with = "auto_str")]
    Auto,
    Explicit(Vec<usize>),
}

fn auto_str<S: serde::Serializer>(s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str("AUTO")
}

impl FromStr for IndexSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(IndexSelection::Auto);
        }
        let indices = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("'{t}' is not an eigenvalue index"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if indices.is_empty() || indices.contains(&0) {
            return Err("indexes are 1-based and the list must be non-empty".into());
        }
        Ok(IndexSelection::Explicit(indices))
    }
}

impl<'de> Deserialize<'de> for IndexSelection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = IndexSelection;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"AUTO\" or a list of 1-based eigenvalue indexes")
            }

            fn visit_str<E: de::Error>(self, s: &str) -> Result<IndexSelection, E> {
                s.parse().map_err(E::custom)
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<IndexSelection, A::Error> {
                let mut v = Vec::new();
                while let Some(j) = seq.next_element::<usize>()? {
                    if j == 0 {
                        return Err(de::Error::custom("eigenvalue indexes are 1-based"));
                    }
                    v.push(j);
                }
                if v.is_empty() {
                    return Err(de::Error::custom("index list is empty"));
                }
                Ok(IndexSelection::Explicit(v))
            }
        }
        d.deserialize_any(V)
    }
}

fn default_auto() -> IndexSelection {
    IndexSelection::Auto
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpectrumArgs {
    /// The config's `command` key, already consumed by the dispatcher.
    #[arg(skip)]
    #[serde(default, rename = "command")]
    _command: IgnoredAny,
    /// Space dimension N ≥ 2.
    #[arg(long)]
    pub dim: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    /// Number of eigenvalues, counted with multiplicity.
    #[arg(long)]
    pub count: usize,
    #[command(flatten)]
    #[serde(default)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    /// The config's `command` key, already consumed by the dispatcher.
    #[arg(skip)]
    #[serde(default, rename = "command")]
    _command: IgnoredAny,
    #[arg(long)]
    pub domain: DomainSource,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    /// Report only the first COUNT eigenvalues.
    #[arg(long)]
    #[serde(default)]
    pub count: Option<usize>,
    /// Emit the boundary trace of eigenfunction J instead of the spectrum.
    #[arg(long, value_name = "J")]
    #[serde(default)]
    pub trace: Option<usize>,
    #[command(flatten)]
    #[serde(default)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(default)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeDerivativeArgs {
    /// The config's `command` key, already consumed by the dispatcher.
    #[arg(skip)]
    #[serde(default, rename = "command")]
    _command: IgnoredAny,
    #[arg(long)]
    pub domain: DomainSource,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    /// Eigenvalue indexes F: AUTO or a comma-separated list.
    #[arg(long = "F", default_value = "AUTO")]
    #[serde(rename = "F", default = "default_auto")]
    pub indices: IndexSelection,
    /// Degree s of the symmetric function, 1 ≤ s ≤ |F|.
    #[arg(long, default_value_t = 1)]
    #[serde(default = "one")]
    pub s: usize,
    /// Normal speed g(θ), e.g. `cos2`, `sin3+0.5*cos1`, `1+0.2*cos4`.
    #[arg(long)]
    pub field: String,
    /// Remove the dσ-mean of the field so that the area is preserved.
    #[arg(long)]
    #[serde(default)]
    pub project: bool,
    /// Also estimate the derivative by central differences of re-solved domains.
    #[arg(long)]
    #[serde(default)]
    pub validate_fd: bool,
    /// Decreasing finite-difference steps.
    #[arg(long, value_delimiter = ',', default_value = "2e-3,1e-3,5e-4")]
    #[serde(default = "default_steps")]
    pub fd_steps: Vec<f64>,
    #[command(flatten)]
    #[serde(default)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(default)]
    pub output: OutputArgs,
}

fn one() -> usize {
    1
}

fn default_steps() -> Vec<f64> {
    vec![2e-3, 1e-3, 5e-4]
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalityArgs {
    /// The config's `command` key, already consumed by the dispatcher.
    #[arg(skip)]
    #[serde(default, rename = "command")]
    _command: IgnoredAny,
    #[arg(long)]
    pub domain: DomainSource,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    #[arg(long = "F", default_value = "AUTO")]
    #[serde(rename = "F", default = "default_auto")]
    pub indices: IndexSelection,
    #[command(flatten)]
    #[serde(default)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(default)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationArgs {
    /// The config's `command` key, already consumed by the dispatcher.
    #[arg(skip)]
    #[serde(default, rename = "command")]
    _command: IgnoredAny,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    /// Strictly decreasing collar widths.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub eps: Vec<f64>,
    /// Report eigenvalues j = 1..=J.
    #[arg(long, value_name = "J")]
    pub modes: usize,
    /// Elements in [0, 1-ε].
    #[arg(long, default_value_t = 40)]
    #[serde(default = "default_bulk")]
    pub bulk_elements: usize,
    /// Elements in the collar [1-ε, 1].
    #[arg(long, default_value_t = 8)]
    #[serde(default = "default_layer")]
    pub layer_elements: usize,
    /// Grading exponent clustering bulk nodes toward the collar.
    #[arg(long, default_value_t = 1.5)]
    #[serde(default = "default_grading")]
    pub grading: f64,
    #[command(flatten)]
    #[serde(default)]
    pub output: OutputArgs,
}

fn default_bulk() -> usize {
    40
}

fn default_layer() -> usize {
    8
}

fn default_grading() -> f64 {
    1.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum FamilyChoice {
    PerturbedDisk,
    EllipseLike,
    All,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsoScanArgs {
    /// The config's `command` key, already consumed by the dispatcher.
    #[arg(skip)]
    #[serde(default, rename = "command")]
    _command: IgnoredAny,
    #[arg(long, value_enum, default_value = "all")]
    #[serde(default = "default_family")]
    pub family: FamilyChoice,
    /// Amplitudes (perturbed_disk) or aspect ratios (ellipse_like); defaults
    /// to the built-in grid.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    pub params: Vec<f64>,
    /// Angular mode of the perturbed disk.
    #[arg(long, default_value_t = 3)]
    #[serde(default = "default_mode")]
    pub mode: usize,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.5,1,5",
        allow_negative_numbers = true
    )]
    #[serde(default = "default_taus")]
    pub tau: Vec<f64>,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    #[serde(default = "default_area")]
    pub area: f64,
    #[command(flatten)]
    #[serde(default)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(default)]
    pub output: OutputArgs,
}

fn default_family() -> FamilyChoice {
    FamilyChoice::All
}

fn default_mode() -> usize {
    3
}

fn default_taus() -> Vec<f64> {
    vec![0.5, 1.0, 5.0]
}

fn default_area() -> f64 {
    std::f64::consts::PI
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseSumArgs {
    /// The config's `command` key, already consumed by the dispatcher.
    #[arg(skip)]
    #[serde(default, rename = "command")]
    _command: IgnoredAny,
    #[arg(long)]
    pub domain: DomainSource,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    /// Weights f for the boundary inequality, e.g. `t,t^2,t^4`.
    #[arg(long, value_delimiter = ',', default_value = "t,t^2,t^4")]
    #[serde(default = "default_weights")]
    pub weights: Vec<String>,
    #[command(flatten)]
    #[serde(default)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(default)]
    pub output: OutputArgs,
}

fn default_weights() -> Vec<String> {
    vec!["t".into(), "t^2".into(), "t^4".into()]
}

#[derive(Debug, Clone, Args)]
pub struct RunConfigArgs {
    /// JSON experiment config.
    pub config: PathBuf,
    /// Overrides the config's `output` block.
    #[command(flatten)]
    pub output: OutputArgs,
}
