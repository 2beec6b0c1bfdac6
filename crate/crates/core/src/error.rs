use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("power series for I_{order}({z}) did not converge within {terms} terms")]
    SeriesNotConverged { order: f64, z: f64, terms: usize },

    #[error("degenerate denominator for angular order {l}: {value:.3e} (terms of size {scale:.3e})")]
    DegenerateDenominator { l: usize, value: f64, scale: f64 },

    #[error("radial quadrature did not converge (last two estimates {previous:.12e}, {current:.12e})")]
    QuadratureNotConverged { previous: f64, current: f64 },

    #[error("order eigenvalues are not increasing: λ_({l}) = {lower:.12e} >= λ_({next}) = {upper:.12e}")]
    NonMonotone {
        l: usize,
        next: usize,
        lower: f64,
        upper: f64,
    },

    #[error("boundary radius is not positive: min {min:.3e} at θ = {theta:.6}")]
    NonPositiveRadius { min: f64, theta: f64 },

    #[error("Bessel trial function evaluated {distance:.1e} from the star center")]
    NearCenter { distance: f64 },

    #[error("no basis directions survive filtering")]
    AllFiltered,

    #[error("eigen solver failed: {0}")]
    EigenSolver(String),

    #[error("invalid symmetric-function spec: {0}")]
    InvalidSpec(String),

    #[error("eigenvalue cluster is not degenerate: relative spread {spread:.3e}")]
    NonDegenerateCluster { spread: f64 },

    #[error("missing boundary trace for eigenvalue index {0}")]
    MissingTrace(usize),

    #[error("eigenvalue branches cross within step t = {t:e}; cannot track index {index}")]
    TrackingAmbiguity { t: f64, index: usize },

    #[error("inadmissible weight function: {0}")]
    InadmissibleWeight(String),
}

pub type Result<T> = std::result::Result<T, Error>;
