use thiserror::Error;

use crate::grid::Statistics;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("statistics mismatch: expected {expected:?}, found {found:?}")]
    Statistics {
        expected: Statistics,
        found: Statistics,
    },

    #[error("series are defined on different grids")]
    GridMismatch,

    #[error("tau mesh too coarse: {points_per_period:.2} points per period of the highest frequency (need at least 4)")]
    Resolution { points_per_period: f64 },

    #[error("tau = {tau} lies outside {range}")]
    TauDomain { tau: f64, range: &'static str },

    #[error("near-singular resummation at n = {n}: |1 - G*Sigma| = {magnitude:.3e}")]
    NearSingular { n: i64, magnitude: f64 },

    #[error("extraction undefined for zero coupling")]
    ExtractionUndefined,

    #[error("division by a vanishing correlator value at n = {n}")]
    Division { n: i64 },

    #[error("spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("Hilbert space dimension {dimension} exceeds the budget of {budget}")]
    Dimension { dimension: usize, budget: usize },

    #[error("matrix is not Hermitian: max asymmetry {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },

    #[error("coincident imaginary times: ordering is ambiguous")]
    DegenerateTimes,

    #[error("truncation not converged: {0}")]
    Convergence(String),

    #[error("ill-conditioned continuation: max relative deviation {max_deviation:.3e} at interpolation points")]
    IllConditioned { max_deviation: f64 },

    #[error("continued-fraction evaluation overflowed at omega = {omega}")]
    Overflow { omega: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
