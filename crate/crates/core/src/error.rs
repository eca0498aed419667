use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {t} outside domain [{a}, {b})")]
    Domain { t: f64, a: f64, b: f64 },

    #[error("integral of tr H diverges at the right endpoint (limit point case)")]
    Unbounded,

    #[error("operation requires the limit circle case")]
    LimitPoint,

    #[error("Hamiltonian is not definite (det Omega(a,b) = {det:e})")]
    Indefinite { det: f64 },

    #[error("r = {r} is not above the threshold r0 = {r0}")]
    Threshold { r: f64, r0: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("tolerance not met (partial value {partial}, error estimate {estimate:e})")]
    Tolerance { partial: f64, estimate: f64 },

    #[error("spectrum only known up to R = {have}, requested {want}")]
    InsufficientSpectrum { have: f64, want: f64 },

    #[error("divergent integral: {0}")]
    Divergent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
