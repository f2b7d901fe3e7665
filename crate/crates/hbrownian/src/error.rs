use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point lies off the manifold: distance {dist:.3e} exceeds tolerance {tol:.3e}")]
    OffManifold { dist: f64, tol: f64 },

    #[error("vector is not tangent at the given point: normal component {dev:.3e}")]
    NotTangent { dev: f64 },

    #[error("zero vector where a direction is required")]
    ZeroVector,

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("empty sample")]
    EmptySample,

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
