use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum UwdgError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("flux configuration unsupported: {0}")]
    Unsupported(String),
    #[error("singular block-circulant system at frequency {frequency} (condition number {condition:.3e})")]
    Singular { frequency: usize, condition: f64 },
    #[error("projection undefined: {0}")]
    ProjectionUndefined(String),
    #[error("time integration unstable: norm grew by {growth:.3e} with dt = {dt:.6e}")]
    Unstable { dt: f64, growth: f64 },
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, UwdgError>;
