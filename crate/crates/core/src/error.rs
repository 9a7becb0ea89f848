use thiserror::Error;

/// Errors raised by the Gaussian-state engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("mode index {mode} out of range for a {n_modes}-mode state")]
    ModeIndex { mode: usize, n_modes: usize },

    #[error("matrix is not a valid covariance shape: {rows}x{cols}")]
    Shape { rows: usize, cols: usize },

    #[error("covariance matrix is not symmetric (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("covariance matrix is unphysical (smallest symplectic eigenvalue {min_eigenvalue})")]
    Unphysical { min_eigenvalue: f64 },

    #[error("measured quadrature variance {variance:e} is too small to condition on")]
    DegenerateMeasurement { variance: f64 },

    #[error("matrix is not in two-mode normal form (deviation {deviation:e})")]
    NotNormalForm { deviation: f64 },

    #[error("amplifier gains (g1 = {g1}, g2 = {g2}) leave the physical region; keep g below g_max")]
    UnphysicalAmplification { g1: f64, g2: f64 },

    #[error("matrix inversion failed: {0}")]
    Singular(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}
