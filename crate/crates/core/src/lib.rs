//! Asymptotic key rates for entanglement-based continuous-variable QKD with
//! noiseless linear amplifiers.
//!
//! The crate is organized bottom-up:
//!
//! - [`gaussian`]: covariance matrices, channels, beamsplitters, Gaussian
//!   measurements, symplectic spectra and entropies.
//! - [`nla`]: noiseless linear amplification in the Husimi domain, the
//!   equivalent-channel map and its physicality limits.
//! - [`protocols`]: entanglement-in-the-middle and untrusted-relay states,
//!   mutual information, Holevo bounds and key rates.
//! - [`sweep`]: distance grids, maximal-distance search, gain optimization and
//!   CSV output.

pub mod error;
pub mod gaussian;
pub mod nla;
pub mod protocols;
pub mod sweep;

pub use error::{Error, Result};
