//! Gridless channel estimation for frequency-selective mmWave MIMO-OFDM links.
//!
//! The crate simulates hybrid-architecture training over a geometric wideband
//! channel and estimates each subcarrier's channel matrix by atomic-norm
//! minimization over two-level Toeplitz matrices, by its reweighted
//! refinement, or by on-grid orthogonal matching pursuit. The [`harness`]
//! module runs Monte-Carlo NMSE sweeps over SNR and training length.

pub mod anm;
pub mod atomic;
pub mod channel;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod omp;
pub mod ram;
pub mod sounding;

pub use error::{Error, Result};
