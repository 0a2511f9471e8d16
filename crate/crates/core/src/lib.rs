//! Finite-time consensus topologies and gradient tracking.
//!
//! The crate is split the same way the tooling is used:
//!
//! * [`matkit`]: dense matrix kernels (Kronecker products, perfect shuffles,
//!   stochasticity residuals, spectral deviation).
//! * [`topology`]: constructors for one-peer exponential graphs, one-peer
//!   hyper-cubes, p-peer hyper-cuboids and de Bruijn graphs, their static
//!   variants, and exact verification of the finite-time consensus property.
//! * [`optim`]: the nonconvex regularized least-squares benchmark with exact
//!   and noisy gradient oracles.
//! * [`algorithms`]: synchronous-round gradient tracking (GT-FT / static GT)
//!   and DGD steppers, warm-up and stepsize tuning.
//! * [`harness`]: experiment presets, metric traces, CSV output and the CLI.

pub mod algorithms;
pub mod harness;
pub mod matkit;
pub mod optim;
pub mod topology;

pub use matkit::{DenseMatrix, PermutationMap};
pub use topology::{GraphFamily, MixingMatrix, TopologySequence};

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what} did not converge within {iters} iterations")]
    NonConvergence { what: &'static str, iters: usize },
    #[error("iterate diverged at round {round}: norm {norm:e} exceeds the guard")]
    Divergence { round: usize, norm: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than by a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::DimensionMismatch(_) | Error::TooLarge(_) | Error::InvalidArgument(_) | Error::Parse(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
