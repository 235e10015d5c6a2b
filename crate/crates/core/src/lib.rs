//! Certified spectral information for one-dimensional discrete Schrödinger
//! operators `H = V + Δ` with ergodic potentials.

// `!(a < b)` is how inputs are checked so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod gaps;
pub mod io;
pub mod lyapunov;
pub mod potentials;
pub mod tridiag;

pub use bounds::{PhaseGrid, SigmaOptions, SlackMode, SpectrumBound};
pub use error::{Error, Result};
pub use gaps::{DistanceProfile, GapBound, GapCertificate};
pub use lyapunov::{LyapunovCurve, TransferState};
pub use potentials::{Family, Frequency, PhasePoint, PotentialSpec, Turn};
pub use tridiag::{build_restriction, EigenPair, TridiagonalOperator};

/// Crate version, echoed in output provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
