//! Decide degradability and anti-degradability of finite-dimensional quantum
//! channels.
//!
//! A channel `Φ` is *degradable* when some CPT map `Ψ` satisfies
//! `Ψ∘Φ = Φ^C`, where `Φ^C` is the complementary channel (the environment's
//! view of the noise), and *anti-degradable* when its complement is
//! degradable. The crate provides:
//!
//! - an operator-algebra kernel for the complex matrices involved
//!   ([`opalg`]),
//! - channel representations, complements and structural predicates
//!   ([`channel`]),
//! - the decision engine: kernel-condition filter, pseudo-inverse
//!   construction of the candidate degrading map, and an alternating
//!   projection feasibility fallback ([`degrade`]),
//! - closed-form classification for channels with qubit output ([`qubit`]),
//! - generalized Pauli (Weyl–Heisenberg) diagonal channels and their
//!   non-degradability criteria ([`paulidiag`]),
//! - named channel constructions with analytically known complements and
//!   degrading maps ([`construct`]),
//! - coherent-information evaluation and maximization ([`capacity`]),
//! - a file-driven command line front end ([`cli`]).
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod capacity;
pub mod channel;
pub mod cli;
pub mod construct;
pub mod degrade;
pub mod opalg;
pub mod paulidiag;
pub mod qubit;

pub use channel::{ChoiMatrix, KrausChannel};
pub use degrade::{classify, Verdict, VerdictTag};
pub use opalg::{CMatrix, Complex64, DensityMatrix};

/// Default relative tolerance used across the crate.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Errors surfaced by the public API.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
    #[error("trace preservation violated (deviation {0:.3e})")]
    NotTracePreserving(f64),
    #[error("complete positivity violated (min eigenvalue {0:.3e})")]
    NotCompletelyPositive(f64),
    #[error("Kraus set is not in the Choi eigenvector gauge")]
    NotEigenvectorGauge,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("construction rejected: {0}")]
    ConstructionRejected(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
