//! Exact minimal misclassification probabilities for universal quantum
//! learning machines that discriminate two unknown qubit templates.
//!
//! A machine receives `n` copies of each template plus one test qubit and must
//! decide which template the test qubit was prepared in. The optimal error is
//! `½ − ¼‖α − β‖₁` where `α`, `β` are the prior-averaged joint states of the
//! `2n + 1` qubits. Thanks to the `SU(2) × S_n × S_n` symmetry, `α − β`
//! splits into `1×1` and `2×2` blocks labelled by angular momenta `(s, t, q)`,
//! which makes the error computable exactly for any `n`.
//!
//! Modules:
//!
//! - [`angular`]: half-integer spin labels, Clebsch–Gordan and 6j symbols,
//!   recoupling coefficients and sector enumeration.
//! - [`priors`]: twirl weights `f_j^(n)` for fixed-purity and hard-sphere priors.
//! - [`spectrum`]: block assembly, eigenvalues and the exact error probability.
//! - [`asymptotics`]: large-`n` expansions, Helstrom baselines, moments.
//! - [`oracle`]: brute-force dense construction for `n ≤ 2`.
//! - [`povm`]: the explicit `n = 1` measurement and a noisy circuit simulator.

#![forbid(unsafe_code)]

pub mod angular;
pub mod asymptotics;
pub mod linalg;
pub mod logmath;
pub mod oracle;
pub mod povm;
pub mod priors;
pub mod quadrature;
pub mod spectrum;

pub use angular::{CaseTag, SectorKey, SpinLabel};
pub use asymptotics::{helstrom_avg, AsymptoticEstimate};
pub use priors::PriorScenario;
pub use spectrum::{p_err_min, ErrorReport, SpectrumEntry};

use thiserror::Error;

/// Errors reported by the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spin label {label} is outside the allowed range: {reason}")]
    InvalidSpin { label: String, reason: String },

    #[error("scenario {0} is not supported by this operation")]
    UnsupportedScenario(String),

    #[error("n = {n} exceeds the limit {cap} of this operation")]
    CapExceeded { n: u32, cap: u32 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("bound violated: {0}")]
    BoundViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
