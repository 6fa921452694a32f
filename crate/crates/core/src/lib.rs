//! Storage-capacity analysis of the zero-temperature Hopfield model.
//!
//! The crate has two halves that cross-check each other:
//!
//! * a **rate-functional side** ([`specfun`], [`functional`], [`saddle`],
//!   [`capacity`]) that evaluates and optimizes the variational upper bound
//!   on the exponential rate of field-positivity probabilities, certifies
//!   the energy-barrier condition over a threshold grid, and locates the
//!   critical pair (α_c ≈ 0.11326, δ_c ≈ 0.00777);
//! * a **simulation side** ([`hopfield`]) with a bit-packed, exactly
//!   integer-arithmetic Hopfield network: effective fields, zero-temperature
//!   dynamics, shell local-minimum predicates, and seeded Monte Carlo
//!   estimators whose outcomes are compared against the analytic bounds.
//!
//! Everything is deterministic: optimizers are derivative-free with fixed
//! schedules, and all randomness flows through counter-based streams keyed
//! by explicit seeds. The `hopcap` binary exposes the whole surface as
//! subcommands with JSON/CSV output; `examples/` shows library usage.

pub mod capacity;
pub mod cli;
pub mod functional;
pub mod hopfield;
pub mod rng;
pub mod saddle;
pub mod specfun;

use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    Domain(String),
    /// A root-finding bracket showed no sign change.
    NoRoot { lo: f64, hi: f64 },
    /// An iterative solver exhausted its iteration budget.
    NonConvergence(String),
    /// The negativity window in δ does not exist at the given load.
    WindowCollapsed { delta_min: f64, phi_min: f64 },
    /// All candidate evaluations were -inf or NaN.
    Degenerate(String),
    /// A configured resource cap would be exceeded.
    Resource(String),
    /// Invalid user-facing configuration (CLI/config file).
    Invalid(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::NoRoot { lo, hi } => {
                write!(f, "no root: residual has one sign on [{lo:e}, {hi:e}]")
            }
            Error::NonConvergence(m) => write!(f, "did not converge: {m}"),
            Error::WindowCollapsed { delta_min, phi_min } => write!(
                f,
                "negativity window collapsed: min Phi0 = {phi_min:e} at delta = {delta_min:e}"
            ),
            Error::Degenerate(m) => write!(f, "degenerate parameters: {m}"),
            Error::Resource(m) => write!(f, "resource cap exceeded: {m}"),
            Error::Invalid(m) => write!(f, "invalid input: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
