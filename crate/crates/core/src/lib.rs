//! Exact-plus-simulation engine for a discrete-time two-line risk model
//! with common shocks.
//!
//! Each period is quiet, a type-1 event, a type-2 event, or a common shock
//! hitting both lines at once; claims are positive integers and the premium
//! is one unit per period. The crate computes the closed-form counting,
//! aggregate-claim and ruin quantities of the model, cross-validates them
//! against an independent finite-horizon dynamic program, and ships a
//! seeded, thread-count-independent Monte Carlo sampler of the underlying
//! process and its stochastically equivalent constructions.

pub mod aggregate;
pub mod counting;
pub mod model;
pub mod pmf;
pub mod ruin;
pub mod simulate;
pub mod stats;

pub use model::{ClaimLaw, ModelError, ModelSpec, ModelSummary, ShockJointLaw, ShockParams};
pub use pmf::{Pmf, PmfError};

/// Largest horizon served by the dense exact tables; longer horizons are
/// the simulator's job.
pub const DENSE_HORIZON_CAP: usize = 64;
