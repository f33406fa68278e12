//! Simulator and algorithm library for scheduling in adversarial multi-hop
//! queueing networks under bandit feedback.
//!
//! The crate has three layers:
//!
//! - the network model (`net`): topology, queue state, and the exact
//!   queue-update dynamics, including stochastic realization of transmissions
//!   from link allocations;
//! - the learning engines (`olo`, `bco`) and the round-loop policies that use
//!   them (`sched`): the `nso` stability scheduler runs one magnitude-adaptive
//!   online linear optimizer per link, the `umo2` utility scheduler adds a
//!   one-point bandit convex optimizer over the arrival set;
//! - the experiment layer (`adversary`, `metrics`, `scenario`, `harness`):
//!   oblivious trace generation with certified reference policies, Lyapunov
//!   and regret metrics, and a deterministic run/sweep harness with CSV
//!   output.
//!
//! Everything is deterministic given a scenario and a seed.

pub mod adversary;
pub mod bco;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod net;
pub mod olo;
pub mod scenario;
pub mod sched;
pub mod simplex;

pub use error::AnoqError;

/// Absolute tolerance for simplex and box membership checks.
pub const FEASIBILITY_TOL: f64 = 1e-9;
