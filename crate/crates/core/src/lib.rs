//! Low-density-spreading NOMA uplink: deterministic-equivalent ergodic
//! mutual information, KKT-guided sparse spreading design, and Monte-Carlo
//! validation over Rayleigh fading.
//!
//! The pipeline is split the same way an experiment runs:
//!
//! * [`model`]: problem instances, spreading matrices, seeded randomness and
//!   channel sampling.
//! * [`detequiv`]: the coupled fixed point, the deterministic EMI and the
//!   optimality certificate (`r*`, `beta_k`, sub-channel loads).
//! * [`allocator`]: the greedy fragment partitioner and the dense, regular
//!   and random baselines.
//! * [`montecarlo`]: exact EMI by simulation and residual statistics.
//! * [`harness`]: experiment configuration, sweeps and CSV output.
//!
//! All rates are computed in nats; conversion to bits happens only when
//! results are written out.

pub mod allocator;
pub mod detequiv;
mod error;
pub mod harness;
pub mod model;
pub mod montecarlo;

pub use error::{Error, Result};
