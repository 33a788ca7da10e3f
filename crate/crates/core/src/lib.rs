//! Job-worker fit: stochastic ability profiles over subskill difficulty, job
//! error aggregation, Monte Carlo estimates of job success probability, and
//! the phase-transition, merging and compression analyses built on them.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ability;
pub mod dataio;
pub mod error;
pub mod job;
pub mod merging;
pub mod simulate;
pub mod theory;

pub use ability::{AbilityProfile, NoiseKind, NoiseModel, ProfileFamily};
pub use error::{Error, Result};
pub use job::{ErrorModel, JobSpec};
pub use simulate::{SimConfig, SimEstimate, Worker, WorkerTemplate};
