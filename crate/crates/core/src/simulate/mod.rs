//! Monte Carlo estimation of job success probability and average error.
//!
//! Every trial draws from its own ChaCha stream (master seed, stream = trial
//! index) and consumes uniforms in a fixed order, so results do not depend on
//! thread count and re-running with the same seed at different parameter
//! values gives common random numbers.

mod engine;
mod oracle;
mod sweep;
mod worker;

pub use engine::{
    draw_error_matrix, estimate_err_avg, estimate_success_probability, exact_err_avg, ErrAvgEstimate, SimConfig, SimEstimate,
    DEFAULT_SEED,
};
pub use oracle::brute_force_success_probability;
pub use sweep::{
    default_step, estimate_at, finite_diff_derivative, grid2, sweep, sweep2, write_sweep_csv, Heatmap, Knob, MergeSpec, MergeStrategy, Param,
    SweepPoint, WorkerTemplate,
};
pub use worker::{LevelProfile, Selection, Side, Worker};
