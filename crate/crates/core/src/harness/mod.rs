//! Experiment configs, runners and result emission.
//!
//! Every experiment is a pure function of its config and root seed. Each
//! independent task draws from its own stream
//! `RandomStream::new(seed, stream_id(n, replicate, role))`, so results do
//! not depend on thread scheduling.

mod config;
mod output;
mod runs;

pub use config::{
    growth_limit, parse_inline, ConfigBuilder, ExperimentConfig, ExperimentKind, OutputFormat, FIELDS,
};
pub use output::{emit_results, render, sort_rows, ResultRow};
pub use runs::{
    run_experiment, run_gaussian_limit, run_lp_convergence, run_moment_audit, run_mp_bound, run_rate_eval,
    run_xi_decay, Check, ExperimentOutcome,
};

use crate::distcore::RandomStream;

/// Purpose of a stream within one `(n, replicate)` task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Role {
    Frame = 1,
    Sample = 2,
    Baseline = 3,
    Xi = 4,
    Moment = 5,
    NegMoment = 6,
    Limit = 7,
}

/// `n << 32 | replicate << 8 | role`; `n < 2^32`, `replicate < 2^24`.
pub fn stream_id(n: usize, replicate: usize, role: Role) -> u64 {
    debug_assert!((n as u64) < 1 << 32 && (replicate as u64) < 1 << 24);
    ((n as u64) << 32) | ((replicate as u64) << 8) | role as u64
}

pub fn task_stream(seed: u64, n: usize, replicate: usize, role: Role) -> RandomStream {
    RandomStream::new(seed, stream_id(n, replicate, role))
}
