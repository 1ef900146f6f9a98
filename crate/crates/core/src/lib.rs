//! Monte Carlo and numerical-verification toolkit for p-radial distributions
//! on ℓ_p^n-balls, their projections onto Haar-random k-frames, and the limit
//! measures and rate function governing the large deviations of those
//! projections.
//!
//! The modules are layered bottom-up:
//!
//! * [`distcore`]: reproducible random streams, p-generalized Gaussian and
//!   gamma samplers, exact moments.
//! * [`pball`]: cone, uniform and p-radial laws on the ℓ_p^n-ball.
//! * [`stiefel`]: Haar frames on the Stiefel manifold and projection.
//! * [`metrics`]: exact Lévy–Prokhorov and Wasserstein-1 distances between
//!   discrete measures.
//! * [`ratefn`]: rate function, limit-measure sampler, negative-moment bounds.
//! * [`harness`]: experiment configs, runners and result emission.

pub mod distcore;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod pball;
pub mod ratefn;
pub mod stats;
pub mod stiefel;

pub use error::{Error, Result};
