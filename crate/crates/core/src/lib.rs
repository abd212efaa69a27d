//! Sequential community-mode estimation in the fixed-confidence setting.
//!
//! A population is partitioned into communities; samples are drawn uniformly
//! at random and the goal is to name the largest community with error
//! probability at most `δ`, using as few samples as possible. Two sampling
//! models are supported: identityless (only the community label is revealed)
//! and identity-based (the sampler also reports whether the individual was
//! seen before).
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] and [`sampler`]: instances, observation state, random streams.
//! * [`iless`] and [`ib`]: the stopping statistics for each model.
//! * [`algorithms`]: NI-ME, NI-ME-1v1, IB-CME and IB-CME+1v1.
//! * [`bounds`]: lower bounds on the expected stopping time.
//! * [`oracle`]: brute-force references for testing.
//! * [`bench`]: the Monte-Carlo experiment harness.

pub mod algorithms;
pub mod bench;
pub mod bounds;
pub mod error;
pub mod ib;
pub mod iless;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod sampler;

pub use algorithms::{run_trial, threshold_beta, RuleFired, TrialResult};
pub use error::{Error, Result};
pub use model::{Algorithm, Instance, Observation, ObservationState, PriorSpec, RunConfig};
pub use sampler::RngStream;
