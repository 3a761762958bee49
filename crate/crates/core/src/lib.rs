//! Poisson probabilistic group testing.
//!
//! The number of defectives among `n` subjects follows a right-truncated
//! Poisson law. This crate provides that model, nonadaptive pooling designs
//! and their decoders, a staged semi-adaptive algorithm, evaluators for the
//! lower and upper bounds on the number of tests, and a Monte Carlo harness
//! tying them together.

pub mod bits;
pub mod bounds;
pub mod channel;
pub mod decode;
pub mod design;
pub mod dist;
pub mod error;
pub mod harness;
pub mod numeric;
pub mod semiadaptive;

pub use bits::BitVec;
pub use bounds::{BoundReport, ExponentPoint, Unit};
pub use channel::{ErrorMode, Syndrome};
pub use decode::{DecodeResult, DecodeStatus};
pub use design::{Method1Params, TestMatrix};
pub use dist::{Regime, TruncatedPoisson};
pub use error::{Error, Result};
pub use harness::{AggregateReport, ExperimentConfig, Scheme, TrialReport};
pub use semiadaptive::{StagePlan, StageTrace};
