//! Recurring concept-drift detection for data streams with a GAN whose
//! discriminator grows one class per newly seen distribution.
//!
//! The crate is organized bottom-up:
//!
//! - [`nn`]: dense networks, manual backprop, Adadelta
//! - [`detector`]: standardization, GAN training, batch-consensus drift rule
//!   and the registry of seen distributions
//! - [`tree`]: Hoeffding tree used as the secondary classifier
//! - [`strategy`]: the drift-aware strategy and three baselines
//! - [`stream`]: CSV/ARFF loading and synthetic recurring-drift streams
//! - [`eval`]: prequential evaluation, detection scoring and reports
//!
//! Runnable walkthroughs live in `examples/`; the `driftbench` binary wraps
//! the evaluation harness for command-line use.

pub mod detector;
pub mod error;
pub mod eval;
pub mod nn;
pub mod strategy;
pub mod stream;
pub mod tree;

pub use error::{Error, Result};
