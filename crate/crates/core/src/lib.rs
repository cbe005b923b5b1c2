//! Seedable simulator for group online learning over a broadcast network.
//!
//! M users repeatedly pick K of N stochastic options. Depending on the
//! disclosure regime they see each other's decisions, and possibly their
//! rewards, and use that to speed up their own UCB-style learning. The
//! harness measures weak regret and, with diverse preferences, how often
//! users misjudge each other's preference group.

pub mod broadcast;
pub mod classify;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod policies;
pub mod rng;

pub use error::{Error, Result};
