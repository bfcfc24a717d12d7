//! Tracking fixed points of time-varying contraction maps.
//!
//! The crate covers the synchronous running iteration `x^(t+1) = f̃^(t)(x^(t))`,
//! its asynchronous block-wise counterpart with delayed and dropped messages,
//! closed-form tracking-error bounds for both, and concrete problem families
//! (affine oracles, feedback projected gradient, Z-bus load flow).

// `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod async_sim;
pub mod audit;
pub mod bounds;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod map;
pub mod norm;
pub mod problems;
pub mod rng;
pub mod solver;
pub mod tracker;

pub use error::{Error, Result};
