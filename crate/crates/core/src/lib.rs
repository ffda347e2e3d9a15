//! Dynamics-based invariant features for skeleton trajectories.
//!
//! Each coordinate trajectory is modelled as the impulse response of a
//! low-order LTI system. Sparse coding against an overcomplete pole
//! dictionary recovers which poles are active, and the binarized pole support
//! serves as the view feature.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod binarize;
pub mod classifier;
pub mod cli;
pub mod clips;
pub mod dictionary;
pub mod error;
pub mod invariance;
pub mod linalg;
pub mod pipeline;
pub mod solver;
pub mod trajectory;

pub use error::{Error, Result};
