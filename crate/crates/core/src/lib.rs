//! Short-step-chain Frank-Wolfe methods with certified descent.

// NaN inputs must fail validation, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod directions;
pub mod domains;
pub mod error;
pub mod harness;
pub mod kl_rates;
pub mod model;
pub mod pwidth;
pub mod ssc;

pub use error::{Error, Result};
