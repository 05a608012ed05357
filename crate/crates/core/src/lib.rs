//! Task allocation and transmission control for cooperative multi-UAV
//! sensing missions.

// Guards of the form `!(x > 0.0)` deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baselines;
pub mod degenerate;
pub mod error;
pub mod harness;
pub mod inner;
pub mod model;
pub mod numerics;
pub mod polyblock;

pub use error::{Error, Result};
pub use model::*;
