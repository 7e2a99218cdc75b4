//! Effective slip lengths of flat walls patterned with perfect-slip and
//! no-slip zones.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cell_solver;
pub mod channel;
pub mod error;
mod fft;
pub mod geometry;
pub mod homogenize;
pub mod krylov;
pub mod output;
pub mod riblet;
pub mod validate;
pub mod wall_operator;

pub use error::{Error, Result};
