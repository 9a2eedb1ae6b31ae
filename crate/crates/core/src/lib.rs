//! Ordered line integral methods for the eikonal equation on uniform grids.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod factoring;
pub mod grid;
pub mod marcher;
pub mod problems;
pub mod updates;
