//! Exact-arithmetic engine for Kontsevich-type graph complexes, hairy graph
//! complexes, rooted-tree operads and the L-infinity machinery attached to
//! pre-Lie pairs.
//!
//! Every coefficient is an arbitrary precision rational; nothing in this crate
//! touches floating point.

#![allow(clippy::type_complexity, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod error;
pub mod exactla;
pub mod gc;
pub mod graph;
pub mod hgc;
pub mod homology;
pub mod lin;
pub mod linfty;
pub mod par;
pub mod sign;
pub mod tree;

pub mod cli;

pub use error::{Error, Result};
pub use lin::{Atom, Lin, Q};
