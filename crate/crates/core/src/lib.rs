//! Numerical core of the one-phase Muskat simulator.
//!
//! The crate is `no_std` with `alloc`; file formats and the command line live in the
//! companion `muskat` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod birkhoff_rott;
pub mod conformal;
pub mod contour;
pub mod diagnostics;
pub mod error;
pub mod evolution;
mod linalg;
pub mod spectral;

pub use error::{Error, ErrorKind, Result};
