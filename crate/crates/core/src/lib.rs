//! Design and verification models for cavity-enhanced sum-frequency and
//! second-harmonic generation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamline;
pub mod cavity;
pub mod constants;
pub mod dispersion;
pub mod error;
pub mod focusing;
pub mod locksim;
pub mod numeric;
pub mod phasematch;

pub use error::{Error, Plane, Result};
