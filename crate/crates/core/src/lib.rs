//! Toda lattice with steplike constant initial data.
//!
//! The crate pairs a direct simulation of the doubly infinite lattice
//! ([`lattice`]) with an independent evaluation of the leading-order
//! long-time asymptotics in every region of the `n/t` half-plane
//! ([`whitham`], [`riemann`], [`asymptotics`]), built on the scattering
//! data of the initial step ([`spectral`]).

// `!(x > 0.0)` is how NaN gets rejected alongside non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod quad;
pub mod riemann;
pub mod spectral;
pub mod whitham;

pub use error::{Error, Result};
pub use lattice::{Background, LatticeState, Tolerances};
