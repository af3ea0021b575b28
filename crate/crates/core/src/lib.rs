//! Structure restoration for even pencils of port-Hamiltonian descriptor
//! systems.
//!
//! A strictly passive descriptor system `E ẋ = Ax + Bu`, `y = Cx + Du` is
//! represented by the even pencil `sℰ − 𝒜`. When that pencil is perturbed in
//! a structure-respecting way (for example by rounding in an eigensolver),
//! [`restore::full_restoration`] computes a congruence that maps it back to
//! the pencil of a nearby descriptor system and reports the resulting
//! backward errors in descriptor and port-Hamiltonian coordinates.

// `!(x > t)` is used on purpose so that NaN fails the check as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod pencil;
pub mod restore;
pub mod rng;
pub mod stability;
pub mod systems;

pub use error::{Error, Result};
