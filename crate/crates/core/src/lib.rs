//! Statevector simulation of LCU-based non-unitary layers for quantum machine
//! learning: residual layers, pooling and convolution on amplitude-encoded
//! images, and projections onto irreducible-representation subspaces.

pub mod encodings;
pub mod error;
pub mod groupproj;
pub mod harness;
pub mod lcu;
pub mod pooling;
pub mod qsim;
pub mod resnet;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
