//! Classical simulation of qubit channels and superchannels.
//!
//! Representations (Kraus, Choi, χ), the circuit and Choi forms of
//! generalized-extreme superchannels, their convex decomposition, GRAPE pulse
//! synthesis for a four-spin NMR register, and amplitude-damping codes.
//!
//! Conventions used throughout: big-endian tensor ordering (first factor is
//! the most significant), unit-trace Choi states with the channel output as
//! the first factor, and the Pauli order (I, X, Y, Z) for χ matrices.

pub mod decomp;
pub mod error;
pub mod grape;
pub mod json;
pub mod linalg;
pub mod optim;
pub mod qcore;
pub mod qec;
pub mod replication;
pub mod superchan;

pub use error::{Error, Result};
