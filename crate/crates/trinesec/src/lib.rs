//! Numerical security analysis for the PBC00 three-state (trine) QKD protocol.
//!
//! The crate is organized bottom-up:
//!
//! * [`matcore`] — dense complex-Hermitian linear algebra (eigensystems,
//!   matrix logarithms, partial traces, Kraus maps) with strict validation.
//! * [`protocol`] — trine signal states, Bob's POVM, Alice's source
//!   constraints, and the post-selection/key-map channel pair used by the
//!   entropy objective.
//! * [`channels`] — depolarizing and lossy-detector simulations that produce
//!   the statistics the optimizer is constrained by.
//! * [`decoy`] — linear-programming bounds on single-photon yields from
//!   multi-intensity statistics.
//! * [`solver`] — a conditional-gradient outer loop over an interior-point
//!   linear SDP oracle, with independently verified dual lower-bound
//!   certificates.
//! * [`keyrate`] — asymptotic key rates for the single-photon and
//!   coherent-state sources.
//! * [`squashing`] — positivity certificates for the squashing map that
//!   reduces multi-photon measurements to the single-photon model.

#![forbid(unsafe_code)]

pub mod channels;
pub mod decoy;
pub mod error;
pub mod keyrate;
pub mod matcore;
pub mod protocol;
pub mod solver;
pub mod squashing;

pub use error::{Error, Result};
