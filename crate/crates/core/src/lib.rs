//! Non-stationary UAV-to-ground MIMO channel simulator.
//!
//! The crate is organised along the propagation chain:
//!
//! * [`scenario`]: configuration, terminal kinematics, posture and arrays.
//! * [`fse`]: near-UAV fuselage scattering and its single-bounce rays.
//! * [`largescale`]: segmented path loss and shadow fading.
//! * [`smallscale`]: per-path delays, powers, phases and CIR assembly.
//! * [`stats`]: ACF, PDP, LCR, AFD and stationary-interval estimators.
//! * [`pipeline`]: end-to-end runs and artifact emission.
//!
//! All randomness flows from one 64-bit seed through [`rng`] sub-streams, so
//! a configuration plus a seed fully determines every output.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fse;
pub mod largescale;
pub mod pipeline;
pub mod rng;
pub mod scenario;
pub mod smallscale;
pub mod stats;

pub use error::{Error, Result};
