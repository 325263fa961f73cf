//! Simulation and analysis toolkit for a diamagnetically levitated,
//! electrically conducting rotor spinning above a coaxial magnet array.
//!
//! Modules follow the physics pipeline: [`magnetostatics`] supplies the trap
//! field, [`levitation`] finds the equilibrium pose and trap frequencies,
//! [`eddy`] computes eddy-current damping of off-axis rotation, [`gas`]
//! covers gas damping across Knudsen regimes, and [`dynamics`] synthesizes and
//! analyses spin-down traces. [`config`] and [`report`] handle configuration
//! files and deterministic output.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constants;
pub mod dynamics;
pub mod eddy;
pub mod error;
pub mod gas;
pub mod levitation;
pub mod magnetostatics;
pub mod numerics;
pub mod report;

pub use error::{Error, Result};
pub use levitation::DiskSpec;
pub use magnetostatics::{FieldVector, MagnetSpec, MagnetStack};
