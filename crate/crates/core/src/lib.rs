//! Macroscopic quantum tunneling in two-channel hetero Josephson junctions.
//!
//! A two-gap electrode gives the junction two tunneling channels, hence two
//! phases: the center-of-mass phase `theta` (the washboard coordinate) and the
//! relative phase `psi`, whose out-of-phase oscillation is the
//! Josephson-Leggett mode. The zero-point motion of that mode lowers the
//! effective Josephson coupling by a factor `1 - eps`, which lowers the
//! tunneling barrier and raises the escape rate.
//!
//! Modules:
//! - [`model`]: parameters, derived scales, phase transforms, potential
//! - [`dynamics`]: classical equations of motion, equilibria, normal modes
//! - [`escape`]: zero-point renormalization, escape rate, parameter sweeps
//! - [`oracle`]: independent numerical checks of the closed forms
//! - [`cli`]: the `jlmqt` command-line front end

// Guards are written `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod escape;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
