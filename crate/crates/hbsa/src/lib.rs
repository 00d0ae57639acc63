//! Exact simulation and verification of complete hyperentangled
//! Bell-state analysis (HBSA) for two photons entangled in polarization
//! and two longitudinal-momentum DOFs, with weak cross-Kerr probes and
//! linear optics, plus the three-DOF quantum teleportation built on it.
//!
//! - [`hilbert`]: state vectors, Bell / hyper-Bell constructors,
//!   projective measurement.
//! - [`elements`]: beam splitters and polarizing beam splitters as
//!   unitaries.
//! - [`kerr`]: cross-Kerr probe tagging and homodyne readout, ideal or
//!   with a gaussian discrimination error.
//! - [`analyzer`]: the full analysis pipeline and the decoder that
//!   distinguishes all 64 hyperentangled Bell states.
//! - [`teleport`]: three-DOF teleportation over the hyperentangled
//!   channel.
//! - [`cli`]: command-line front end with JSON/CSV output.

pub mod analyzer;
pub mod cli;
pub mod elements;
pub mod error;
pub mod hilbert;
pub mod kerr;
pub mod teleport;

pub use error::{Error, Result};
