//! Optical physics of molecular dimers whose monomers carry both transition
//! and permanent dipoles.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] assembles the truncated site-basis Hamiltonian and dipole
//!   operator from monomer data and electrostatic couplings.
//! * [`eigen`] diagonalises it, either through the closed forms available for
//!   the direct, indirect and mixed coupling geometries or numerically.
//! * [`bath`] describes the thermal optical field (cubic spectral density,
//!   Bose occupation, golden-rule kernel).
//! * [`dynamics`] builds secular Redfield population rates, propagates
//!   populations and classifies dark states.
//! * [`polaron`] evaluates the fourth-order rate corrections generated by the
//!   permanent dipoles of the dimer states.
//! * [`experiments`] runs the population, dark-state scan and disorder
//!   ensemble studies; [`cli`] wires them to configuration files and CSV.
//!
//! Energies are in eV, dipoles in Debye and times in ħ/eV unless a name says
//! otherwise.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod cli;
pub mod dynamics;
pub mod eigen;
mod error;
pub mod experiments;
pub mod model;
pub mod polaron;
pub mod quadrature;
pub mod units;

pub use error::{Error, ErrorCategory};

/// Real 3-vector used for every dipole moment and field direction.
pub type Vec3 = nalgebra::Vector3<f64>;

pub type Result<T, E = Error> = std::result::Result<T, E>;
