//! One-dimensional morphoelastic wound contraction model.
//!
//! The library covers three layers:
//!
//! * **Model definition** — the parameter set ([`params`]) with its derived
//!   constants, and the pointwise reaction kinetics of the chemokine /
//!   fibroblast / myofibroblast / collagen system ([`chem::reaction_terms`]).
//! * **Solvers** — linear-basis finite elements on a uniform 1D grid
//!   ([`fem`]), a backward-Euler block solve for the linearized mechanics
//!   ([`mech`]), and a lumped-mass backward-Euler/Picard solve for the
//!   nonlinear reaction-transport system ([`chem`]).
//! * **Stability analysis** — closed-form continuous (Fourier) and
//!   semi-discrete (Von Neumann) eigenvalues for both subsystems, threshold
//!   computations and stable/unstable verdicts ([`stability`]), plus an
//!   independent verification layer that compares dense spectra of actually
//!   assembled periodic finite-difference operators against the closed forms
//!   ([`oracle`]).
//!
//! All quantities use the model's native unit system (centimeters, days,
//! grams, cells).

pub mod banded;
pub mod eigen;
pub mod chem;
pub mod config;
pub mod fem;
pub mod field;
pub mod ic;
pub mod mech;
pub mod oracle;
pub mod params;
pub mod stability;

pub use config::Document;
pub use field::{FieldState, Variable};
pub use params::ParameterSet;
