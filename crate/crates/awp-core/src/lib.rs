//! Numerical engine for the monochromatic advanced-wave picture of SPDC
//! biphoton optics.
//!
//! The core idea: the conditional wave function of one down-converted photon,
//! given a detection of its partner, equals a classical wave launched backward
//! from the detector through one arm, multiplied by the crystal/pump creation
//! amplitude, and propagated forward through the other arm. This crate
//! provides the scalar/polarized field types and optical elements needed to
//! run that pipeline, closed-form crystal kernels, brute-force oracles used as
//! ground truth, and ready-made quantum-imaging protocols (ghost imaging,
//! imaging with undetected photons, phase-shifting holography, Hong-Ou-Mandel
//! temporal interference).

pub mod engine;
pub mod field;
pub mod hom;
pub mod io;
pub mod oracle;
pub mod protocols;
pub mod spdc;
pub mod special;
