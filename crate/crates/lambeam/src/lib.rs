//! Finite-element analysis of laminated glass beams.
//!
//! Each layer of the laminate is a Timoshenko beam with its own axial
//! displacement `u` and cross-section rotation `phi`; all layers share one
//! transverse deflection `w`. Adjacent layers are tied at their interfaces by
//! nodal Lagrange multipliers enforcing displacement continuity, so the
//! multipliers come out of the solve as physical interlayer shear forces.
//!
//! The crate is organized as a pipeline:
//!
//! * [`model`] - input description (section, mesh, supports, loads) with
//!   validation and JSON (de)serialization,
//! * [`element`] - per-layer element stiffness blocks with the constant shear
//!   strain statically condensed (locking-free), and the interface constraint
//!   rows,
//! * [`assembly`] - global DOF numbering and the bordered symmetric KKT
//!   system,
//! * [`solver`] - direct banded LU solve with scaling, equilibration, and
//!   iterative refinement; certifies residuals,
//! * [`postprocess`] - internal forces, extreme-fiber stress/strain recovery,
//!   interface tractions, point queries,
//! * [`bounds`] - closed-form monolithic and independent-layer limit cases,
//! * [`bench`] - embedded three-point-bending benchmark with published
//!   reference data,
//! * [`cli`] - the `lambeam` command-line front end.

// Validation uses `!(x > 0.0)` on purpose: unlike `x <= 0.0` it also rejects
// NaN, which must never pass as a modulus, thickness, or length.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod bench;
pub mod bounds;
pub mod cli;
pub mod element;
pub mod model;
pub mod postprocess;
pub mod solver;
