//! Strain-based finite elements for linear elasticity on tetrahedral meshes.
//!
//! Strains are discretized with one degree of freedom per mesh edge: the
//! normal-normal component of a piecewise-constant symmetric tensor along the
//! edge, scaled by its length. Compatibility of the strain is imposed through
//! a small set of linear conditions attached to each vertex star, and the
//! elastic energy is minimized directly over the constrained edge space. A
//! classical piecewise-linear displacement solver is included as a reference.

// `!(x > 0.0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constraints;
pub mod elasticity;
pub mod error;
pub mod harness;
pub mod mesh;
pub mod par;
pub mod quadrature;
pub mod solvers;
pub mod sparse;
pub mod strain_space;

pub use error::{Error, Result};
pub use mesh::{build_topology, generate_cube_mesh, EntityClass, Point, TetMesh};
pub use par::Execution;
pub use strain_space::{EdgeDofVector, SymTensor3};
