//! Moment tensors of scalar fields on the unit ball and sphere, their
//! irreducible decomposition, and complete sets of rotation invariants built
//! from contraction patterns.

pub mod basis_builder;
pub mod cli;
pub mod independence;
pub mod irreducible;
pub mod moments;
pub mod patterns;
pub mod tensor_core;

/// Version tag carried by every JSON artifact.
pub const SCHEMA: &str = "momenta/1";
