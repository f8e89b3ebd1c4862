//! Curvature of left-invariant metrics on compact Lie groups, with tools for
//! inverse-linear metric paths `Φ_t = (I − tΨ)⁻¹`.
//!
//! Vectors and operators are expressed in an orthonormal basis of the
//! bi-invariant metric `h₀` (the working basis of a [`LieAlgebra`]).

pub mod algebra;
pub mod cli;
pub mod curvature;
pub mod error;
pub mod infinitesimal;
pub mod numerics;
pub mod paths;
pub mod rescale;
pub mod sampling;
pub mod scaling;
pub(crate) mod serde_vec;
pub mod so4;

pub use algebra::{LieAlgebra, Subalgebra, Vector};
pub use curvature::{puttmann_curvature, LeftInvariantMetric};
pub use error::{Error, Result};
pub use numerics::SymmetricEndomorphism;
pub use paths::{InverseLinearPath, TaylorCoefficients};
