//! Finite element laboratory for the integral fractional Laplacian with
//! homogeneous exterior Dirichlet data.

pub mod assembly;
pub mod bounds;
pub mod eigen;
pub mod error;
pub mod form;
pub mod geometry;
pub mod grid;
pub mod kernel;
pub mod mesh;
pub mod pointwise;
pub mod principles;
pub mod quadrature;
pub mod variational;

pub use error::{FracError, Result};
pub use form::{apply_form, assemble_form, seminorm, StiffnessForm};
pub use geometry::{critical_exponent, Domain, DomainKind, Point};
pub use grid::{truncate, GridFunction};
pub use kernel::KernelSpec;
pub use mesh::{build_mesh, Mesh};
