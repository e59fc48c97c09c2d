//! Modified weak Galerkin discretization of the time-harmonic Maxwell
//! saddle-point system on polyhedral meshes.
//!
//! The pipeline is: build a [`mesh::PolyMesh`], assemble the block system
//! with [`assembly::assemble_system`], solve it with [`linsolve::solve`] and
//! measure errors with [`analysis`]. [`driver`] ties these together into
//! manufactured-solution convergence studies.

pub mod analysis;
pub mod assembly;
pub mod driver;
pub mod error;
pub mod geometry;
pub mod linsolve;
pub mod mesh;
pub mod polybasis;
pub mod weakops;

pub use error::{MwgError, Result};
pub use geometry::Point3;
pub use mesh::{build_uniform_hex_mesh, PolyMesh};
