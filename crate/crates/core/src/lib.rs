//! Field transfer between unstructured 2D triangle meshes.
//!
//! * [`mesh`]: immutable meshes, fields, file IO and synthetic generators
//! * [`locate`]: uniform-grid point localization with topological classification
//! * [`pointwise`]: local weighted polynomial fits with radial basis weights
//! * [`conservative`]: supermesh-based L2 projection
//! * [`metrics`]: accuracy and conservation errors, iterated mapping experiments
//! * [`coords`]: Cartesian and cylindrical coordinate strong types
//! * [`rendezvous`]: in-process simulation of rendezvous partitioning and exchange

pub mod conservative;
pub mod coords;
pub mod locate;
pub mod mesh;
pub mod metrics;
pub mod pointwise;
pub mod quadrature;
pub mod rendezvous;

pub use mesh::{build_mesh, Field, Mesh, MeshError, Point2};

/// Whether per-item work runs on the calling thread or on the rayon pool. Results are
/// identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Serial,
    Parallel,
}
