//! Hodge zero-mode bundles over parameter-dependent Vietoris–Rips filtrations.
//!
//! A time-evolving point cloud gives a two-parameter family of complexes
//! indexed by scale `d` and time `t`. Every complex is embedded in the chain
//! space of the full simplex on the vertex set, so the degree-one Hodge
//! Laplacians of all grid points act on one fixed edge space. Their kernels form
//! a vector bundle over the regular part of the grid, and this crate computes
//! its curvature, polar parallel transport and holonomy, together with the
//! persistence-diagram baselines that the geometry is compared against.

pub mod chains;
pub mod datasets;
pub mod error;
pub mod grid;
pub mod laplacian;
pub mod linalg;
pub mod persistence;
pub mod spectral;
pub mod tracking;
pub mod transport;

pub use error::{Error, Result};
pub use grid::Grid;
