//! Geometry from medical image volumes.
//!
//! The crate reads Analyze 7.5 and NIfTI-1 volumes, cleans and measures binary
//! masks, extracts marching-cubes surfaces, validates their topology through
//! the Euler characteristic, registers landmark sets, averages surface
//! ensembles into templates, and computes diffusion-tensor eigenstructure.
//!
//! # Modules
//! - [`imgio`]: Analyze 7.5 header/image pairs and single-file NIfTI-1
//! - [`volops`]: voxel volumetry, connected components, closing, GMM segmentation
//! - [`isosurface`]: marching cubes and axis swapping
//! - [`meshtopo`]: edges, Euler characteristic, genus
//! - [`register`]: least-squares affine and rigid landmark registration
//! - [`morpho`]: vertex-wise templates and displacement fields
//! - [`dti`]: tensor eigendecomposition, FA maps, tract files
//! - [`meshio`]: ASCII PLY and OBJ

pub mod error;
pub mod mesh;
pub mod meshio;

pub mod imgio;
pub mod volops;

pub mod isosurface;
pub mod meshtopo;

pub mod morpho;
pub mod register;

pub mod dti;

pub use error::{Error, Result};
pub use imgio::{Datatype, Endianness, Format, Volume3D, VolumeHeader, VoxelData};
pub use mesh::TriMesh;
