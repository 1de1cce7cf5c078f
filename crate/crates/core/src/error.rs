//! Crate-wide error type wrapping the per-module errors.

use thiserror::Error;

use crate::dti::DtiError;
use crate::imgio::ImgIoError;
use crate::isosurface::IsoError;
use crate::meshio::MeshIoError;
use crate::meshtopo::TopoError;
use crate::morpho::MorphoError;
use crate::register::RegisterError;
use crate::volops::VolOpsError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    ImgIo(#[from] ImgIoError),
    #[error(transparent)]
    VolOps(#[from] VolOpsError),
    #[error(transparent)]
    Iso(#[from] IsoError),
    #[error(transparent)]
    Topo(#[from] TopoError),
    #[error(transparent)]
    Register(#[from] RegisterError),
    #[error(transparent)]
    Morpho(#[from] MorphoError),
    #[error(transparent)]
    Dti(#[from] DtiError),
    #[error(transparent)]
    MeshIo(#[from] MeshIoError),
}

pub type Result<T> = std::result::Result<T, Error>;
