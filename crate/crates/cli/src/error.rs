use std::path::Path;

use neurogeom::dti::DtiError;
use neurogeom::imgio::ImgIoError;
use neurogeom::meshio::MeshIoError;
use neurogeom::morpho::MorphoError;
use neurogeom::register::RegisterError;
use neurogeom::volops::VolOpsError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const IO: i32 = 4;
    /// `check-topology` on a valid mesh that is not a topological sphere.
    pub const NOT_SPHERE: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Parse(_) => exit::PARSE,
            CliError::Numeric(_) => exit::NUMERIC,
            CliError::Io(_) => exit::IO,
        }
    }

    pub fn missing_input(path: &std::path::Path) -> Self {
        CliError::Io(format!("input not found: {}", path.display()))
    }

    pub fn write_failed(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<ImgIoError> for CliError {
    fn from(e: ImgIoError) -> Self {
        match e {
            ImgIoError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<MeshIoError> for CliError {
    fn from(e: MeshIoError) -> Self {
        match e {
            MeshIoError::Parse { .. } => CliError::Parse(e.to_string()),
            MeshIoError::SizeMismatch { .. } => CliError::Numeric(e.to_string()),
            MeshIoError::Io { .. } => CliError::Io(e.to_string()),
        }
    }
}

impl From<VolOpsError> for CliError {
    fn from(e: VolOpsError) -> Self {
        match e {
            VolOpsError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<neurogeom::isosurface::IsoError> for CliError {
    fn from(e: neurogeom::isosurface::IsoError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<neurogeom::meshtopo::TopoError> for CliError {
    fn from(e: neurogeom::meshtopo::TopoError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<RegisterError> for CliError {
    fn from(e: RegisterError) -> Self {
        use RegisterError::*;
        match e {
            RankDeficient | DegenerateConfiguration | SingularTransform => CliError::Numeric(e.to_string()),
            Io { .. } => CliError::Io(e.to_string()),
            SizeMismatch(..) | LabelMismatch { .. } | NotAffine | DuplicateLabel(_) | Parse(_) => {
                CliError::Parse(e.to_string())
            }
        }
    }
}

impl From<MorphoError> for CliError {
    fn from(e: MorphoError) -> Self {
        match e {
            MorphoError::EmptyEnsemble | MorphoError::TopologyMismatch(_) | MorphoError::SizeMismatch { .. } => {
                CliError::Numeric(e.to_string())
            }
            MorphoError::SubjectOutOfRange { .. } => CliError::Usage(e.to_string()),
            MorphoError::Parse(_) => CliError::Parse(e.to_string()),
            MorphoError::Mesh(inner) => inner.into(),
            MorphoError::Io { .. } => CliError::Io(e.to_string()),
        }
    }
}

impl From<DtiError> for CliError {
    fn from(e: DtiError) -> Self {
        match e {
            DtiError::NonFinite | DtiError::NonFiniteVoxel(_) | DtiError::AllZero | DtiError::DimsMismatch(_) => {
                CliError::Numeric(e.to_string())
            }
            DtiError::Parse { .. } | DtiError::InvalidTract(_) => CliError::Parse(e.to_string()),
            DtiError::Image(inner) => inner.into(),
            DtiError::Io { .. } => CliError::Io(e.to_string()),
        }
    }
}

/// Path-tagged read failure.
pub fn read_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
