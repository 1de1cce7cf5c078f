//! Diffusion tensors: eigenstructure, fractional anisotropy, principal
//! directions, and white-matter tract polylines.

mod eigen;
pub mod tracts;

use thiserror::Error;

use crate::imgio::{Datatype, Format, Volume3D, VolumeHeader, VoxelData};

pub use eigen::{eigendecompose, EigenSystem, DEGENERACY_GAP, REPEATED_GAP};
pub use tracts::{
    load_tracts, parse_tracts, subsample_tracts, tract_endpoints, tracts_to_binary, tracts_to_text, End,
    Endpoint, Tract,
};

#[derive(Debug, Error)]
pub enum DtiError {
    #[error("tensor has non-finite coefficients")]
    NonFinite,
    #[error("all eigenvalues are zero")]
    AllZero,
    #[error("tensor volumes disagree: {0}")]
    DimsMismatch(String),
    #[error("non-finite tensor at voxel {0}")]
    NonFiniteVoxel(usize),
    #[error("tract record {record} (line {line}): {msg}")]
    Parse {
        record: usize,
        line: usize,
        msg: String,
    },
    #[error("invalid tract: {0}")]
    InvalidTract(String),
    #[error(transparent)]
    Image(#[from] crate::imgio::ImgIoError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Symmetric 3×3 tensor from its six unique coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionTensor {
    pub dxx: f64,
    pub dyy: f64,
    pub dzz: f64,
    pub dxy: f64,
    pub dxz: f64,
    pub dyz: f64,
}

impl DiffusionTensor {
    pub fn new(dxx: f64, dyy: f64, dzz: f64, dxy: f64, dxz: f64, dyz: f64) -> Self {
        Self {
            dxx,
            dyy,
            dzz,
            dxy,
            dxz,
            dyz,
        }
    }

    /// Coefficients in the order dxx, dyy, dzz, dxy, dxz, dyz.
    pub fn from_coefficients(c: [f64; 6]) -> Self {
        Self::new(c[0], c[1], c[2], c[3], c[4], c[5])
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [self.dxx, self.dyy, self.dzz, self.dxy, self.dxz, self.dyz]
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.dxx, self.dxy, self.dxz],
            [self.dxy, self.dyy, self.dyz],
            [self.dxz, self.dyz, self.dzz],
        ]
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients().iter().all(|&c| c == 0.0)
    }
}

/// Fractional anisotropy
/// `sqrt(((λ1−λ2)² + (λ2−λ3)² + (λ3−λ1)²) / (2(λ1² + λ2² + λ3²)))`.
///
/// Lies in [0, 1] for non-negative eigenvalues. Mixed signs are passed
/// through unclamped and can exceed 1.
pub fn fa(lambdas: [f64; 3]) -> Result<f64, DtiError> {
    let [a, b, c] = lambdas;
    let denom = 2.0 * (a * a + b * b + c * c);
    if denom == 0.0 {
        return Err(DtiError::AllZero);
    }
    let num = (a - b).powi(2) + (b - c).powi(2) + (c - a).powi(2);
    Ok((num / denom).sqrt())
}

/// Six coefficient volumes sharing one grid.
#[derive(Debug, Clone)]
pub struct TensorField {
    dims: [usize; 3],
    voxel_size: [f64; 3],
    coeffs: [Vec<f64>; 6],
}

impl TensorField {
    /// Volumes in the order dxx, dyy, dzz, dxy, dxz, dyz.
    pub fn from_volumes(volumes: [&Volume3D; 6]) -> Result<Self, DtiError> {
        const NAMES: [&str; 6] = ["dxx", "dyy", "dzz", "dxy", "dxz", "dyz"];
        let first = volumes[0];
        for (v, name) in volumes.iter().zip(NAMES).skip(1) {
            if v.dims() != first.dims() {
                return Err(DtiError::DimsMismatch(format!(
                    "{name} has dims {:?}, dxx has {:?}",
                    v.dims(),
                    first.dims()
                )));
            }
            if v.voxel_size() != first.voxel_size() {
                return Err(DtiError::DimsMismatch(format!(
                    "{name} has voxel size {:?}, dxx has {:?}",
                    v.voxel_size(),
                    first.voxel_size()
                )));
            }
        }
        Ok(Self {
            dims: first.spatial_dims(),
            voxel_size: first.voxel_size(),
            coeffs: volumes.map(|v| v.spatial_values()),
        })
    }

    /// A field with the same tensor at every voxel.
    pub fn uniform(dims: [usize; 3], voxel_size: [f64; 3], d: DiffusionTensor) -> Self {
        let n = dims.iter().product();
        Self {
            dims,
            voxel_size,
            coeffs: d.coefficients().map(|c| vec![c; n]),
        }
    }

    pub fn from_tensors(dims: [usize; 3], voxel_size: [f64; 3], tensors: &[DiffusionTensor]) -> Result<Self, DtiError> {
        let n: usize = dims.iter().product();
        if tensors.len() != n {
            return Err(DtiError::DimsMismatch(format!(
                "{} tensors for dims {dims:?}",
                tensors.len()
            )));
        }
        let coeffs = std::array::from_fn(|k| tensors.iter().map(|t| t.coefficients()[k]).collect());
        Ok(Self {
            dims,
            voxel_size,
            coeffs,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tensor(&self, idx: usize) -> DiffusionTensor {
        DiffusionTensor::from_coefficients(std::array::from_fn(|k| self.coeffs[k][idx]))
    }

    fn header(&self, datatype: Datatype) -> VolumeHeader {
        let [x, y, z] = self.dims;
        let mut h = VolumeHeader::new([x, y, z, 1], self.voxel_size, datatype);
        h.format = Format::Nifti1;
        h
    }
}

/// FA volume (float32, NIfTI-1) plus the number of voxels whose tensor had
/// a negative eigenvalue.
#[derive(Debug, Clone)]
pub struct FaMap {
    pub map: Volume3D,
    pub negative_voxels: usize,
}

/// Voxelwise FA; zero tensors map to 0.
pub fn fa_map(field: &TensorField) -> Result<FaMap, DtiError> {
    let mut values = Vec::with_capacity(field.len());
    let mut negative_voxels = 0;
    for idx in 0..field.len() {
        let d = field.tensor(idx);
        if d.is_zero() {
            values.push(0.0f32);
            continue;
        }
        let sys = eigendecompose(&d).map_err(|_| DtiError::NonFiniteVoxel(idx))?;
        if sys.lambdas[2] < 0.0 {
            negative_voxels += 1;
        }
        values.push(fa(sys.lambdas).unwrap_or(0.0) as f32);
    }
    let map = Volume3D::new(field.header(Datatype::F32), VoxelData::F32(values))?;
    Ok(FaMap {
        map,
        negative_voxels,
    })
}

/// x, y, z components of the principal eigenvector as float64 volumes;
/// zero tensors give the zero vector.
pub fn principal_direction_map(field: &TensorField) -> Result<[Volume3D; 3], DtiError> {
    let mut comps: [Vec<f64>; 3] = Default::default();
    for idx in 0..field.len() {
        let d = field.tensor(idx);
        let v = if d.is_zero() {
            [0.0; 3]
        } else {
            eigendecompose(&d)
                .map_err(|_| DtiError::NonFiniteVoxel(idx))?
                .principal()
        };
        for k in 0..3 {
            comps[k].push(v[k]);
        }
    }
    let [x, y, z] = comps.map(|c| Volume3D::new(field.header(Datatype::F64), VoxelData::F64(c)));
    Ok([x?, y?, z?])
}
