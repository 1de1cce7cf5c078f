//! Binary-mask measurement and cleanup plus 1-D Gaussian-mixture tissue
//! segmentation.

mod components;
mod gmm;
mod morphology;

use thiserror::Error;

use crate::imgio::{Datatype, Volume3D, VolumeHeader, VoxelData};

pub use components::{connected_components, largest_component, Connectivity, LabelField};
pub use gmm::{gmm_segment, GmmParams, TissuePosteriors};
pub use morphology::{ball_offsets, dilate, erode, morphological_close};

#[derive(Debug, Error)]
pub enum VolOpsError {
    #[error("mask is empty")]
    EmptyMask,
    #[error("class {class} variance {variance:e} collapsed below floor {floor:e}")]
    DegenerateClass {
        class: usize,
        variance: f64,
        floor: f64,
    },
    #[error("not enough voxels: {distinct} distinct nonzero intensities for {classes} classes")]
    NotEnoughVoxels { distinct: usize, classes: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

type Result<T> = std::result::Result<T, VolOpsError>;

/// Boolean voxel grid with physical spacing, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    dims: [usize; 3],
    voxel_size: [f64; 3],
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(dims: [usize; 3], voxel_size: [f64; 3], bits: Vec<bool>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(VolOpsError::InvalidArgument(format!("dims {dims:?}")));
        }
        if bits.len() != dims.iter().product::<usize>() {
            return Err(VolOpsError::InvalidArgument(format!(
                "{} bits for dims {dims:?}",
                bits.len()
            )));
        }
        if voxel_size.iter().any(|&s| !(s > 0.0)) {
            return Err(VolOpsError::InvalidArgument(format!(
                "voxel size {voxel_size:?}"
            )));
        }
        Ok(Self {
            dims,
            voxel_size,
            bits,
        })
    }

    pub fn empty(dims: [usize; 3], voxel_size: [f64; 3]) -> Self {
        Self::new(dims, voxel_size, vec![false; dims.iter().product()]).expect("valid dims")
    }

    /// Nonzero voxels of the first time frame.
    pub fn from_volume(vol: &Volume3D) -> Self {
        let dims = vol.spatial_dims();
        let n: usize = dims.iter().product();
        let bits = (0..n).map(|i| vol.data().get(i) != 0.0).collect();
        Self {
            dims,
            voxel_size: vol.voxel_size(),
            bits,
        }
    }

    /// uint8 volume of zeros and ones.
    pub fn to_volume(&self) -> Volume3D {
        let [nx, ny, nz] = self.dims;
        let header = VolumeHeader::new([nx, ny, nz, 1], self.voxel_size, Datatype::U8);
        Volume3D::new(
            header,
            VoxelData::U8(self.bits.iter().map(|&b| b as u8).collect()),
        )
        .expect("mask dims are valid")
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_size(&self) -> [f64; 3] {
        self.voxel_size
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.bits[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: bool) {
        let idx = self.index(i, j, k);
        self.bits[idx] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Grows the grid by `pad` background voxels on every side.
    pub fn padded(&self, pad: usize) -> Self {
        let [nx, ny, nz] = self.dims;
        let dims = [nx + 2 * pad, ny + 2 * pad, nz + 2 * pad];
        let mut out = Self::empty(dims, self.voxel_size);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    if self.get(i, j, k) {
                        out.set(i + pad, j + pad, k + pad, true);
                    }
                }
            }
        }
        out
    }

    /// Inverse of [`padded`](Self::padded).
    pub fn cropped(&self, pad: usize) -> Self {
        let dims = self.dims.map(|d| d - 2 * pad);
        let mut out = Self::empty(dims, self.voxel_size);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    if self.get(i + pad, j + pad, k + pad) {
                        out.set(i, j, k, true);
                    }
                }
            }
        }
        out
    }
}

/// Number of set voxels and their total volume in mm³.
pub fn measure_volume(mask: &BinaryMask) -> (usize, f64) {
    let count = mask.count();
    let voxel: f64 = mask.voxel_size.iter().product();
    (count, count as f64 * voxel)
}
