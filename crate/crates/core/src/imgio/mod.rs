//! Analyze 7.5 (`.hdr`/`.img`) and single-file NIfTI-1 (`.nii`) volumes.
//!
//! Only the fields needed to describe a voxel grid are interpreted: the header
//! size, `dim`, `datatype`, `bitpix`, `pixdim`, `vox_offset`, `descrip` and the
//! NIfTI magic. Every other header byte is kept as-is so that a read/write
//! cycle does not lose vendor fields.

mod header;
mod payload;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use header::{read_analyze_header, read_nifti1_header, HEADER_SIZE, NIFTI_VOX_OFFSET};

#[derive(Debug, Error)]
pub enum ImgIoError {
    #[error("header too short: {0} bytes, need 348")]
    HeaderTooShort(usize),
    #[error("bad header size field: {0} (expected 348 in either byte order)")]
    BadMagicSize(i32),
    #[error("not a single-file NIfTI-1 (magic is not \"n+1\\0\")")]
    BadMagic,
    #[error("unsupported datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("payload size mismatch: expected at least {expected} bytes, found {found}")]
    PayloadSizeMismatch { expected: usize, found: usize },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, ImgIoError>;

/// Voxel element types shared by Analyze 7.5 and NIfTI-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Datatype {
    U8,
    I16,
    I32,
    F32,
    F64,
}

impl Datatype {
    pub const ALL: [Datatype; 5] = [
        Datatype::U8,
        Datatype::I16,
        Datatype::I32,
        Datatype::F32,
        Datatype::F64,
    ];

    pub fn code(self) -> i16 {
        match self {
            Datatype::U8 => 2,
            Datatype::I16 => 4,
            Datatype::I32 => 8,
            Datatype::F32 => 16,
            Datatype::F64 => 64,
        }
    }

    pub fn from_code(code: i16) -> Result<Self> {
        Ok(match code {
            2 => Datatype::U8,
            4 => Datatype::I16,
            8 => Datatype::I32,
            16 => Datatype::F32,
            64 => Datatype::F64,
            other => return Err(ImgIoError::UnsupportedDatatype(other)),
        })
    }

    pub fn bytes(self) -> usize {
        match self {
            Datatype::U8 => 1,
            Datatype::I16 => 2,
            Datatype::I32 | Datatype::F32 => 4,
            Datatype::F64 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Datatype::U8 => "uint8",
            Datatype::I16 => "int16",
            Datatype::I32 => "int32",
            Datatype::F32 => "float32",
            Datatype::F64 => "float64",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endianness {
    Little,
    Big,
}

impl Endianness {
    pub fn name(self) -> &'static str {
        match self {
            Endianness::Little => "little",
            Endianness::Big => "big",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Analyze75,
    Nifti1,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Analyze75 => "analyze7.5",
            Format::Nifti1 => "nifti1",
        }
    }
}

/// Logical header of a volume.
///
/// `raw` holds the original 348 header bytes when the header came from a
/// file; it is not part of equality.
#[derive(Debug, Clone)]
pub struct VolumeHeader {
    pub dims: [usize; 4],
    /// mm; stored on disk as float32.
    pub voxel_size: [f64; 3],
    pub datatype: Datatype,
    pub endianness: Endianness,
    pub description: String,
    pub format: Format,
    pub(crate) raw: Option<Vec<u8>>,
}

impl PartialEq for VolumeHeader {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims
            && self.voxel_size == other.voxel_size
            && self.datatype == other.datatype
            && self.endianness == other.endianness
            && self.description == other.description
            && self.format == other.format
    }
}

impl VolumeHeader {
    pub fn new(dims: [usize; 4], voxel_size: [f64; 3], datatype: Datatype) -> Self {
        Self {
            dims,
            voxel_size,
            datatype,
            endianness: Endianness::Little,
            description: String::new(),
            format: Format::Analyze75,
            raw: None,
        }
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Volume of a single voxel in mm³.
    pub fn voxel_volume(&self) -> f64 {
        self.voxel_size.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(ImgIoError::InvalidHeader(format!(
                "dims must be >= 1, got {:?}",
                self.dims
            )));
        }
        if self.dims.iter().any(|&d| d > i16::MAX as usize) {
            return Err(ImgIoError::InvalidHeader(format!(
                "dims exceed the 16-bit header range: {:?}",
                self.dims
            )));
        }
        if self.voxel_size.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(ImgIoError::InvalidHeader(format!(
                "voxel sizes must be positive, got {:?}",
                self.voxel_size
            )));
        }
        if self.description.len() > 80 {
            return Err(ImgIoError::InvalidHeader(
                "description longer than 80 bytes".into(),
            ));
        }
        Ok(())
    }
}

/// Typed voxel storage, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub enum VoxelData {
    U8(Vec<u8>),
    I16(Vec<i16>),
    I32(Vec<i32>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl VoxelData {
    pub fn datatype(&self) -> Datatype {
        match self {
            VoxelData::U8(_) => Datatype::U8,
            VoxelData::I16(_) => Datatype::I16,
            VoxelData::I32(_) => Datatype::I32,
            VoxelData::F32(_) => Datatype::F32,
            VoxelData::F64(_) => Datatype::F64,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            VoxelData::U8(v) => v.len(),
            VoxelData::I16(v) => v.len(),
            VoxelData::I32(v) => v.len(),
            VoxelData::F32(v) => v.len(),
            VoxelData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, idx: usize) -> f64 {
        match self {
            VoxelData::U8(v) => v[idx] as f64,
            VoxelData::I16(v) => v[idx] as f64,
            VoxelData::I32(v) => v[idx] as f64,
            VoxelData::F32(v) => v[idx] as f64,
            VoxelData::F64(v) => v[idx],
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Equality on the stored bit patterns (NaN-safe).
    pub fn bit_eq(&self, other: &VoxelData) -> bool {
        match (self, other) {
            (VoxelData::F32(a), VoxelData::F32(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (VoxelData::F64(a), VoxelData::F64(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (a, b) => a == b,
        }
    }
}

/// Dense voxel grid plus header.
///
/// Element (i, j, k, t) lives at flat index `i + nx*(j + ny*(k + nz*t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    header: VolumeHeader,
    data: VoxelData,
}

impl Volume3D {
    pub fn new(header: VolumeHeader, data: VoxelData) -> Result<Self> {
        header.validate()?;
        if data.datatype() != header.datatype {
            return Err(ImgIoError::InvalidVolume(format!(
                "data is {} but header says {}",
                data.datatype().name(),
                header.datatype.name()
            )));
        }
        if data.len() != header.voxel_count() {
            return Err(ImgIoError::InvalidVolume(format!(
                "data has {} elements, dims {:?} need {}",
                data.len(),
                header.dims,
                header.voxel_count()
            )));
        }
        Ok(Self { header, data })
    }

    /// Spatial float64 volume with nt = 1.
    pub fn from_f64(dims: [usize; 3], voxel_size: [f64; 3], data: Vec<f64>) -> Result<Self> {
        let header = VolumeHeader::new([dims[0], dims[1], dims[2], 1], voxel_size, Datatype::F64);
        Self::new(header, VoxelData::F64(data))
    }

    /// Spatial uint8 volume with nt = 1.
    pub fn from_u8(dims: [usize; 3], voxel_size: [f64; 3], data: Vec<u8>) -> Result<Self> {
        let header = VolumeHeader::new([dims[0], dims[1], dims[2], 1], voxel_size, Datatype::U8);
        Self::new(header, VoxelData::U8(data))
    }

    pub fn header(&self) -> &VolumeHeader {
        &self.header
    }

    pub fn data(&self) -> &VoxelData {
        &self.data
    }

    pub fn into_parts(self) -> (VolumeHeader, VoxelData) {
        (self.header, self.data)
    }

    pub fn dims(&self) -> [usize; 4] {
        self.header.dims
    }

    pub fn spatial_dims(&self) -> [usize; 3] {
        let d = self.header.dims;
        [d[0], d[1], d[2]]
    }

    pub fn voxel_size(&self) -> [f64; 3] {
        self.header.voxel_size
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn flat_index(&self, i: usize, j: usize, k: usize, t: usize) -> usize {
        let [nx, ny, nz, _] = self.header.dims;
        i + nx * (j + ny * (k + nz * t))
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data.get(self.flat_index(i, j, k, 0))
    }

    pub fn get4(&self, i: usize, j: usize, k: usize, t: usize) -> f64 {
        self.data.get(self.flat_index(i, j, k, t))
    }

    /// Values of the first time frame as f64.
    pub fn spatial_values(&self) -> Vec<f64> {
        let n: usize = self.spatial_dims().iter().product();
        (0..n).map(|i| self.data.get(i)).collect()
    }

    pub fn with_format(mut self, format: Format) -> Self {
        self.header.format = format;
        self
    }

    pub fn with_endianness(mut self, endianness: Endianness) -> Self {
        self.header.endianness = endianness;
        self
    }

    pub fn with_description(mut self, description: &str) -> Result<Self> {
        self.header.description = description.to_string();
        self.header.validate()?;
        Ok(self)
    }

    /// Bitwise equality of header fields and data.
    pub fn bit_eq(&self, other: &Volume3D) -> bool {
        self.header == other.header && self.data.bit_eq(&other.data)
    }
}

/// Decodes an Analyze 7.5 `.img` payload using a parsed header.
pub fn read_analyze_volume(header: VolumeHeader, raw: &[u8]) -> Result<Volume3D> {
    let data = payload::decode(&header, raw)?;
    Volume3D::new(header, data)
}

/// Encodes a volume as an Analyze 7.5 pair: (`.hdr` bytes, `.img` bytes).
pub fn write_analyze(vol: &Volume3D) -> Result<(Vec<u8>, Vec<u8>)> {
    vol.header.validate()?;
    let hdr = header::encode(&vol.header, Format::Analyze75);
    let img = payload::encode(&vol.data, vol.header.endianness);
    Ok((hdr, img))
}

/// Decodes a single-file NIfTI-1 image.
pub fn read_nifti1(raw: &[u8]) -> Result<Volume3D> {
    let (header, vox_offset) = header::parse(raw, Format::Nifti1)?;
    if vox_offset > raw.len() {
        return Err(ImgIoError::PayloadSizeMismatch {
            expected: vox_offset + header.voxel_count() * header.datatype.bytes(),
            found: raw.len(),
        });
    }
    let data = payload::decode(&header, &raw[vox_offset..])?;
    Volume3D::new(header, data)
}

/// Encodes a volume as a single-file NIfTI-1 image with `vox_offset` 352.
pub fn write_nifti1(vol: &Volume3D) -> Result<Vec<u8>> {
    vol.header.validate()?;
    let mut out = header::encode(&vol.header, Format::Nifti1);
    out.resize(NIFTI_VOX_OFFSET, 0);
    out.extend(payload::encode(&vol.data, vol.header.endianness));
    Ok(out)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| ImgIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Header and image paths of an Analyze pair given either member or the
/// common prefix.
pub fn analyze_pair_paths(path: &Path) -> (PathBuf, PathBuf) {
    match path.extension().and_then(|e| e.to_str()) {
        Some("hdr") | Some("img") => (path.with_extension("hdr"), path.with_extension("img")),
        _ => {
            let mut hdr = path.as_os_str().to_owned();
            hdr.push(".hdr");
            let mut img = path.as_os_str().to_owned();
            img.push(".img");
            (PathBuf::from(hdr), PathBuf::from(img))
        }
    }
}

pub fn read_analyze_file(path: &Path) -> Result<Volume3D> {
    let (hdr_path, img_path) = analyze_pair_paths(path);
    let header = read_analyze_header(&read_file(&hdr_path)?)?;
    read_analyze_volume(header, &read_file(&img_path)?)
}

pub fn read_nifti1_file(path: &Path) -> Result<Volume3D> {
    read_nifti1(&read_file(path)?)
}

/// Header only: `.nii` as NIfTI-1, anything else as the `.hdr` of an
/// Analyze pair. The image payload is not read.
pub fn read_header_file(path: &Path) -> Result<VolumeHeader> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("nii") => read_nifti1_header(&read_file(path)?),
        _ => read_analyze_header(&read_file(&analyze_pair_paths(path).0)?),
    }
}

/// Reads `.nii` as NIfTI-1 and anything else as an Analyze pair.
pub fn read_volume_file(path: &Path) -> Result<Volume3D> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("nii") => read_nifti1_file(path),
        _ => read_analyze_file(path),
    }
}
