use byteorder::{BigEndian, ByteOrder, LittleEndian};

use super::{Datatype, Endianness, Format, ImgIoError, Result, VolumeHeader};

pub const HEADER_SIZE: usize = 348;
pub const NIFTI_VOX_OFFSET: usize = 352;

// Byte offsets shared by Analyze 7.5 and NIfTI-1.
const SIZEOF_HDR: usize = 0;
const EXTENTS: usize = 32;
const REGULAR: usize = 38;
const DIM: usize = 40;
const DATATYPE: usize = 70;
const BITPIX: usize = 72;
const PIXDIM: usize = 76;
const VOX_OFFSET: usize = 108;
const XYZT_UNITS: usize = 123;
const DESCRIP: usize = 148;
const DESCRIP_LEN: usize = 80;
const MAGIC: usize = 344;

/// Parses a `.hdr` file, detecting byte order from the size field.
pub fn read_analyze_header(raw: &[u8]) -> Result<VolumeHeader> {
    parse(raw, Format::Analyze75).map(|(h, _)| h)
}

/// Parses the first 348 bytes of a `.nii` file.
pub fn read_nifti1_header(raw: &[u8]) -> Result<VolumeHeader> {
    parse(raw, Format::Nifti1).map(|(h, _)| h)
}

fn detect_endianness(raw: &[u8]) -> Result<Endianness> {
    if raw.len() < HEADER_SIZE {
        return Err(ImgIoError::HeaderTooShort(raw.len()));
    }
    let le = LittleEndian::read_i32(&raw[SIZEOF_HDR..]);
    if le == HEADER_SIZE as i32 {
        return Ok(Endianness::Little);
    }
    if BigEndian::read_i32(&raw[SIZEOF_HDR..]) == HEADER_SIZE as i32 {
        return Ok(Endianness::Big);
    }
    Err(ImgIoError::BadMagicSize(le))
}

/// Returns the header and the byte offset of the voxel data.
pub(super) fn parse(raw: &[u8], format: Format) -> Result<(VolumeHeader, usize)> {
    let endianness = detect_endianness(raw)?;
    match endianness {
        Endianness::Little => parse_with::<LittleEndian>(raw, format, endianness),
        Endianness::Big => parse_with::<BigEndian>(raw, format, endianness),
    }
}

fn parse_with<B: ByteOrder>(
    raw: &[u8],
    format: Format,
    endianness: Endianness,
) -> Result<(VolumeHeader, usize)> {
    if format == Format::Nifti1 && &raw[MAGIC..MAGIC + 4] != b"n+1\0" {
        return Err(ImgIoError::BadMagic);
    }

    let mut dim = [0i16; 8];
    B::read_i16_into(&raw[DIM..DIM + 16], &mut dim);
    let ndim = dim[0];
    if !(1..=7).contains(&ndim) {
        return Err(ImgIoError::InvalidHeader(format!("dim[0] = {ndim}")));
    }
    let mut dims = [1usize; 4];
    for (axis, d) in dims.iter_mut().enumerate() {
        if (axis as i16) < ndim {
            let v = dim[axis + 1];
            if v < 1 {
                return Err(ImgIoError::InvalidHeader(format!(
                    "dim[{}] = {v}",
                    axis + 1
                )));
            }
            *d = v as usize;
        }
    }
    if (5..=ndim as usize).any(|axis| dim[axis] > 1) {
        return Err(ImgIoError::InvalidHeader(format!(
            "more than 4 non-trivial dimensions: {:?}",
            &dim[1..=ndim as usize]
        )));
    }

    let datatype = Datatype::from_code(B::read_i16(&raw[DATATYPE..]))?;

    let mut pixdim = [0f32; 8];
    B::read_f32_into(&raw[PIXDIM..PIXDIM + 32], &mut pixdim);
    // Zero or non-finite spacings are common in hand-made Analyze files; they
    // fall back to 1 mm. Negative spacings encode flips and keep their size.
    let voxel_size = [1, 2, 3].map(|i| {
        let s = pixdim[i].abs() as f64;
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    });

    let descrip = &raw[DESCRIP..DESCRIP + DESCRIP_LEN];
    let end = descrip.iter().position(|&b| b == 0).unwrap_or(DESCRIP_LEN);
    let description = String::from_utf8_lossy(&descrip[..end]).into_owned();

    let vox_offset = match format {
        Format::Analyze75 => 0,
        Format::Nifti1 => {
            let off = B::read_f32(&raw[VOX_OFFSET..]);
            if !(off.is_finite() && off >= 0.0) {
                return Err(ImgIoError::InvalidHeader(format!("vox_offset = {off}")));
            }
            (off as usize).max(HEADER_SIZE)
        }
    };

    let header = VolumeHeader {
        dims,
        voxel_size,
        datatype,
        endianness,
        description,
        format,
        raw: Some(raw[..HEADER_SIZE].to_vec()),
    };
    Ok((header, vox_offset))
}

pub(super) fn encode(header: &VolumeHeader, format: Format) -> Vec<u8> {
    match header.endianness {
        Endianness::Little => encode_with::<LittleEndian>(header, format),
        Endianness::Big => encode_with::<BigEndian>(header, format),
    }
}

fn encode_with<B: ByteOrder>(header: &VolumeHeader, format: Format) -> Vec<u8> {
    // Opaque fields are only reused when they were stored in the same byte order.
    let base = header
        .raw
        .as_ref()
        .filter(|raw| detect_endianness(raw).ok() == Some(header.endianness));
    let fresh = base.is_none();
    let mut out = base.cloned().unwrap_or_else(|| vec![0u8; HEADER_SIZE]);

    B::write_i32(&mut out[SIZEOF_HDR..], HEADER_SIZE as i32);
    if fresh {
        B::write_i32(&mut out[EXTENTS..], 16384);
        out[REGULAR] = b'r';
    }

    let mut dim = [1i16; 8];
    dim[0] = 4;
    for axis in 0..4 {
        dim[axis + 1] = header.dims[axis] as i16;
    }
    B::write_i16_into(&dim, &mut out[DIM..DIM + 16]);
    B::write_i16(&mut out[DATATYPE..], header.datatype.code());
    B::write_i16(&mut out[BITPIX..], (header.datatype.bytes() * 8) as i16);

    let mut pixdim = [0f32; 8];
    B::read_f32_into(&out[PIXDIM..PIXDIM + 32], &mut pixdim);
    if fresh {
        pixdim = [1.0; 8];
    }
    for i in 0..3 {
        pixdim[i + 1] = header.voxel_size[i] as f32;
    }
    B::write_f32_into(&pixdim, &mut out[PIXDIM..PIXDIM + 32]);

    let descrip = &mut out[DESCRIP..DESCRIP + DESCRIP_LEN];
    descrip.fill(0);
    let bytes = header.description.as_bytes();
    descrip[..bytes.len()].copy_from_slice(bytes);

    match format {
        Format::Analyze75 => {
            B::write_f32(&mut out[VOX_OFFSET..], 0.0);
            if &out[MAGIC..MAGIC + 4] == b"n+1\0" {
                out[MAGIC..MAGIC + 4].fill(0);
            }
        }
        Format::Nifti1 => {
            B::write_f32(&mut out[VOX_OFFSET..], NIFTI_VOX_OFFSET as f32);
            if fresh {
                // mm + seconds
                out[XYZT_UNITS] = 2 | 8;
            }
            out[MAGIC..MAGIC + 4].copy_from_slice(b"n+1\0");
        }
    }
    out
}
