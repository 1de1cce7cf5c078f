use byteorder::{BigEndian, ByteOrder, LittleEndian};

use super::{Datatype, Endianness, ImgIoError, Result, VolumeHeader, VoxelData};

pub(super) fn decode(header: &VolumeHeader, raw: &[u8]) -> Result<VoxelData> {
    let n = header.voxel_count();
    let expected = n * header.datatype.bytes();
    if raw.len() < expected {
        return Err(ImgIoError::PayloadSizeMismatch {
            expected,
            found: raw.len(),
        });
    }
    let raw = &raw[..expected];
    Ok(match header.endianness {
        Endianness::Little => decode_with::<LittleEndian>(header.datatype, raw, n),
        Endianness::Big => decode_with::<BigEndian>(header.datatype, raw, n),
    })
}

fn decode_with<B: ByteOrder>(datatype: Datatype, raw: &[u8], n: usize) -> VoxelData {
    match datatype {
        Datatype::U8 => VoxelData::U8(raw.to_vec()),
        Datatype::I16 => {
            let mut v = vec![0; n];
            B::read_i16_into(raw, &mut v);
            VoxelData::I16(v)
        }
        Datatype::I32 => {
            let mut v = vec![0; n];
            B::read_i32_into(raw, &mut v);
            VoxelData::I32(v)
        }
        Datatype::F32 => {
            let mut v = vec![0.0; n];
            B::read_f32_into(raw, &mut v);
            VoxelData::F32(v)
        }
        Datatype::F64 => {
            let mut v = vec![0.0; n];
            B::read_f64_into(raw, &mut v);
            VoxelData::F64(v)
        }
    }
}

pub(super) fn encode(data: &VoxelData, endianness: Endianness) -> Vec<u8> {
    match endianness {
        Endianness::Little => encode_with::<LittleEndian>(data),
        Endianness::Big => encode_with::<BigEndian>(data),
    }
}

fn encode_with<B: ByteOrder>(data: &VoxelData) -> Vec<u8> {
    let mut out = vec![0u8; data.len() * data.datatype().bytes()];
    match data {
        VoxelData::U8(v) => out.copy_from_slice(v),
        VoxelData::I16(v) => B::write_i16_into(v, &mut out),
        VoxelData::I32(v) => B::write_i32_into(v, &mut out),
        VoxelData::F32(v) => B::write_f32_into(v, &mut out),
        VoxelData::F64(v) => B::write_f64_into(v, &mut out),
    }
    out
}
