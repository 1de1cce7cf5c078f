//! Marching-cubes surfaces from scalar volumes and binary masks.

mod table;

use std::collections::HashMap;

use thiserror::Error;

use crate::imgio::{Volume3D, VolumeHeader, VoxelData};
use crate::mesh::TriMesh;
use table::{cases, CORNERS, EDGES};

#[derive(Debug, Error)]
pub enum IsoError {
    #[error("isovalue {iso} yields an empty surface (data range [{min}, {max}])")]
    EmptySurface { iso: f64, min: f64, max: f64 },
    #[error("volume dims {0:?} too small for marching cubes (each must be >= 2)")]
    DegenerateVolume([usize; 3]),
}

type Result<T> = std::result::Result<T, IsoError>;

/// Lattice point index of an edge's lower end and the edge axis.
type EdgeKey = (usize, u8);

/// Extracts the level set `{I(x) = iso}` of the first frame of `vol`.
///
/// Voxels with value above `iso` are inside. Vertices sit at the linear
/// interpolation of the crossing along each cell edge and are shared between
/// cells by edge identity, so the mesh is closed wherever the inside region
/// does not touch the volume boundary. Coordinates are voxel indices times
/// voxel size, in mm.
pub fn marching_cubes(vol: &Volume3D, iso: f64) -> Result<TriMesh> {
    let dims = vol.spatial_dims();
    if dims.iter().any(|&d| d < 2) {
        return Err(IsoError::DegenerateVolume(dims));
    }
    let values = vol.spatial_values();
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(min <= iso && iso < max) {
        return Err(IsoError::EmptySurface { iso, min, max });
    }

    let [nx, ny, nz] = dims;
    let spacing = vol.voxel_size();
    let point = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    let table = cases();

    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut lookup: HashMap<EdgeKey, u32> = HashMap::new();

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut corner_vals = [0.0; 8];
                let mut case = 0usize;
                for (c, off) in CORNERS.iter().enumerate() {
                    let v = values[point(i + off[0], j + off[1], k + off[2])];
                    corner_vals[c] = v;
                    if v > iso {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                let entry = &table[case];

                let mut edge_vertex = |e: u8, vertices: &mut Vec<[f64; 3]>| -> u32 {
                    let [a, b] = EDGES[e as usize];
                    let (lo, hi) = if CORNERS[a] < CORNERS[b] { (a, b) } else { (b, a) };
                    let o = CORNERS[lo];
                    let axis = (0..3).find(|&d| CORNERS[hi][d] != o[d]).expect("axis edge");
                    let key = (point(i + o[0], j + o[1], k + o[2]), axis as u8);
                    *lookup.entry(key).or_insert_with(|| {
                        let (v0, v1) = (corner_vals[lo], corner_vals[hi]);
                        let t = (iso - v0) / (v1 - v0);
                        let mut p = [(i + o[0]) as f64, (j + o[1]) as f64, (k + o[2]) as f64];
                        p[axis] += t;
                        vertices.push([p[0] * spacing[0], p[1] * spacing[1], p[2] * spacing[2]]);
                        (vertices.len() - 1) as u32
                    })
                };

                for tri in &entry.triangles {
                    let f = tri.map(|e| edge_vertex(e, &mut vertices));
                    faces.push(f);
                }
            }
        }
    }
    Ok(TriMesh::new(vertices, faces))
}

/// Copy of `vol` (first frame, as float64) surrounded by `pad` voxels of `value`.
pub fn pad_volume(vol: &Volume3D, pad: usize, value: f64) -> Volume3D {
    let [nx, ny, nz] = vol.spatial_dims();
    let dims = [nx + 2 * pad, ny + 2 * pad, nz + 2 * pad];
    let mut data = vec![value; dims.iter().product()];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                data[(i + pad) + dims[0] * ((j + pad) + dims[1] * (k + pad))] = vol.get(i, j, k);
            }
        }
    }
    let mut header: VolumeHeader = vol.header().clone();
    header.dims = [dims[0], dims[1], dims[2], 1];
    header.datatype = crate::imgio::Datatype::F64;
    Volume3D::new(header, VoxelData::F64(data)).expect("padded dims are valid")
}

/// [`marching_cubes`] on a zero-padded copy, with coordinates shifted back to
/// the original grid.
pub fn marching_cubes_padded(vol: &Volume3D, iso: f64, pad: usize) -> Result<TriMesh> {
    if pad == 0 {
        return marching_cubes(vol, iso);
    }
    let mut mesh = marching_cubes(&pad_volume(vol, pad, 0.0), iso)?;
    let s = vol.voxel_size();
    for v in &mut mesh.vertices {
        for d in 0..3 {
            v[d] -= pad as f64 * s[d];
        }
    }
    Ok(mesh)
}

/// Exchanges the x and y columns and flips every face to keep the outward
/// orientation.
pub fn swap_xy(mesh: &TriMesh) -> TriMesh {
    let mut out = mesh.clone();
    for v in &mut out.vertices {
        v.swap(0, 1);
    }
    out.flip_winding();
    out
}
