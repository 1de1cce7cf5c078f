//! Vertex-wise surface morphometry over ensembles of meshes that share one
//! connectivity: the population template is the per-vertex mean, and each
//! subject's displacement field is its offset from that template.

use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::mesh::TriMesh;
use crate::meshio::{self, MeshIoError, VertexScalar};

pub const ENSEMBLE_MAGIC: &[u8; 5] = b"NGEN1";

#[derive(Debug, Error)]
pub enum MorphoError {
    #[error("ensemble has no subjects")]
    EmptyEnsemble,
    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),
    #[error("subject index {index} out of range for {count} subjects")]
    SubjectOutOfRange { index: usize, count: usize },
    #[error("scalar has {found} values for {expected} vertices")]
    SizeMismatch { expected: usize, found: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Mesh(#[from] MeshIoError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, MorphoError>;

/// Meshes of `s` subjects with identical faces; coordinates in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceEnsemble {
    subject_ids: Vec<String>,
    faces: Vec<[u32; 3]>,
    coords: Vec<Vec<[f64; 3]>>,
}

impl SurfaceEnsemble {
    pub fn new(subject_ids: Vec<String>, faces: Vec<[u32; 3]>, coords: Vec<Vec<[f64; 3]>>) -> Result<Self> {
        if subject_ids.len() != coords.len() {
            return Err(MorphoError::Parse(format!(
                "{} subject ids for {} coordinate sets",
                subject_ids.len(),
                coords.len()
            )));
        }
        if let Some(first) = coords.first() {
            let n = first.len();
            for (id, c) in subject_ids.iter().zip(&coords) {
                if c.len() != n {
                    return Err(MorphoError::TopologyMismatch(format!(
                        "subject '{id}' has {} vertices, expected {n}",
                        c.len()
                    )));
                }
            }
            if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i as usize >= n)) {
                return Err(MorphoError::TopologyMismatch(format!(
                    "face {f:?} references a vertex beyond {n}"
                )));
            }
        }
        Ok(Self {
            subject_ids,
            faces,
            coords,
        })
    }

    /// Builds an ensemble from `(id, voxel_scale, mesh)` triples, multiplying
    /// each subject's coordinates by its scale.
    pub fn from_meshes(subjects: Vec<(String, f64, TriMesh)>) -> Result<Self> {
        let mut ids = Vec::with_capacity(subjects.len());
        let mut coords = Vec::with_capacity(subjects.len());
        let mut faces: Option<Vec<[u32; 3]>> = None;
        for (id, scale, mesh) in subjects {
            match &faces {
                None => faces = Some(mesh.faces),
                Some(f) if *f != mesh.faces => {
                    return Err(MorphoError::TopologyMismatch(format!(
                        "subject '{id}' faces differ from the first subject"
                    )))
                }
                Some(_) => {}
            }
            coords.push(mesh.vertices.iter().map(|v| v.map(|x| x * scale)).collect());
            ids.push(id);
        }
        Self::new(ids, faces.unwrap_or_default(), coords)
    }

    pub fn subject_count(&self) -> usize {
        self.coords.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn coords(&self, subject: usize) -> &[[f64; 3]] {
        &self.coords[subject]
    }

    pub fn subject_mesh(&self, subject: usize) -> TriMesh {
        TriMesh::new(self.coords[subject].clone(), self.faces.clone())
    }

    /// Applies `f` to every vertex of every subject.
    pub fn map_points(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        Self {
            subject_ids: self.subject_ids.clone(),
            faces: self.faces.clone(),
            coords: self
                .coords
                .iter()
                .map(|c| c.iter().map(|&p| f(p)).collect())
                .collect(),
        }
    }

    /// Packed binary: magic, u64 `s n m`, faces as u64 triples, then
    /// subject-major f64 coordinates, all little-endian. Subject ids are not
    /// stored.
    pub fn to_packed(&self) -> Vec<u8> {
        let (s, n, m) = (self.subject_count(), self.vertex_count(), self.faces.len());
        let mut out = Vec::with_capacity(5 + 24 + m * 24 + s * n * 24);
        out.extend_from_slice(ENSEMBLE_MAGIC);
        for v in [s, n, m] {
            out.write_u64::<LittleEndian>(v as u64).unwrap();
        }
        for f in &self.faces {
            for &i in f {
                out.write_u64::<LittleEndian>(i as u64).unwrap();
            }
        }
        for c in &self.coords {
            for p in c {
                for &x in p {
                    out.write_f64::<LittleEndian>(x).unwrap();
                }
            }
        }
        out
    }

    /// Reads the packed binary; subjects are named by their index.
    pub fn from_packed(bytes: &[u8]) -> Result<Self> {
        let truncated = |_| MorphoError::Parse("truncated ensemble file".into());
        let mut r = Cursor::new(bytes);
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != ENSEMBLE_MAGIC {
            return Err(MorphoError::Parse("missing NGEN1 magic".into()));
        }
        let mut header = [0u64; 3];
        r.read_u64_into::<LittleEndian>(&mut header).map_err(truncated)?;
        let [s, n, m] = header.map(|v| v as usize);
        let body = s
            .checked_mul(n)
            .and_then(|sn| sn.checked_add(m))
            .and_then(|t| t.checked_mul(24));
        if body != Some(bytes.len() - 29) {
            return Err(MorphoError::Parse(format!(
                "size {} does not match s={s} n={n} m={m}",
                bytes.len()
            )));
        }
        let mut raw_faces = vec![0u64; 3 * m];
        r.read_u64_into::<LittleEndian>(&mut raw_faces).map_err(truncated)?;
        let mut faces = Vec::with_capacity(m);
        for f in raw_faces.chunks_exact(3) {
            let idx = |v: u64| {
                u32::try_from(v).map_err(|_| MorphoError::Parse(format!("face index {v} too large")))
            };
            faces.push([idx(f[0])?, idx(f[1])?, idx(f[2])?]);
        }
        let mut flat = vec![0f64; 3 * n * s];
        r.read_f64_into::<LittleEndian>(&mut flat).map_err(truncated)?;
        let coords = flat
            .chunks_exact(3 * n.max(1))
            .take(s)
            .map(|c| c.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect())
            .collect::<Vec<Vec<_>>>();
        let coords = if n == 0 { vec![Vec::new(); s] } else { coords };
        Self::new((0..s).map(|i| i.to_string()).collect(), faces, coords)
    }

    /// Reads a manifest CSV with header `subject_id,voxel_scale,mesh`; mesh
    /// paths are relative to the manifest's directory.
    pub fn read_manifest(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| MorphoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| MorphoError::Parse(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["subject_id", "voxel_scale", "mesh"] {
            return Err(MorphoError::Parse(
                "manifest header must be 'subject_id,voxel_scale,mesh'".into(),
            ));
        }
        let mut subjects = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| MorphoError::Parse(e.to_string()))?;
            let scale: f64 = record[1]
                .parse()
                .map_err(|e| MorphoError::Parse(format!("row {}: voxel_scale: {e}", row + 1)))?;
            if !(scale.is_finite() && scale > 0.0) {
                return Err(MorphoError::Parse(format!(
                    "row {}: voxel_scale must be positive",
                    row + 1
                )));
            }
            let mesh = meshio::read_mesh_file(&base.join(&record[2]))?.mesh;
            subjects.push((record[0].to_string(), scale, mesh));
        }
        Self::from_meshes(subjects)
    }

    /// Packed binary if the file starts with the magic, manifest otherwise.
    pub fn read_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| MorphoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if bytes.starts_with(ENSEMBLE_MAGIC) {
            Self::from_packed(&bytes)
        } else {
            Self::read_manifest(path)
        }
    }
}

/// Per-vertex arithmetic mean of the subjects, with the shared faces.
pub fn average_template(ens: &SurfaceEnsemble) -> Result<TriMesh> {
    let s = ens.subject_count();
    if s == 0 {
        return Err(MorphoError::EmptyEnsemble);
    }
    let mut sum = vec![[0.0f64; 3]; ens.vertex_count()];
    for c in &ens.coords {
        for (acc, p) in sum.iter_mut().zip(c) {
            for k in 0..3 {
                acc[k] += p[k];
            }
        }
    }
    let vertices = sum.into_iter().map(|p| p.map(|x| x / s as f64)).collect();
    Ok(TriMesh::new(vertices, ens.faces.clone()))
}

/// Per-vertex vectors from a template to a subject, with their lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub vectors: Vec<[f64; 3]>,
    pub lengths: Vec<f64>,
}

impl DisplacementField {
    pub fn between(template: &[[f64; 3]], subject: &[[f64; 3]]) -> Result<Self> {
        if template.len() != subject.len() {
            return Err(MorphoError::TopologyMismatch(format!(
                "template has {} vertices, subject has {}",
                template.len(),
                subject.len()
            )));
        }
        let vectors: Vec<[f64; 3]> = subject
            .iter()
            .zip(template)
            .map(|(s, t)| [s[0] - t[0], s[1] - t[1], s[2] - t[2]])
            .collect();
        let lengths = vectors
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
            .collect();
        Ok(Self { vectors, lengths })
    }
}

pub fn displacement_field(ens: &SurfaceEnsemble, template: &TriMesh, subject: usize) -> Result<DisplacementField> {
    if subject >= ens.subject_count() {
        return Err(MorphoError::SubjectOutOfRange {
            index: subject,
            count: ens.subject_count(),
        });
    }
    if template.faces != ens.faces {
        return Err(MorphoError::TopologyMismatch(
            "template faces differ from the ensemble".into(),
        ));
    }
    DisplacementField::between(&template.vertices, &ens.coords[subject])
}

/// PLY text with the scalar as a per-vertex `quality` property.
pub fn scalar_mesh_ply(mesh: &TriMesh, scalar: &[f64]) -> Result<String> {
    if scalar.len() != mesh.vertices.len() {
        return Err(MorphoError::SizeMismatch {
            expected: mesh.vertices.len(),
            found: scalar.len(),
        });
    }
    Ok(meshio::ply_string(mesh, &[VertexScalar::new("quality", scalar.to_vec())])?)
}

pub fn export_scalar_mesh(mesh: &TriMesh, scalar: &[f64], path: &Path) -> Result<()> {
    let text = scalar_mesh_ply(mesh, scalar)?;
    std::fs::write(path, text).map_err(|source| MorphoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tet() -> TriMesh {
        TriMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
        )
    }

    fn shifted(m: &TriMesh, t: [f64; 3]) -> TriMesh {
        TriMesh::new(
            m.vertices.iter().map(|p| [p[0] + t[0], p[1] + t[1], p[2] + t[2]]).collect(),
            m.faces.clone(),
        )
    }

    #[test]
    fn single_subject_template() {
        let ens = SurfaceEnsemble::from_meshes(vec![("a".into(), 1.0, tet())]).unwrap();
        assert_eq!(average_template(&ens).unwrap(), tet());
    }

    #[test]
    fn midpoint_of_translates() {
        let ens = SurfaceEnsemble::from_meshes(vec![
            ("a".into(), 1.0, shifted(&tet(), [2.0, -1.0, 0.5])),
            ("b".into(), 1.0, shifted(&tet(), [-2.0, 1.0, -0.5])),
        ])
        .unwrap();
        assert_eq!(average_template(&ens).unwrap(), tet());
    }

    #[test]
    fn empty_ensemble() {
        let ens = SurfaceEnsemble::from_meshes(Vec::new()).unwrap();
        assert!(matches!(average_template(&ens), Err(MorphoError::EmptyEnsemble)));
    }

    #[test]
    fn voxel_scale_applied_at_ingestion() {
        let ens = SurfaceEnsemble::from_meshes(vec![("a".into(), 0.5, tet())]).unwrap();
        assert_eq!(ens.coords(0)[1], [0.5, 0.0, 0.0]);
    }

    #[test]
    fn mismatched_faces_rejected() {
        let mut other = tet();
        other.faces.swap(0, 1);
        let r = SurfaceEnsemble::from_meshes(vec![("a".into(), 1.0, tet()), ("b".into(), 1.0, other)]);
        assert!(matches!(r, Err(MorphoError::TopologyMismatch(_))));
    }

    #[test]
    fn three_four_five() {
        let ens = SurfaceEnsemble::from_meshes(vec![("a".into(), 1.0, shifted(&tet(), [3.0, 4.0, 0.0]))]).unwrap();
        let d = displacement_field(&ens, &tet(), 0).unwrap();
        assert!(d.lengths.iter().all(|&l| l == 5.0));
        let zero = displacement_field(&ens, &ens.subject_mesh(0), 0).unwrap();
        assert!(zero.lengths.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn displacement_errors() {
        let ens = SurfaceEnsemble::from_meshes(vec![("a".into(), 1.0, tet())]).unwrap();
        assert!(matches!(
            displacement_field(&ens, &tet(), 1),
            Err(MorphoError::SubjectOutOfRange { index: 1, count: 1 })
        ));
        let small = TriMesh::new(vec![[0.0; 3]; 3], vec![[0, 1, 2]]);
        assert!(matches!(displacement_field(&ens, &small, 0), Err(MorphoError::TopologyMismatch(_))));
    }

    #[test]
    fn packed_round_trip() {
        let ens = SurfaceEnsemble::from_meshes(vec![
            ("0".into(), 1.0, tet()),
            ("1".into(), 1.0, shifted(&tet(), [0.1, 0.2, 0.3])),
        ])
        .unwrap();
        let bytes = ens.to_packed();
        assert_eq!(&bytes[..5], b"NGEN1");
        assert_eq!(bytes.len(), 29 + 4 * 24 + 2 * 4 * 24);
        assert_eq!(SurfaceEnsemble::from_packed(&bytes).unwrap(), ens);
        assert!(SurfaceEnsemble::from_packed(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn scalar_export_size_checked() {
        assert!(matches!(
            scalar_mesh_ply(&tet(), &[1.0]),
            Err(MorphoError::SizeMismatch { expected: 4, found: 1 })
        ));
        let parsed = meshio::parse_ply(&scalar_mesh_ply(&tet(), &[0.0; 4]).unwrap()).unwrap();
        assert_eq!(parsed.scalar("quality").unwrap(), &[0.0; 4]);
    }
}
