//! ASCII PLY and OBJ for [`TriMesh`], with optional per-vertex scalar channels.
//!
//! Coordinates and scalars are printed with 6 significant digits in the style
//! of C's `%g`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::mesh::TriMesh;

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("scalar channel '{name}' has {found} values for {expected} vertices")]
    SizeMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, MeshIoError>;

/// Formats `x` like `printf("%g", x)`: 6 significant digits, trailing zeros
/// trimmed, exponent form outside `[1e-4, 1e6)`.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Named per-vertex scalar channel.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexScalar {
    pub name: String,
    pub values: Vec<f64>,
}

impl VertexScalar {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            values,
        }
    }
}

/// Renders an ASCII PLY with `x y z`, any extra scalar channels, and
/// `vertex_indices` faces.
pub fn ply_string(mesh: &TriMesh, scalars: &[VertexScalar]) -> Result<String> {
    let n = mesh.vertices.len();
    for s in scalars {
        if s.values.len() != n {
            return Err(MeshIoError::SizeMismatch {
                name: s.name.clone(),
                expected: n,
                found: s.values.len(),
            });
        }
    }
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {n}");
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    for s in scalars {
        let _ = writeln!(out, "property double {}", s.name);
    }
    let _ = writeln!(out, "element face {}", mesh.faces.len());
    out.push_str("property list uchar int vertex_indices\nend_header\n");
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = write!(
            out,
            "{} {} {}",
            format_g6(v[0]),
            format_g6(v[1]),
            format_g6(v[2])
        );
        for s in scalars {
            let _ = write!(out, " {}", format_g6(s.values[i]));
        }
        out.push('\n');
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    Ok(out)
}

pub fn obj_string(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(
            out,
            "v {} {} {}",
            format_g6(v[0]),
            format_g6(v[1]),
            format_g6(v[2])
        );
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// Mesh plus the extra vertex channels found in a PLY file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlyMesh {
    pub mesh: TriMesh,
    pub scalars: Vec<VertexScalar>,
}

impl PlyMesh {
    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        self.scalars
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.values.as_slice())
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> MeshIoError {
    MeshIoError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses an ASCII PLY with a `vertex` element (x, y, z plus scalar
/// properties) and a triangular `face` element.
pub fn parse_ply(text: &str) -> Result<PlyMesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_err(1, "missing 'ply' signature")),
    }

    let mut n_vertices = None;
    let mut n_faces = 0usize;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut saw_end = false;
    for (ln, line) in lines.by_ref() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["format", "ascii", _] => {}
            ["format", other, ..] => {
                return Err(parse_err(ln, format!("unsupported PLY format '{other}'")))
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => {
                let count: usize = count
                    .parse()
                    .map_err(|_| parse_err(ln, format!("bad element count '{count}'")))?;
                match *name {
                    "vertex" => n_vertices = Some(count),
                    "face" => n_faces = count,
                    other => return Err(parse_err(ln, format!("unsupported element '{other}'"))),
                }
                current = name.to_string();
            }
            ["property", "list", ..] if current == "face" => {}
            ["property", _ty, name] if current == "vertex" => vertex_props.push(name.to_string()),
            ["property", ..] => return Err(parse_err(ln, "unsupported property")),
            ["end_header"] => {
                saw_end = true;
                break;
            }
            _ => return Err(parse_err(ln, format!("unexpected header line '{line}'"))),
        }
    }
    if !saw_end {
        return Err(parse_err(0, "missing end_header"));
    }
    let n_vertices = n_vertices.ok_or_else(|| parse_err(0, "no vertex element"))?;
    let pos = |name: &str| vertex_props.iter().position(|p| p == name);
    let (ix, iy, iz) = match (pos("x"), pos("y"), pos("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(parse_err(0, "vertex element lacks x/y/z")),
    };
    let extra: Vec<usize> = (0..vertex_props.len())
        .filter(|&i| i != ix && i != iy && i != iz)
        .collect();

    let mut body = lines.filter(|(_, l)| !l.is_empty());
    let mut vertices = Vec::with_capacity(n_vertices);
    let mut scalars: Vec<VertexScalar> = extra
        .iter()
        .map(|&i| VertexScalar::new(&vertex_props[i], Vec::with_capacity(n_vertices)))
        .collect();
    for _ in 0..n_vertices {
        let (ln, line) = body
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of vertex data"))?;
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(ln, e.to_string()))?;
        if vals.len() != vertex_props.len() {
            return Err(parse_err(
                ln,
                format!("expected {} values, found {}", vertex_props.len(), vals.len()),
            ));
        }
        vertices.push([vals[ix], vals[iy], vals[iz]]);
        for (s, &i) in scalars.iter_mut().zip(&extra) {
            s.values.push(vals[i]);
        }
    }
    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (ln, line) = body
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of face data"))?;
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(ln, e.to_string()))?;
        if vals.len() != 4 || vals[0] != 3 {
            return Err(parse_err(ln, "only triangular faces are supported"));
        }
        faces.push([vals[1], vals[2], vals[3]]);
    }
    let mesh = TriMesh::new(vertices, faces);
    mesh.check_indices().map_err(|m| parse_err(0, m))?;
    Ok(PlyMesh { mesh, scalars })
}

/// Parses `v` and triangular `f` records of an OBJ file.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let c: Vec<f64> = toks
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(ln, e.to_string()))?;
                if c.len() < 3 {
                    return Err(parse_err(ln, "vertex needs 3 coordinates"));
                }
                vertices.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let idx: Vec<u32> = toks
                    .map(|t| {
                        t.split('/')
                            .next()
                            .unwrap_or("")
                            .parse::<u32>()
                            .map_err(|e| parse_err(ln, e.to_string()))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 || idx.contains(&0) {
                    return Err(parse_err(ln, "only 1-based triangular faces are supported"));
                }
                faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            _ => {}
        }
    }
    let mesh = TriMesh::new(vertices, faces);
    mesh.check_indices().map_err(|m| parse_err(0, m))?;
    Ok(mesh)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| MeshIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a `.ply` or `.obj` file by extension.
pub fn read_mesh_file(path: &Path) -> Result<PlyMesh> {
    let text = read_text(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("obj") => Ok(PlyMesh {
            mesh: parse_obj(&text)?,
            scalars: Vec::new(),
        }),
        _ => parse_ply(&text),
    }
}

/// Serializes by extension: `.obj` to OBJ, anything else to PLY.
pub fn mesh_bytes_for_path(path: &Path, mesh: &TriMesh, scalars: &[VertexScalar]) -> Result<Vec<u8>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("obj") => Ok(obj_string(mesh).into_bytes()),
        _ => Ok(ply_string(mesh, scalars)?.into_bytes()),
    }
}
