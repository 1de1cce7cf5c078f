//! Landmark-based affine and rigid registration.
//!
//! An affine map q = Rp + c is stored as the augmented 4×4 matrix
//! `[[R, c], [0, 0, 0, 1]]`, which is linear on homogeneous coordinates.
//! Given corresponding landmarks stacked as columns, `Q` (3×k) and the
//! augmented `P` (4×k), the least-squares estimate is `[R̂ ĉ] = QPᵀ(PPᵀ)⁻¹`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3, Vector4};
use thiserror::Error;

use crate::mesh::TriMesh;

/// Condition number of the normal matrix `PPᵀ` above which the fit is
/// refused.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error)]
pub enum RegisterError {
    #[error("rank-deficient landmarks")]
    RankDeficient,
    #[error("landmark count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("landmark label mismatch at {index}: '{moving}' vs '{fixed}'")]
    LabelMismatch {
        index: usize,
        moving: String,
        fixed: String,
    },
    #[error("degenerate landmark configuration (collinear after centering)")]
    DegenerateConfiguration,
    #[error("singular transform")]
    SingularTransform,
    #[error("last row of an affine matrix must be (0, 0, 0, 1)")]
    NotAffine,
    #[error("duplicate landmark label '{0}'")]
    DuplicateLabel(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, RegisterError>;

/// Ordered, labeled landmarks of one subject (mm).
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    pub subject_id: String,
    labels: Vec<String>,
    points: Vec<[f64; 3]>,
}

impl LandmarkSet {
    pub fn new(subject_id: &str, labels: Vec<String>, points: Vec<[f64; 3]>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(RegisterError::SizeMismatch(labels.len(), points.len()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(RegisterError::DuplicateLabel(l.clone()));
            }
        }
        Ok(Self {
            subject_id: subject_id.to_string(),
            labels,
            points,
        })
    }

    /// Landmarks labeled `L0`, `L1`, ...
    pub fn from_points(subject_id: &str, points: Vec<[f64; 3]>) -> Self {
        let labels = (0..points.len()).map(|i| format!("L{i}")).collect();
        Self::new(subject_id, labels, points).expect("generated labels are unique")
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Parses CSV with header `label,x,y,z`.
    pub fn from_csv(subject_id: &str, text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| RegisterError::Parse(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["label", "x", "y", "z"] {
            return Err(RegisterError::Parse(format!(
                "expected header 'label,x,y,z', found '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut labels = Vec::new();
        let mut points = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| RegisterError::Parse(e.to_string()))?;
            let coord = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|e| {
                    RegisterError::Parse(format!("row {}: column {i}: {e}", row + 1))
                })
            };
            labels.push(record[0].to_string());
            points.push([coord(1)?, coord(2)?, coord(3)?]);
        }
        Self::new(subject_id, labels, points)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,x,y,z\n");
        for (l, p) in self.labels.iter().zip(&self.points) {
            let _ = writeln!(out, "{l},{:?},{:?},{:?}", p[0], p[1], p[2]);
        }
        out
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| RegisterError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_csv(&id, &text)
    }
}

/// 4×4 augmented affine matrix with last row (0, 0, 0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform(Matrix4<f64>);

impl AffineTransform {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self> {
        if m[(3, 0)] != 0.0 || m[(3, 1)] != 0.0 || m[(3, 2)] != 0.0 || m[(3, 3)] != 1.0 {
            return Err(RegisterError::NotAffine);
        }
        Ok(Self(m))
    }

    pub fn from_parts(linear: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&linear);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Self(m)
    }

    pub fn translation_by(t: [f64; 3]) -> Self {
        Self::from_parts(Matrix3::identity(), Vector3::from(t))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// The 3×3 block R.
    pub fn linear(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    /// The translation c.
    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn apply_point(&self, p: [f64; 3]) -> [f64; 3] {
        let q = self.0 * Vector4::new(p[0], p[1], p[2], 1.0);
        [q[0], q[1], q[2]]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &AffineTransform) -> AffineTransform {
        let mut m = self.0 * other.0;
        m.fixed_view_mut::<1, 4>(3, 0)
            .copy_from_slice(&[0.0, 0.0, 0.0, 1.0]);
        Self(m)
    }

    /// Four rows of four numbers, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in 0..4 {
            let row: Vec<String> = (0..4).map(|c| format!("{:.16e}", self.0[(r, c)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let vals = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| RegisterError::Parse(e.to_string()))?;
        if vals.len() != 16 {
            return Err(RegisterError::Parse(format!(
                "expected 16 matrix entries, found {}",
                vals.len()
            )));
        }
        Self::from_matrix(Matrix4::from_row_slice(&vals))
    }
}

fn check_pair(moving: &LandmarkSet, fixed: &LandmarkSet) -> Result<()> {
    if moving.len() != fixed.len() {
        return Err(RegisterError::SizeMismatch(moving.len(), fixed.len()));
    }
    for (index, (a, b)) in moving.labels.iter().zip(&fixed.labels).enumerate() {
        if a != b {
            return Err(RegisterError::LabelMismatch {
                index,
                moving: a.clone(),
                fixed: b.clone(),
            });
        }
    }
    Ok(())
}

/// Least-squares affine map taking `moving` onto `fixed`.
///
/// Solves the k×4 system `[pᵢ 1] Xᵀ = qᵢ` through an SVD, which yields the
/// normal-equation solution `QPᵀ(PPᵀ)⁻¹` without forming `PPᵀ`.
pub fn estimate_affine(moving: &LandmarkSet, fixed: &LandmarkSet) -> Result<AffineTransform> {
    check_pair(moving, fixed)?;
    let k = moving.len();
    if k < 4 {
        return Err(RegisterError::RankDeficient);
    }
    let design = DMatrix::from_fn(k, 4, |r, c| if c < 3 { moving.points[r][c] } else { 1.0 });
    let targets = DMatrix::from_fn(k, 3, |r, c| fixed.points[r][c]);

    let svd = design.svd(true, true);
    let s = &svd.singular_values;
    let (smax, smin) = (s.max(), s.min());
    // cond(PPᵀ) = cond(design)²
    if !(smin > 0.0) || (smax / smin).powi(2) > MAX_CONDITION {
        return Err(RegisterError::RankDeficient);
    }
    let u = svd.u.as_ref().expect("u computed");
    let v_t = svd.v_t.as_ref().expect("v_t computed");
    // X = V Σ⁻¹ Uᵀ Y, a 4×3 matrix whose transpose is [R̂ ĉ].
    let uty = u.transpose() * targets;
    let scaled = DMatrix::from_fn(4, 3, |r, c| uty[(r, c)] / s[r]);
    let x = v_t.transpose() * scaled;

    let linear = Matrix3::from_fn(|r, c| x[(c, r)]);
    let translation = Vector3::new(x[(3, 0)], x[(3, 1)], x[(3, 2)]);
    Ok(AffineTransform::from_parts(linear, translation))
}

fn centroid(points: &[[f64; 3]]) -> Vector3<f64> {
    let n = points.len() as f64;
    points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + Vector3::from(*p))
        / n
}

/// Least-squares rotation plus translation taking `moving` onto `fixed`
/// (R ᵀR = I, det R = +1).
///
/// Closed form: R is the orthogonal polar factor of the centered
/// cross-covariance, with the smallest singular direction sign-corrected to
/// exclude reflections; c = q̄ − R p̄.
pub fn estimate_rigid(moving: &LandmarkSet, fixed: &LandmarkSet) -> Result<AffineTransform> {
    check_pair(moving, fixed)?;
    if moving.len() < 3 {
        return Err(RegisterError::DegenerateConfiguration);
    }
    let pc = centroid(&moving.points);
    let qc = centroid(&fixed.points);

    let spread = DMatrix::from_fn(moving.len(), 3, |r, c| moving.points[r][c] - pc[c]);
    let sv = spread.singular_values();
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if !(sorted[0] > 0.0) || sorted[1] <= 1e-12 * sorted[0] {
        return Err(RegisterError::DegenerateConfiguration);
    }

    let mut h = Matrix3::zeros();
    for (p, q) in moving.points.iter().zip(&fixed.points) {
        h += (Vector3::from(*p) - pc) * (Vector3::from(*q) - qc).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("u computed");
    let v = svd.v_t.expect("v_t computed").transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(svd.singular_values.imin(), svd.singular_values.imin())] = -1.0;
    }
    let rotation = v * d * u.transpose();
    Ok(AffineTransform::from_parts(rotation, qc - rotation * pc))
}

/// Inverse map with blocks (R⁻¹, −R⁻¹c).
pub fn invert_affine(a: &AffineTransform) -> Result<AffineTransform> {
    let r = a.linear();
    if r.determinant().abs() <= 1e-12 {
        return Err(RegisterError::SingularTransform);
    }
    let r_inv = r.try_inverse().ok_or(RegisterError::SingularTransform)?;
    Ok(AffineTransform::from_parts(r_inv, -(r_inv * a.translation())))
}

pub fn apply_affine_points(a: &AffineTransform, points: &[[f64; 3]]) -> Vec<[f64; 3]> {
    points.iter().map(|&p| a.apply_point(p)).collect()
}

/// Transforms a mesh; reflections (det R < 0) also flip face winding.
pub fn apply_affine_mesh(a: &AffineTransform, mesh: &TriMesh) -> TriMesh {
    let mut out = TriMesh::new(apply_affine_points(a, &mesh.vertices), mesh.faces.clone());
    if a.linear().determinant() < 0.0 {
        out.flip_winding();
    }
    out
}

pub fn apply_affine_landmarks(a: &AffineTransform, set: &LandmarkSet) -> LandmarkSet {
    LandmarkSet {
        subject_id: set.subject_id.clone(),
        labels: set.labels.clone(),
        points: apply_affine_points(a, &set.points),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub rms: f64,
    pub per_landmark: Vec<f64>,
}

/// Distances ‖qᵢ − (Rpᵢ + c)‖ and their root mean square.
pub fn registration_residual(
    a: &AffineTransform,
    moving: &LandmarkSet,
    fixed: &LandmarkSet,
) -> Result<Residual> {
    residual_points(a, &moving.points, &fixed.points)
}

pub fn residual_points(
    a: &AffineTransform,
    moving: &[[f64; 3]],
    fixed: &[[f64; 3]],
) -> Result<Residual> {
    if moving.len() != fixed.len() {
        return Err(RegisterError::SizeMismatch(moving.len(), fixed.len()));
    }
    let per_landmark: Vec<f64> = moving
        .iter()
        .zip(fixed)
        .map(|(&p, q)| {
            let m = a.apply_point(p);
            ((m[0] - q[0]).powi(2) + (m[1] - q[1]).powi(2) + (m[2] - q[2]).powi(2)).sqrt()
        })
        .collect();
    let rms = if per_landmark.is_empty() {
        0.0
    } else {
        (per_landmark.iter().map(|d| d * d).sum::<f64>() / per_landmark.len() as f64).sqrt()
    };
    Ok(Residual { rms, per_landmark })
}
