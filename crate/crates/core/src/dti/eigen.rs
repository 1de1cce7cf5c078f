//! Symmetric 3×3 eigendecomposition.
//!
//! Eigenvalues come from the characteristic polynomial via the trigonometric
//! form of the cubic roots. The eigenvector of the eigenvalue farthest from the
//! middle one is a cross product of two rows of `D − λI`; the remaining pair is
//! solved as a 2×2 problem in its orthogonal complement, so the frame is
//! orthonormal by construction. Nearly repeated roots (relative gap below
//! [`DEGENERACY_GAP`]) go through cyclic Jacobi instead, and each eigenspace
//! of a repeated eigenvalue (gap below [`REPEATED_GAP`]) gets a deterministic
//! basis from the canonical axes.

use super::{DiffusionTensor, DtiError};

/// Relative eigenvalue gap below which the closed form hands over to Jacobi.
pub const DEGENERACY_GAP: f64 = 1e-8;

/// Relative gap below which eigenvalues count as repeated and their
/// eigenspace gets the canonical basis. Swapping the basis of a cluster with
/// gap g perturbs `Dv − λv` by up to g, so this stays well under the
/// residual the solver guarantees.
pub const REPEATED_GAP: f64 = 1e-11;

type Vec3 = [f64; 3];
type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    /// λ1 ≥ λ2 ≥ λ3.
    pub lambdas: [f64; 3],
    /// Unit eigenvectors in the order of `lambdas`.
    pub vectors: [Vec3; 3],
}

impl EigenSystem {
    pub fn principal(&self) -> Vec3 {
        self.vectors[0]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.lambdas.iter().all(|&l| l > 0.0)
    }

    /// Σ λᵢ vᵢvᵢᵀ.
    pub fn reconstruct(&self) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (l, v) in self.lambdas.iter().zip(&self.vectors) {
            for r in 0..3 {
                for c in 0..3 {
                    m[r][c] += l * v[r] * v[c];
                }
            }
        }
        m
    }
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    a.map(|x| x * s)
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn normalized(a: Vec3) -> Vec3 {
    scale(a, 1.0 / dot(a, a).sqrt())
}

fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

fn quad(m: &Mat3, a: Vec3, b: Vec3) -> f64 {
    dot(a, mat_vec(m, b))
}

/// First component with magnitude above 1e-12 made positive.
fn canonical_sign(v: Vec3) -> Vec3 {
    match v.iter().find(|c| c.abs() > 1e-12) {
        Some(&c) if c < 0.0 => scale(v, -1.0),
        _ => v,
    }
}

const AXES: [Vec3; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Unit vector orthogonal to `v` (|v| = 1): Gram–Schmidt of the first
/// canonical axis that is not nearly parallel.
fn orthogonal_to(v: Vec3) -> Vec3 {
    let axis = AXES
        .iter()
        .copied()
        .min_by(|a, b| dot(*a, v).abs().total_cmp(&dot(*b, v).abs()))
        .expect("three axes");
    normalized(sub(axis, scale(v, dot(axis, v))))
}

/// Roots of the characteristic polynomial, descending.
fn trig_roots(a: &Mat3) -> Option<[f64; 3]> {
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return None;
    }
    let b = |r: usize, c: usize| (a[r][c] - if r == c { q } else { 0.0 }) / p;
    let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
        - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    Some([l1, 3.0 * q - l1 - l3, l3])
}

/// Eigenvector of a simple eigenvalue: the longest cross product of two rows
/// of `A − λI`.
fn null_vector(a: &Mat3, lambda: f64) -> Vec3 {
    let r = |i: usize| {
        let mut row = a[i];
        row[i] -= lambda;
        row
    };
    [cross(r(0), r(1)), cross(r(0), r(2)), cross(r(1), r(2))]
        .into_iter()
        .max_by(|x, y| dot(*x, *x).total_cmp(&dot(*y, *y)))
        .map(normalized)
        .expect("three candidates")
}

/// Eigenpairs of a symmetric 2×2 `[[a, b], [b, c]]`: (λ_hi, λ_lo, cos, sin),
/// with (cos, sin) the unit eigenvector of λ_hi.
fn sym2(a: f64, b: f64, c: f64) -> (f64, f64, f64, f64) {
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (s, co) = theta.sin_cos();
    let hi = a * co * co + 2.0 * b * co * s + c * s * s;
    let lo = a * s * s - 2.0 * b * co * s + c * co * co;
    (hi, lo, co, s)
}

fn closed_form(a: &Mat3, roots: [f64; 3]) -> EigenSystem {
    let [l1, l2, l3] = roots;
    // isolate the root farthest from the middle one
    let top = l1 - l2 >= l2 - l3;
    let v = null_vector(a, if top { l1 } else { l3 });
    let u = orthogonal_to(v);
    let w = cross(v, u);
    let (hi, lo, c, s) = sym2(quad(a, u, u), quad(a, u, w), quad(a, w, w));
    let e_hi = [u[0] * c + w[0] * s, u[1] * c + w[1] * s, u[2] * c + w[2] * s];
    let e_lo = cross(v, e_hi);
    let lv = quad(a, v, v);
    let mut pairs = [(lv, v), (hi, e_hi), (lo, e_lo)];
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    EigenSystem {
        lambdas: pairs.map(|p| p.0),
        vectors: pairs.map(|p| p.1),
    }
}

/// Cyclic Jacobi sweeps until the off-diagonal part vanishes.
fn jacobi(a: &Mat3) -> EigenSystem {
    let mut m = *a;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..64 {
        let off = m[0][1].abs() + m[0][2].abs() + m[1][2].abs();
        if off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // m ← Jᵀ m J, v ← v J
            for k in 0..3 {
                let (mkp, mkq) = (m[k][p], m[k][q]);
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let (mpk, mqk) = (m[p][k], m[q][k]);
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let col = |j: usize| [v[0][j], v[1][j], v[2][j]];
    let mut pairs = [(m[0][0], col(0)), (m[1][1], col(1)), (m[2][2], col(2))];
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    EigenSystem {
        lambdas: pairs.map(|p| p.0),
        vectors: pairs.map(|p| p.1),
    }
}

/// Replaces the vectors of each repeated-eigenvalue cluster by the
/// Gram–Schmidt orthonormalisation of the canonical axes projected onto the
/// cluster's eigenspace.
fn canonical_clusters(sys: &mut EigenSystem, tol: f64) {
    let l = sys.lambdas;
    let same01 = l[0] - l[1] <= tol;
    let same12 = l[1] - l[2] <= tol;
    let cluster = match (same01, same12) {
        (true, true) => {
            sys.vectors = AXES;
            return;
        }
        (true, false) => [0, 1],
        (false, true) => [1, 2],
        (false, false) => return,
    };
    let span = cluster.map(|i| sys.vectors[i]);
    let mut basis: Vec<Vec3> = Vec::with_capacity(2);
    for axis in AXES {
        let mut p = span.iter().fold([0.0; 3], |acc, &b| {
            let t = scale(b, dot(axis, b));
            [acc[0] + t[0], acc[1] + t[1], acc[2] + t[2]]
        });
        for &b in &basis {
            p = sub(p, scale(b, dot(p, b)));
        }
        if dot(p, p) > 1e-6 {
            basis.push(normalized(p));
            if basis.len() == 2 {
                break;
            }
        }
    }
    for (slot, b) in cluster.into_iter().zip(basis) {
        sys.vectors[slot] = b;
    }
}

pub fn eigendecompose(d: &DiffusionTensor) -> Result<EigenSystem, DtiError> {
    let a = d.matrix();
    if a.iter().flatten().any(|x| !x.is_finite()) {
        return Err(DtiError::NonFinite);
    }
    let s = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if s == 0.0 {
        return Ok(EigenSystem {
            lambdas: [0.0; 3],
            vectors: AXES,
        });
    }
    let a = a.map(|r| r.map(|x| x / s));

    let mut sys = match trig_roots(&a) {
        Some(roots) => {
            let span = roots[0].abs().max(roots[2].abs());
            if (roots[0] - roots[1]).min(roots[1] - roots[2]) < DEGENERACY_GAP * span {
                let mut sys = jacobi(&a);
                let span = sys.lambdas[0].abs().max(sys.lambdas[2].abs());
                canonical_clusters(&mut sys, REPEATED_GAP * span);
                sys
            } else {
                closed_form(&a, roots)
            }
        }
        None => EigenSystem {
            lambdas: [a[0][0]; 3],
            vectors: AXES,
        },
    };
    sys.lambdas = sys.lambdas.map(|l| l * s);
    sys.vectors = sys.vectors.map(canonical_sign);
    Ok(sys)
}
