#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{Matrix3, Vector3};
use neurogeom::dti::{tracts_to_text, Tract};
use neurogeom::imgio::{write_analyze, write_nifti1};
use neurogeom::isosurface::marching_cubes;
use neurogeom::meshio::ply_string;
use neurogeom::register::{AffineTransform, LandmarkSet};
use neurogeom::{Datatype, Format, TriMesh, Volume3D, VolumeHeader, VoxelData};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn neurogeom(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neurogeom"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn write_volume_pair(path: &Path, vol: &Volume3D) {
    let (hdr, img) = write_analyze(vol).unwrap();
    std::fs::write(path.with_extension("hdr"), hdr).unwrap();
    std::fs::write(path.with_extension("img"), img).unwrap();
}

pub fn write_nii(path: &Path, vol: &Volume3D) {
    std::fs::write(path, write_nifti1(&vol.clone().with_format(Format::Nifti1)).unwrap()).unwrap();
}

pub fn write_mesh(path: &Path, mesh: &TriMesh) {
    std::fs::write(path, ply_string(mesh, &[]).unwrap()).unwrap();
}

/// Unit tetrahedron with outward faces.
pub fn tetrahedron() -> TriMesh {
    TriMesh::new(
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
    )
}

fn grid<F: Fn(f64, f64, f64) -> bool>(n: usize, inside: F) -> Vec<u8> {
    (0..n * n * n)
        .map(|idx| inside((idx % n) as f64, ((idx / n) % n) as f64, (idx / (n * n)) as f64) as u8)
        .collect()
}

pub fn ball(n: usize, r: f64) -> Volume3D {
    let c = (n as f64 - 1.0) / 2.0;
    let data = grid(n, |x, y, z| (x - c).powi(2) + (y - c).powi(2) + (z - c).powi(2) <= r * r);
    Volume3D::from_u8([n, n, n], [1.0; 3], data).unwrap()
}

pub fn torus(n: usize, major: f64, minor: f64) -> Volume3D {
    let c = (n as f64 - 1.0) / 2.0;
    let data = grid(n, |x, y, z| {
        let ring = ((x - c).powi(2) + (y - c).powi(2)).sqrt() - major;
        ring * ring + (z - c).powi(2) <= minor * minor
    });
    Volume3D::from_u8([n, n, n], [1.0; 3], data).unwrap()
}

/// 5×5×5 cube pierced by a one-voxel tunnel along z (a handle), plus a
/// detached speckle voxel, inside an 11³ grid.
pub fn cube_with_handle() -> Volume3D {
    let n = 11;
    let data = grid(n, |x, y, z| {
        let in_cube = (2.0..=6.0).contains(&x) && (2.0..=6.0).contains(&y) && (2.0..=6.0).contains(&z);
        let tunnel = x == 4.0 && y == 4.0;
        let speckle = x == 9.0 && y == 9.0 && z == 9.0;
        (in_cube && !tunnel) || speckle
    });
    Volume3D::from_u8([n, n, n], [1.0; 3], data).unwrap()
}

pub fn mixture_volume(n: usize, seed: u64) -> Volume3D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = [30.0, 110.0, 200.0].map(|m| Normal::new(m, 10.0).unwrap());
    let data: Vec<f64> = (0..n).map(|i| comps[i % 3].sample(&mut rng)).collect();
    Volume3D::from_f64([n, 1, 1], [1.0; 3], data).unwrap()
}

pub fn known_affine() -> AffineTransform {
    AffineTransform::from_parts(
        Matrix3::new(1.1, 0.2, -0.1, 0.05, 0.9, 0.3, -0.2, 0.1, 1.2),
        Vector3::new(4.0, -2.5, 10.0),
    )
}

pub fn landmark_points() -> Vec<[f64; 3]> {
    vec![
        [0.0, 0.0, 0.0],
        [40.0, 2.0, 1.0],
        [3.0, 35.0, -2.0],
        [1.0, -4.0, 30.0],
        [25.0, 20.0, 15.0],
        [-10.0, 12.0, 8.0],
        [18.0, -9.0, 22.0],
        [-5.0, 28.0, 33.0],
    ]
}

/// Six coefficient volumes on a 3×2×2 grid: a prolate tensor rotating with x.
pub fn tensor_volumes() -> [Volume3D; 6] {
    let dims = [3usize, 2, 2];
    let n = 12;
    let mut coeffs: [Vec<f32>; 6] = Default::default();
    for idx in 0..n {
        let t = (idx % 3) as f64 * 0.4;
        let (c, s) = (t.cos(), t.sin());
        // R diag(3, 1, 0.5) Rᵀ with R a rotation about z
        let (a, b, z) = (3.0, 1.0, 0.5 + 0.1 * (idx / 3) as f64);
        let d = [a * c * c + b * s * s, a * s * s + b * c * c, z, (a - b) * c * s, 0.0, 0.0];
        for k in 0..6 {
            coeffs[k].push(d[k] as f32);
        }
    }
    coeffs.map(|c| {
        let header = VolumeHeader::new([dims[0], dims[1], dims[2], 1], [2.0; 3], Datatype::F32);
        Volume3D::new(header, VoxelData::F32(c)).unwrap()
    })
}

pub fn synthetic_tracts(count: usize) -> Vec<Tract> {
    (0..count)
        .map(|i| {
            let len = 2 + (i * 7) % 19;
            Tract::new((0..len).map(|k| [k as f64 * 0.5, i as f64, (k * k) as f64 * 0.01]).collect()).unwrap()
        })
        .collect()
}

/// Every input the CLI tests need, laid out in `dir`.
pub fn populate(dir: &Path) {
    std::fs::copy(fixture("t1_191x236x171.hdr"), dir.join("t1.hdr")).unwrap();
    write_volume_pair(&dir.join("mask.hdr"), &cube_with_handle());
    write_nii(&dir.join("ball.nii"), &ball(16, 5.0));
    write_nii(&dir.join("t1w.nii"), &mixture_volume(3000, 9));
    write_mesh(&dir.join("tetra.ply"), &tetrahedron());
    write_mesh(&dir.join("torus.ply"), &marching_cubes(&torus(24, 6.0, 2.0), 0.5).unwrap());

    let a = known_affine();
    let p = landmark_points();
    let q: Vec<[f64; 3]> = p.iter().map(|&x| a.apply_point(x)).collect();
    std::fs::write(dir.join("moving.csv"), LandmarkSet::from_points("moving", p.clone()).to_csv()).unwrap();
    std::fs::write(dir.join("fixed.csv"), LandmarkSet::from_points("fixed", q).to_csv()).unwrap();
    let flat: Vec<[f64; 3]> = p.iter().take(3).map(|x| [x[0], x[1], 0.0]).collect();
    std::fs::write(dir.join("flat_moving.csv"), LandmarkSet::from_points("m", flat.clone()).to_csv()).unwrap();
    std::fs::write(dir.join("flat_fixed.csv"), LandmarkSet::from_points("f", flat).to_csv()).unwrap();

    let tetra = tetrahedron();
    let mut manifest = String::from("subject_id,voxel_scale,mesh\n");
    for s in 0..3 {
        let mut m = tetra.clone();
        for (i, v) in m.vertices.iter_mut().enumerate() {
            v[0] += 0.1 * s as f64 + 0.01 * i as f64;
            v[2] -= 0.05 * s as f64;
        }
        let name = format!("subj{s}.ply");
        write_mesh(&dir.join(&name), &m);
        manifest.push_str(&format!("s{s},1.0,{name}\n"));
    }
    std::fs::write(dir.join("ensemble.csv"), manifest).unwrap();

    for (vol, name) in tensor_volumes().iter().zip(["dxx", "dyy", "dzz", "dxy", "dxz", "dyz"]) {
        write_volume_pair(&dir.join(format!("{name}.hdr")), vol);
    }
    std::fs::write(dir.join("tracts.trk"), tracts_to_text(&synthetic_tracts(100))).unwrap();
    std::fs::write(dir.join("broken.ply"), "ply\nformat ascii 1.0\nelement vertex 3\n").unwrap();
}
