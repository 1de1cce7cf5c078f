mod common;

use common::*;
use neurogeom::dti::load_tracts;
use neurogeom::imgio::{read_header_file, read_volume_file};
use neurogeom::meshio::read_mesh_file;
use neurogeom::register::AffineTransform;
use neurogeom::Datatype;

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    populate(dir.path());
    dir
}

#[test]
fn info_prints_fixture_header() {
    let dir = workdir();
    let o = neurogeom(dir.path(), &["info", "t1.hdr"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "dims: 191 236 171 1"), "{text}");
    assert!(text.contains("voxel_size: 0.9375 0.9375 1.5\n"));
    assert!(text.contains("datatype: uint8\n"));
    assert!(text.contains("description: T1 MPRAGE header fixture\n"));

    let o = neurogeom(dir.path(), &["--json", "info", "t1.hdr"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dims"], serde_json::json!([191, 236, 171, 1]));
}

#[test]
fn check_topology_reports_sphere_and_torus() {
    let dir = workdir();
    let o = neurogeom(dir.path(), &["check-topology", "tetra.ply"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("chi: 2\n") && text.contains("genus: 0\n") && text.contains("sphere: true\n"), "{text}");

    let o = neurogeom(dir.path(), &["check-topology", "torus.ply"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).contains("chi: 0\n") && stdout(&o).contains("genus: 1\n"));
}

#[test]
fn register_rejects_coplanar_triplet() {
    let dir = workdir();
    let o = neurogeom(
        dir.path(),
        &["register", "--moving", "flat_moving.csv", "--fixed", "flat_fixed.csv", "--out", "A.txt"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr(&o), "error: rank-deficient landmarks\n");
    assert!(!dir.path().join("A.txt").exists());
}

#[test]
fn register_recovers_and_applies() {
    let dir = workdir();
    let o = neurogeom(
        dir.path(),
        &[
            "register", "--moving", "moving.csv", "--fixed", "fixed.csv", "--out", "A.txt", "--apply", "tetra.ply",
            "--out-mesh", "moved.ply",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = AffineTransform::from_text(&std::fs::read_to_string(dir.path().join("A.txt")).unwrap()).unwrap();
    let err = (a.matrix() - known_affine().matrix()).abs().max();
    assert!(err < 1e-9, "{err}");
    let moved = read_mesh_file(&dir.path().join("moved.ply")).unwrap().mesh;
    for (v, p) in moved.vertices.iter().zip(&tetrahedron().vertices) {
        let expected = known_affine().apply_point(*p);
        assert!((0..3).all(|k| (v[k] - expected[k]).abs() < 1e-6));
    }

    let o = neurogeom(dir.path(), &["register", "--moving", "moving.csv", "--fixed", "fixed.csv", "--rigid", "--out", "R.txt"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("model: rigid\n"));
}

#[test]
fn failure_after_computation_writes_nothing() {
    let dir = workdir();
    let o = neurogeom(
        dir.path(),
        &["register", "--moving", "moving.csv", "--fixed", "fixed.csv", "--out", "A.txt", "--apply", "broken.ply", "--out-mesh", "m.ply"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("A.txt").exists());
    assert!(!dir.path().join("m.ply").exists());
}

#[test]
fn volume_and_fix_topology() {
    let dir = workdir();
    let o = neurogeom(dir.path(), &["volume", "mask.hdr"]);
    assert_eq!(o.status.code(), Some(0));
    // 125 − 5 tunnel voxels + 1 speckle
    assert!(stdout(&o).contains("voxels: 121\n"), "{}", stdout(&o));

    let o = neurogeom(dir.path(), &["fix-topology", "mask.hdr", "--radius", "1", "--out", "fixed"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("components: 2\n"));
    let fixed = read_volume_file(&dir.path().join("fixed.hdr")).unwrap();
    assert_eq!(fixed.header().datatype, Datatype::U8);

    let o = neurogeom(dir.path(), &["extract-surface", "fixed.hdr", "--out", "fixed.ply"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(neurogeom(dir.path(), &["check-topology", "fixed.ply"]).status.code(), Some(0));

    let o = neurogeom(dir.path(), &["extract-surface", "mask.hdr", "--out", "raw.ply"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(neurogeom(dir.path(), &["check-topology", "raw.ply"]).status.code(), Some(5));
}

#[test]
fn extract_surface_formats_and_swap() {
    let dir = workdir();
    let o = neurogeom(dir.path(), &["extract-surface", "ball.nii", "--iso", "0.5", "--swap-xy", "--out", "ball.obj"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("chi: 2\n") && stdout(&o).contains("closed: true\n"));
    let mesh = read_mesh_file(&dir.path().join("ball.obj")).unwrap().mesh;
    assert!(mesh.signed_volume() > 0.0);
}

#[test]
fn template_and_displacement() {
    let dir = workdir();
    let o = neurogeom(dir.path(), &["template", "ensemble.csv", "--out", "template.ply"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("subjects: 3\n"));
    let o = neurogeom(
        dir.path(),
        &["displacement", "ensemble.csv", "--subject", "0", "--template", "template.ply", "--out", "disp.ply"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ply = read_mesh_file(&dir.path().join("disp.ply")).unwrap();
    let q = ply.scalar("quality").unwrap();
    let (dx, dz) = (ply.scalar("dx").unwrap(), ply.scalar("dz").unwrap());
    // subject 0 sits 0.1 mm left of and 0.05 mm above the template
    for i in 0..4 {
        assert!((dx[i] + 0.1).abs() < 1e-6 && (dz[i] - 0.05).abs() < 1e-6);
        assert!((q[i] - (0.1f64.powi(2) + 0.05f64.powi(2)).sqrt()).abs() < 1e-6);
    }
    let o = neurogeom(
        dir.path(),
        &["displacement", "ensemble.csv", "--subject", "7", "--template", "template.ply", "--out", "d.ply"],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fa_map_from_tensor_volumes() {
    let dir = workdir();
    let o = neurogeom(
        dir.path(),
        &["fa", "--tensors", "dxx.hdr", "dyy.hdr", "dzz.hdr", "dxy.hdr", "dxz.hdr", "dyz.hdr", "--out", "fa.nii"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("negative_voxels: 0\n"));
    let h = read_header_file(&dir.path().join("fa.nii")).unwrap();
    assert_eq!(h.datatype, Datatype::F32);
    assert_eq!(h.dims, [3, 2, 2, 1]);

    let o = neurogeom(dir.path(), &["fa", "--tensors", "dxx.hdr", "dyy.hdr", "--out", "fa.nii"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tract_subcommands() {
    let dir = workdir();
    let o = neurogeom(dir.path(), &["tracts", "subsample", "--stride", "30", "--min-points", "10", "tracts.trk", "sub.trk"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let kept = load_tracts(&dir.path().join("sub.trk")).unwrap();
    let expected: Vec<_> = synthetic_tracts(100)
        .into_iter()
        .enumerate()
        .filter(|(i, t)| i % 30 == 0 && t.len() > 10)
        .map(|(_, t)| t)
        .collect();
    assert_eq!(kept, expected);

    let o = neurogeom(dir.path(), &["tracts", "endpoints", "sub.trk", "--out", "ends.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("ends.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("tract,end,x,y,z"));
    assert_eq!(csv.lines().count(), 1 + 2 * kept.len());
}

#[test]
fn segment_writes_labels_and_posteriors() {
    let dir = workdir();
    let o = neurogeom(dir.path(), &["segment", "t1w.nii", "--classes", "3", "--out", "seg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let labels = read_volume_file(&dir.path().join("seg.hdr")).unwrap();
    assert_eq!(labels.header().datatype, Datatype::U8);
    let post: Vec<Vec<f64>> = (0..3)
        .map(|k| read_volume_file(&dir.path().join(format!("seg_p{k}.nii"))).unwrap().spatial_values())
        .collect();
    for v in 0..labels.len() {
        let s: f64 = post.iter().map(|p| p[v]).sum();
        assert!((s - 1.0).abs() < 1e-9);
        assert!((1..=3).contains(&(labels.get(v, 0, 0) as u8)));
    }
}

#[test]
fn manifest_drives_a_run_and_flags_win() {
    let dir = workdir();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# surface run\ncommand = extract-surface\ninput = ball.nii\niso = 0.5\nswap_xy = false\nout = from_manifest.ply\n",
    )
    .unwrap();
    let o = neurogeom(dir.path(), &["--config", "run.cfg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("from_manifest.ply").exists());

    let o = neurogeom(dir.path(), &["--config", "run.cfg", "extract-surface", "--out", "from_flag.ply"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("from_flag.ply").exists());

    let o = neurogeom(dir.path(), &["--config", "run.cfg", "volume"]);
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(dir.path().join("typo.cfg"), "command = volume\ninput = mask.hdr\nisovalue = 3\n").unwrap();
    let o = neurogeom(dir.path(), &["--config", "typo.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("isovalue"));
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = workdir();
    assert_eq!(neurogeom(dir.path(), &[]).status.code(), Some(1));
    assert_eq!(neurogeom(dir.path(), &["volume", "--bogus"]).status.code(), Some(1));
    assert_eq!(neurogeom(dir.path(), &["check-topology", "broken.ply"]).status.code(), Some(2));
    let o = neurogeom(dir.path(), &["volume", "nowhere.hdr"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("error: input not found"));
    let o = neurogeom(dir.path(), &["extract-surface", "ball.nii", "--out", "no/such/dir/m.ply"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(neurogeom(dir.path(), &["--help"]).status.code(), Some(0));
}
