use nalgebra::{Rotation3, Vector3};
use neurogeom::meshio::{parse_ply, read_mesh_file};
use neurogeom::morpho::{
    average_template, displacement_field, export_scalar_mesh, scalar_mesh_ply, SurfaceEnsemble,
};
use neurogeom::TriMesh;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_ensemble(s: usize, n: usize, seed: u64) -> SurfaceEnsemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let faces: Vec<[u32; 3]> = (0..n.saturating_sub(2) as u32).map(|i| [i, i + 1, i + 2]).collect();
    let coords = (0..s)
        .map(|_| (0..n).map(|_| [(); 3].map(|_| rng.gen_range(-40.0..40.0))).collect())
        .collect();
    SurfaceEnsemble::new((0..s).map(|i| format!("s{i}")).collect(), faces, coords).unwrap()
}

fn rotate(rot: &Rotation3<f64>, t: Vector3<f64>) -> impl Fn([f64; 3]) -> [f64; 3] + '_ {
    move |p| {
        let q = rot * Vector3::from(p) + t;
        [q[0], q[1], q[2]]
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn template_matches_scalar_loop(seed in any::<u64>(), s in 1usize..6, n in 3usize..40) {
        let ens = random_ensemble(s, n, seed);
        let template = average_template(&ens).unwrap();
        for i in 0..n {
            for k in 0..3 {
                let mut acc = 0.0;
                for subj in 0..s {
                    acc += ens.coords(subj)[i][k];
                }
                prop_assert!((template.vertices[i][k] - acc / s as f64).abs() < 1e-12);
            }
        }
        prop_assert_eq!(&template.faces[..], ens.faces());
    }

    #[test]
    fn displacements_sum_to_zero(seed in any::<u64>(), s in 1usize..8) {
        let ens = random_ensemble(s, 30, seed);
        let template = average_template(&ens).unwrap();
        let mut sum = vec![[0.0f64; 3]; 30];
        for subj in 0..s {
            let d = displacement_field(&ens, &template, subj).unwrap();
            for (acc, v) in sum.iter_mut().zip(&d.vectors) {
                for k in 0..3 { acc[k] += v[k]; }
            }
            for (v, l) in d.vectors.iter().zip(&d.lengths) {
                prop_assert!((l - (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()).abs() <= 1e-12);
            }
        }
        prop_assert!(sum.iter().flatten().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn template_commutes_with_rigid_motion(seed in any::<u64>(), angles in prop::array::uniform3(-3.0f64..3.0)) {
        let ens = random_ensemble(4, 20, seed);
        let rot = Rotation3::from_euler_angles(angles[0], angles[1], angles[2]);
        let f = rotate(&rot, Vector3::new(5.0, -2.0, 1.0));
        let moved_then_avg = average_template(&ens.map_points(&f)).unwrap();
        let avg_then_moved = average_template(&ens).unwrap();
        for (a, b) in moved_then_avg.vertices.iter().zip(&avg_then_moved.vertices) {
            let b = f(*b);
            prop_assert!((0..3).all(|k| (a[k] - b[k]).abs() < 1e-9));
        }
    }

    #[test]
    fn lengths_are_rotation_invariant(seed in any::<u64>(), angles in prop::array::uniform3(-3.0f64..3.0)) {
        let ens = random_ensemble(3, 20, seed);
        let template = average_template(&ens).unwrap();
        let rot = Rotation3::from_euler_angles(angles[0], angles[1], angles[2]);
        let f = rotate(&rot, Vector3::zeros());
        let rotated = ens.map_points(&f);
        let rotated_template = TriMesh::new(template.vertices.iter().map(|&p| f(p)).collect(), template.faces.clone());
        for subj in 0..3 {
            let a = displacement_field(&ens, &template, subj).unwrap();
            let b = displacement_field(&rotated, &rotated_template, subj).unwrap();
            for (x, y) in a.lengths.iter().zip(&b.lengths) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scalar_export_round_trips(seed in any::<u64>()) {
        let ens = random_ensemble(1, 12, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let scalar: Vec<f64> = (0..12).map(|_| rng.gen_range(-1e3..1e3)).collect();
        let parsed = parse_ply(&scalar_mesh_ply(&ens.subject_mesh(0), &scalar).unwrap()).unwrap();
        for (a, b) in parsed.scalar("quality").unwrap().iter().zip(&scalar) {
            prop_assert!((a - b).abs() <= 5e-6 * b.abs().max(1e-300));
        }
    }
}

fn tet() -> TriMesh {
    TriMesh::new(
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
    )
}

#[test]
fn manifest_ingestion_applies_voxel_scale() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = tet();
    std::fs::write(dir.path().join("a.ply"), scalar_mesh_ply(&mesh, &[0.0; 4]).unwrap()).unwrap();
    std::fs::create_dir(dir.path().join("sub")).unwrap();
    std::fs::write(dir.path().join("sub/b.obj"), neurogeom::meshio::obj_string(&mesh)).unwrap();
    let manifest = dir.path().join("ensemble.csv");
    std::fs::write(&manifest, "subject_id,voxel_scale,mesh\na,1.0,a.ply\nb,3.0,sub/b.obj\n").unwrap();
    let ens = SurfaceEnsemble::read_file(&manifest).unwrap();
    assert_eq!(ens.subject_ids(), ["a", "b"]);
    assert_eq!(ens.coords(1)[3], [0.0, 0.0, 3.0]);
    let template = average_template(&ens).unwrap();
    assert_eq!(template.vertices[1], [2.0, 0.0, 0.0]);

    let packed = dir.path().join("ensemble.bin");
    std::fs::write(&packed, ens.to_packed()).unwrap();
    let back = SurfaceEnsemble::read_file(&packed).unwrap();
    assert_eq!(back.coords(1), ens.coords(1));
}

#[test]
fn translated_subject_has_constant_channel() {
    let dir = tempfile::tempdir().unwrap();
    let moved = TriMesh::new(tet().vertices.iter().map(|p| [p[0] + 3.0, p[1] + 4.0, p[2]]).collect(), tet().faces);
    let ens = SurfaceEnsemble::from_meshes(vec![("a".into(), 1.0, moved)]).unwrap();
    let d = displacement_field(&ens, &tet(), 0).unwrap();
    let path = dir.path().join("disp.ply");
    export_scalar_mesh(&tet(), &d.lengths, &path).unwrap();
    let back = read_mesh_file(&path).unwrap();
    assert!(back.scalar("quality").unwrap().iter().all(|&q| q == 5.0));
}
