use std::collections::HashSet;

use neurogeom::imgio::{
    read_analyze_header, read_analyze_volume, read_nifti1, read_volume_file, write_analyze, write_nifti1,
};
use neurogeom::{Datatype, Endianness, Format, Volume3D, VolumeHeader, VoxelData};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_data(dt: Datatype, n: usize, rng: &mut impl Rng) -> VoxelData {
    match dt {
        Datatype::U8 => VoxelData::U8((0..n).map(|_| rng.gen()).collect()),
        Datatype::I16 => VoxelData::I16((0..n).map(|_| rng.gen()).collect()),
        Datatype::I32 => VoxelData::I32((0..n).map(|_| rng.gen()).collect()),
        // arbitrary bit patterns, NaNs included
        Datatype::F32 => VoxelData::F32((0..n).map(|_| f32::from_bits(rng.gen())).collect()),
        Datatype::F64 => VoxelData::F64((0..n).map(|_| f64::from_bits(rng.gen())).collect()),
    }
}

fn random_volume(dims: [usize; 4], dt: Datatype, endianness: Endianness, seed: u64) -> Volume3D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // pixdim is float32 on disk
    let vs = [(); 3].map(|_| rng.gen_range(0.1f32..4.0) as f64);
    let mut header = VolumeHeader::new(dims, vs, dt);
    header.endianness = endianness;
    let data = random_data(dt, dims.iter().product(), &mut rng);
    Volume3D::new(header, data).unwrap()
}

fn arb_dims() -> impl Strategy<Value = [usize; 4]> {
    (1usize..=16, 1usize..=16, 1usize..=16, 1usize..=2).prop_map(|(x, y, z, t)| [x, y, z, t])
}

fn arb_datatype() -> impl Strategy<Value = Datatype> {
    prop::sample::select(Datatype::ALL.to_vec())
}

fn arb_endianness() -> impl Strategy<Value = Endianness> {
    prop::sample::select(vec![Endianness::Little, Endianness::Big])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn analyze_round_trip_is_bit_exact(dims in arb_dims(), dt in arb_datatype(), e in arb_endianness(), seed in any::<u64>()) {
        let vol = random_volume(dims, dt, e, seed);
        let (hdr, img) = write_analyze(&vol).unwrap();
        prop_assert_eq!(hdr.len(), 348);
        let back = read_analyze_volume(read_analyze_header(&hdr).unwrap(), &img).unwrap();
        prop_assert!(back.bit_eq(&vol));
        prop_assert_eq!(back.header(), vol.header());
    }

    #[test]
    fn nifti_round_trip_is_bit_exact(dims in arb_dims(), dt in arb_datatype(), e in arb_endianness(), seed in any::<u64>()) {
        let vol = random_volume(dims, dt, e, seed).with_format(Format::Nifti1);
        let bytes = write_nifti1(&vol).unwrap();
        let back = read_nifti1(&bytes).unwrap();
        prop_assert!(back.bit_eq(&vol));
        prop_assert_eq!(back.header(), vol.header());
    }

    #[test]
    fn byte_swapped_header_reads_the_same(dims in arb_dims(), dt in arb_datatype(), seed in any::<u64>()) {
        let little = random_volume(dims, dt, Endianness::Little, seed);
        let big = little.clone().with_endianness(Endianness::Big);
        let (hl, _) = write_analyze(&little).unwrap();
        let (hb, _) = write_analyze(&big).unwrap();
        prop_assert_ne!(&hl, &hb);
        let mut a = read_analyze_header(&hl).unwrap();
        let b = read_analyze_header(&hb).unwrap();
        prop_assert_eq!(a.endianness, Endianness::Little);
        prop_assert_eq!(b.endianness, Endianness::Big);
        a.endianness = Endianness::Big;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn flat_index_is_a_bijection(dims in (1usize..=5, 1usize..=5, 1usize..=5, 1usize..=2)) {
        let d = [dims.0, dims.1, dims.2, dims.3];
        let vol = Volume3D::new(VolumeHeader::new(d, [1.0; 3], Datatype::U8), VoxelData::U8(vec![0; d.iter().product()])).unwrap();
        let mut seen = HashSet::new();
        for t in 0..d[3] { for k in 0..d[2] { for j in 0..d[1] { for i in 0..d[0] {
            let idx = vol.flat_index(i, j, k, t);
            prop_assert!(idx < vol.len());
            prop_assert!(seen.insert(idx));
        }}}}
        prop_assert_eq!(seen.len(), vol.len());
    }
}

#[test]
fn large_fixture_header_dims() {
    let header = VolumeHeader::new([191, 236, 171, 1], [1.0; 3], Datatype::U8);
    let vol = Volume3D::new(header, VoxelData::U8(vec![0; 191 * 236 * 171])).unwrap();
    let (hdr, _) = write_analyze(&vol).unwrap();
    assert_eq!(read_analyze_header(&hdr).unwrap().dims, [191, 236, 171, 1]);
}

#[test]
fn files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let vol = random_volume([4, 3, 2, 1], Datatype::I16, Endianness::Big, 7);
    let (hdr, img) = write_analyze(&vol).unwrap();
    std::fs::write(dir.path().join("scan.hdr"), hdr).unwrap();
    std::fs::write(dir.path().join("scan.img"), img).unwrap();
    for name in ["scan", "scan.hdr", "scan.img"] {
        assert!(read_volume_file(&dir.path().join(name)).unwrap().bit_eq(&vol));
    }
    let nii = dir.path().join("scan.nii");
    let vol = vol.with_format(Format::Nifti1);
    std::fs::write(&nii, write_nifti1(&vol).unwrap()).unwrap();
    assert!(read_volume_file(&nii).unwrap().bit_eq(&vol));
    assert!(read_volume_file(&dir.path().join("missing.hdr")).is_err());
}
