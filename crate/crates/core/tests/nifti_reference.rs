//! The reader against fixtures from an independent writer, plus the
//! reorientation invariants checked voxel by voxel.

mod common;

use common::{encode_nifti, gzip, Dtype, NiftiSpec};
use proptest::prelude::*;
use qctriage::nifti::{
    axis_codes, canonical_orient, load_volume, parse_header, Affine, AffineSource, AxisCode, DataType, Endianness,
    NiftiError,
};
use qctriage::Volume;

fn spec_strategy() -> impl Strategy<Value = NiftiSpec> {
    (
        prop::sample::select(Dtype::ALL.to_vec()),
        any::<bool>(),
        prop::collection::vec(1usize..6, 3..=4),
        prop_oneof![Just((0.0f32, 0.0f32)), Just((2.0, 1.0)), Just((0.25, -7.5))],
        (0.5f32..3.0, 0.5f32..3.0, 0.5f32..3.0),
    )
        .prop_map(|(dtype, big, shape, (slope, inter), (px, py, pz))| {
            let mut s = NiftiSpec::new(&shape);
            s.dtype = dtype;
            s.big_endian = big;
            s.slope = slope;
            s.inter = inter;
            s.pixdim = [px, py, pz];
            s
        })
}

fn datatype_of(d: Dtype) -> DataType {
    DataType::from_code(match d {
        Dtype::U8 => 2,
        Dtype::I16 => 4,
        Dtype::I32 => 8,
        Dtype::F32 => 16,
        Dtype::F64 => 64,
    })
    .unwrap()
}

/// Byte-swaps every header field wider than one byte, in place.
fn swap_header(bytes: &mut [u8]) {
    let mut swap = |at: usize, width: usize| bytes[at..at + width].reverse();
    swap(0, 4);
    for i in 0..8 {
        swap(40 + 2 * i, 2);
    }
    for at in [56, 60, 64] {
        swap(at, 4);
    }
    for at in [68, 70, 72, 74] {
        swap(at, 2);
    }
    for i in 0..8 {
        swap(76 + 4 * i, 4);
    }
    for at in [108, 112, 116] {
        swap(at, 4);
    }
    swap(120, 2);
    for at in [124, 128, 132, 136, 140, 144] {
        swap(at, 4);
    }
    swap(252, 2);
    swap(254, 2);
    for i in 0..18 {
        swap(256 + 4 * i, 4);
    }
}

proptest! {
    #[test]
    fn header_fields_match_the_writer(spec in spec_strategy()) {
        let bytes = encode_nifti(&spec, &vec![0.0; spec.voxels()]);
        let h = parse_header(&bytes).unwrap();
        prop_assert_eq!(h.sizeof_hdr, 348);
        prop_assert_eq!(h.endianness, if spec.big_endian { Endianness::Big } else { Endianness::Little });
        prop_assert_eq!(h.rank(), spec.shape.len());
        prop_assert_eq!(h.shape(), spec.shape.clone());
        prop_assert_eq!(h.datatype, datatype_of(spec.dtype));
        prop_assert_eq!(h.scl_slope, spec.slope);
        prop_assert_eq!(h.scl_inter, spec.inter);
        prop_assert_eq!(&h.magic, b"n+1\0");
        let vs = h.voxel_size();
        for a in 0..3 {
            prop_assert_eq!(vs[a], spec.pixdim[a] as f64);
        }
        // no sform or qform: diagonal voxel-size affine
        prop_assert_eq!(h.affine_source, AffineSource::Diagonal);
        prop_assert_eq!(h.affine.0[0][0], spec.pixdim[0] as f64);
    }

    #[test]
    fn byte_swapped_header_parses_identically(spec in spec_strategy()) {
        let mut spec = spec;
        spec.big_endian = false;
        let little = encode_nifti(&spec, &vec![0.0; spec.voxels()]);
        let mut big = little[..348].to_vec();
        swap_header(&mut big);
        let a = parse_header(&little).unwrap();
        let mut b = parse_header(&big).unwrap();
        prop_assert_eq!(b.endianness, Endianness::Big);
        b.endianness = Endianness::Little;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn gzip_is_transparent(spec in spec_strategy(), seed in any::<u64>()) {
        let n = spec.voxels();
        let stored: Vec<f64> = (0..n)
            .map(|i| spec.dtype.quantize(((seed as usize).wrapping_add(i * 37) % 200) as f64))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("a.nii");
        let packed = dir.path().join("a.nii.gz");
        let bytes = encode_nifti(&spec, &stored);
        std::fs::write(&plain, &bytes).unwrap();
        std::fs::write(&packed, gzip(&bytes)).unwrap();
        let a = load_volume(&plain).unwrap();
        let b = load_volume(&packed).unwrap();
        prop_assert!(a.data().iter().map(|x| x.to_bits()).eq(b.data().iter().map(|x| x.to_bits())));
        for (v, s) in a.data().iter().zip(&stored) {
            let want = if spec.slope != 0.0 { spec.slope as f64 * s + spec.inter as f64 } else { *s };
            prop_assert!((v - want).abs() <= 1e-6);
        }
    }
}

#[test]
fn slope_and_intercept_example() {
    let mut spec = NiftiSpec::new(&[1, 1, 1]);
    (spec.slope, spec.inter) = (2.0, 1.0);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.nii");
    std::fs::write(&p, encode_nifti(&spec, &[3.0])).unwrap();
    assert_eq!(load_volume(&p).unwrap().data(), &[7.0]);
}

#[test]
fn nifti2_magic_is_a_distinct_error() {
    let mut bytes = encode_nifti(&NiftiSpec::new(&[2, 2, 2]), &[0.0; 8]);
    bytes[344..348].copy_from_slice(b"n+2\0");
    assert!(matches!(parse_header(&bytes), Err(NiftiError::Nifti2)));
}

#[test]
fn truncated_payload() {
    let bytes = encode_nifti(&NiftiSpec::new(&[4, 4, 4]), &[1.0; 64]);
    let cut = 352 + (bytes.len() - 352) / 2;
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.nii");
    std::fs::write(&p, &bytes[..cut]).unwrap();
    assert!(matches!(load_volume(&p), Err(NiftiError::TruncatedData { .. })));
}

// ---- reorientation

fn invert3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let c = |r0: usize, c0: usize, r1: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let adj = [
        [c(1, 1, 2, 2), -c(0, 1, 2, 2), c(0, 1, 1, 2)],
        [-c(1, 0, 2, 2), c(0, 0, 2, 2), -c(0, 0, 1, 2)],
        [c(1, 0, 2, 1), -c(0, 0, 2, 1), c(0, 0, 1, 1)],
    ];
    let mut out = [[0.0; 3]; 3];
    for r in 0..3 {
        for col in 0..3 {
            out[r][col] = adj[r][col] / det;
        }
    }
    out
}

fn world(a: &Affine, ijk: [usize; 3]) -> [f64; 3] {
    let m = &a.0;
    let p = [ijk[0] as f64, ijk[1] as f64, ijk[2] as f64];
    let mut w = [0.0; 3];
    for (r, wr) in w.iter_mut().enumerate() {
        *wr = m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2] + m[r][3];
    }
    w
}

/// Voxel of `a` at world position `w`, if it is a grid point.
fn voxel_at(a: &Affine, shape: [usize; 3], w: [f64; 3]) -> Option<[usize; 3]> {
    let m = &a.0;
    let lin = [[m[0][0], m[0][1], m[0][2]], [m[1][0], m[1][1], m[1][2]], [m[2][0], m[2][1], m[2][2]]];
    let inv = invert3(lin);
    let d = [w[0] - m[0][3], w[1] - m[1][3], w[2] - m[2][3]];
    let mut out = [0usize; 3];
    for r in 0..3 {
        let x = inv[r][0] * d[0] + inv[r][1] * d[1] + inv[r][2] * d[2];
        let rounded = x.round();
        if (x - rounded).abs() > 1e-6 || rounded < 0.0 || rounded >= shape[r] as f64 {
            return None;
        }
        out[r] = rounded as usize;
    }
    Some(out)
}

/// Signed axis permutation with voxel sizes, a small rotation about z and
/// an offset.
fn affine_strategy() -> impl Strategy<Value = Affine> {
    (
        Just([0usize, 1, 2]).prop_shuffle(),
        prop::array::uniform3(any::<bool>()),
        prop::array::uniform3(0.5f64..3.0),
        -0.3f64..0.3,
        prop::array::uniform3(-50.0f64..50.0),
    )
        .prop_map(|(perm, neg, size, angle, offset)| {
            let mut lin = [[0.0; 3]; 3];
            for c in 0..3 {
                lin[perm[c]][c] = if neg[c] { -size[c] } else { size[c] };
            }
            let (s, co) = angle.sin_cos();
            let rot = [[co, -s, 0.0], [s, co, 0.0], [0.0, 0.0, 1.0]];
            let mut m = [[0.0; 4]; 4];
            for r in 0..3 {
                for c in 0..3 {
                    m[r][c] = (0..3).map(|k| rot[r][k] * lin[k][c]).sum();
                }
                m[r][3] = offset[r];
            }
            m[3][3] = 1.0;
            Affine(m)
        })
}

fn coded_volume(shape: [usize; 3], nt: usize, affine: Affine) -> Volume {
    Volume::from_fn(&[shape[0], shape[1], shape[2], nt], affine, |i, j, k, t| {
        (i + 10 * j + 100 * k + 1000 * t) as f64
    })
}

proptest! {
    #[test]
    fn reorientation_preserves_world_positions(
        affine in affine_strategy(),
        shape in prop::array::uniform3(1usize..6),
        nt in 1usize..3,
    ) {
        let src = coded_volume(shape, nt, affine);
        let out = canonical_orient(src.clone());
        prop_assert!(out.is_canonical());
        prop_assert_eq!(
            out.orientation(),
            [AxisCode::R, AxisCode::A, AxisCode::S]
        );
        let oshape = out.dims3();
        prop_assert_eq!(oshape.iter().product::<usize>(), shape.iter().product::<usize>());
        for t in 0..nt {
            for k in 0..oshape[2] {
                for j in 0..oshape[1] {
                    for i in 0..oshape[0] {
                        let w = world(out.affine(), [i, j, k]);
                        let s = voxel_at(&affine, shape, w);
                        prop_assert!(s.is_some(), "no source voxel at {:?}", w);
                        let s = s.unwrap();
                        prop_assert_eq!(out.get(i, j, k, t), src.get(s[0], s[1], s[2], t));
                        let back = world(&affine, s);
                        for a in 0..3 {
                            prop_assert!((back[a] - w[a]).abs() <= 1e-6);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn reorientation_is_idempotent(affine in affine_strategy(), shape in prop::array::uniform3(1usize..5)) {
        let once = canonical_orient(coded_volume(shape, 1, affine));
        let twice = canonical_orient(once.clone());
        prop_assert_eq!(once.dims3(), twice.dims3());
        prop_assert_eq!(once.data(), twice.data());
        prop_assert_eq!(once.affine(), twice.affine());
    }
}

#[test]
fn swapped_axes_example() {
    let mut m = [[0.0; 4]; 4];
    m[0][1] = 1.0;
    m[1][0] = 1.0;
    m[2][2] = 1.0;
    m[3][3] = 1.0;
    let src = coded_volume([3, 4, 5], 1, Affine(m));
    assert_eq!(axis_codes(src.affine()), [AxisCode::A, AxisCode::R, AxisCode::S]);
    let out = canonical_orient(src.clone());
    assert_eq!(out.dims3(), [4, 3, 5]);
    for k in 0..5 {
        for j in 0..3 {
            for i in 0..4 {
                assert_eq!(out.get(i, j, k, 0), src.get(j, i, k, 0));
            }
        }
    }
}
