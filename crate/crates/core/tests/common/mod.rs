//! Test fixtures: a stand-alone NIfTI-1 writer (no code shared with the
//! crate's reader) and BIDS tree builders.

#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    U8,
    I16,
    I32,
    F32,
    F64,
}

impl Dtype {
    pub const ALL: [Dtype; 5] = [Dtype::U8, Dtype::I16, Dtype::I32, Dtype::F32, Dtype::F64];

    fn code_and_bits(self) -> (i16, i16) {
        match self {
            Dtype::U8 => (2, 8),
            Dtype::I16 => (4, 16),
            Dtype::I32 => (8, 32),
            Dtype::F32 => (16, 32),
            Dtype::F64 => (64, 64),
        }
    }

    /// What the stored value becomes after a round trip through the type.
    pub fn quantize(self, v: f64) -> f64 {
        match self {
            Dtype::U8 => v.round().clamp(0.0, 255.0),
            Dtype::I16 => v.round().clamp(-32768.0, 32767.0),
            Dtype::I32 => v.round(),
            Dtype::F32 => v as f32 as f64,
            Dtype::F64 => v,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NiftiSpec {
    /// 3 or 4 dimensions.
    pub shape: Vec<usize>,
    pub dtype: Dtype,
    pub big_endian: bool,
    pub slope: f32,
    pub inter: f32,
    pub pixdim: [f32; 3],
    /// Rows of the voxel-to-world matrix; written as the sform when set.
    pub sform: Option<[[f32; 4]; 3]>,
}

impl NiftiSpec {
    pub fn new(shape: &[usize]) -> Self {
        NiftiSpec {
            shape: shape.to_vec(),
            dtype: Dtype::F32,
            big_endian: false,
            slope: 1.0,
            inter: 0.0,
            pixdim: [1.0, 1.0, 1.0],
            sform: None,
        }
    }

    pub fn voxels(&self) -> usize {
        self.shape.iter().product()
    }
}

struct Buf {
    bytes: Vec<u8>,
    big: bool,
}

impl Buf {
    fn put(&mut self, at: usize, b: &[u8]) {
        self.bytes[at..at + b.len()].copy_from_slice(b);
    }
    fn i16(&mut self, at: usize, v: i16) {
        let b = if self.big { v.to_be_bytes() } else { v.to_le_bytes() };
        self.put(at, &b);
    }
    fn i32(&mut self, at: usize, v: i32) {
        let b = if self.big { v.to_be_bytes() } else { v.to_le_bytes() };
        self.put(at, &b);
    }
    fn f32(&mut self, at: usize, v: f32) {
        let b = if self.big { v.to_be_bytes() } else { v.to_le_bytes() };
        self.put(at, &b);
    }
}

/// Single-file `.nii` bytes. `stored` holds raw (pre-scaling) values in
/// Fortran order, already representable in the chosen type.
pub fn encode_nifti(spec: &NiftiSpec, stored: &[f64]) -> Vec<u8> {
    assert_eq!(stored.len(), spec.voxels());
    let mut h = Buf {
        bytes: vec![0u8; 352],
        big: spec.big_endian,
    };
    h.i32(0, 348);
    h.i16(40, spec.shape.len() as i16);
    for (i, &d) in spec.shape.iter().enumerate() {
        h.i16(42 + 2 * i, d as i16);
    }
    for i in spec.shape.len()..7 {
        h.i16(42 + 2 * i, 1);
    }
    let (code, bits) = spec.dtype.code_and_bits();
    h.i16(70, code);
    h.i16(72, bits);
    h.f32(76, 1.0);
    for (i, p) in spec.pixdim.iter().enumerate() {
        h.f32(80 + 4 * i, *p);
    }
    h.f32(108, 352.0);
    h.f32(112, spec.slope);
    h.f32(116, spec.inter);
    if let Some(rows) = spec.sform {
        h.i16(254, 1);
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                h.f32(280 + 16 * r + 4 * c, *v);
            }
        }
    }
    h.put(344, b"n+1\0");

    let mut out = h.bytes;
    for &v in stored {
        let big = spec.big_endian;
        macro_rules! push {
            ($x:expr) => {
                out.extend_from_slice(&if big { $x.to_be_bytes() } else { $x.to_le_bytes() })
            };
        }
        match spec.dtype {
            Dtype::U8 => out.push(v as u8),
            Dtype::I16 => push!(v as i16),
            Dtype::I32 => push!(v as i32),
            Dtype::F32 => push!(v as f32),
            Dtype::F64 => push!(v),
        }
    }
    out
}

pub fn gzip(bytes: &[u8]) -> Vec<u8> {
    let mut e = GzEncoder::new(Vec::new(), Compression::default());
    e.write_all(bytes).unwrap();
    e.finish().unwrap()
}

/// Writes `.nii` or, for a `.gz` path, gzipped bytes.
pub fn write_nifti(path: &Path, spec: &NiftiSpec, stored: &[f64]) {
    let bytes = encode_nifti(spec, stored);
    let bytes = if path.extension().is_some_and(|e| e == "gz") {
        gzip(&bytes)
    } else {
        bytes
    };
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).unwrap();
    }
    std::fs::write(path, bytes).unwrap();
}

/// Float32 volume with a 1 mm RAS sform.
pub fn write_f32(path: &Path, shape: &[usize], data: &[f64]) {
    let mut spec = NiftiSpec::new(shape);
    spec.sform = Some([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]);
    write_nifti(path, &spec, data);
}

/// Fortran-order fill of a 3D or 4D shape.
pub fn fill(shape: &[usize], f: impl Fn(usize, usize, usize, usize) -> f64) -> Vec<f64> {
    let (nx, ny, nz) = (shape[0], shape[1], shape[2]);
    let nt = shape.get(3).copied().unwrap_or(1);
    let mut v = Vec::with_capacity(nx * ny * nz * nt);
    for t in 0..nt {
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    v.push(f(i, j, k, t));
                }
            }
        }
    }
    v
}

/// A DWI acquisition inside a BIDS tree.
pub struct Dwi<'a> {
    pub rel: &'a str,
    pub volumes: usize,
    pub bval: bool,
    pub bvec: bool,
    pub phase_encoding: Option<&'a str>,
}

/// Writes a small 4D DWI with gradients and optional sidecar; returns the
/// image path.
pub fn write_dwi(root: &Path, d: &Dwi) -> PathBuf {
    let path = root.join(d.rel);
    let shape = [4, 4, 4, d.volumes];
    write_f32(&path, &shape, &fill(&shape, |i, j, k, t| 100.0 + (i + j + k) as f64 - t as f64));
    let base = d.rel.trim_end_matches(".gz").trim_end_matches(".nii");
    let bvals: Vec<String> = (0..d.volumes).map(|t| if t == 0 { "0".into() } else { "1000".into() }).collect();
    if d.bval {
        std::fs::write(root.join(format!("{base}.bval")), bvals.join(" ") + "\n").unwrap();
    }
    if d.bvec {
        let rows: Vec<String> = (0..3)
            .map(|axis| {
                (0..d.volumes)
                    .map(|t| if t > 0 && axis == t % 3 { "1" } else { "0" })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        std::fs::write(root.join(format!("{base}.bvec")), rows.join("\n") + "\n").unwrap();
    }
    if let Some(pe) = d.phase_encoding {
        std::fs::write(
            root.join(format!("{base}.json")),
            format!("{{\"PhaseEncodingDirection\": \"{pe}\"}}\n"),
        )
        .unwrap();
    }
    path
}
