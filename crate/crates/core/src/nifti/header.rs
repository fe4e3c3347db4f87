//! NIfTI-1 header decoding.
//!
//! Only the fields needed downstream are kept; everything else in the
//! 348-byte block is skipped. Both byte orders are accepted, detected from
//! the `sizeof_hdr` field.

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use serde::Serialize;

use super::{Affine, NiftiError};

pub const HEADER_SIZE: usize = 348;

mod offsets {
    pub const SIZEOF_HDR: usize = 0;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const QFORM_CODE: usize = 252;
    pub const SFORM_CODE: usize = 254;
    pub const QUATERN_B: usize = 256;
    pub const QOFFSET_X: usize = 268;
    pub const SROW_X: usize = 280;
    pub const MAGIC: usize = 344;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Endianness {
    Little,
    Big,
}

/// Voxel storage types accepted by the loader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DataType {
    UInt8,
    Int16,
    Int32,
    Float32,
    Float64,
    UInt16,
    UInt32,
}

impl DataType {
    pub fn from_code(code: i16) -> Option<Self> {
        Some(match code {
            2 => Self::UInt8,
            4 => Self::Int16,
            8 => Self::Int32,
            16 => Self::Float32,
            64 => Self::Float64,
            512 => Self::UInt16,
            768 => Self::UInt32,
            _ => return None,
        })
    }

    pub fn code(self) -> i16 {
        match self {
            Self::UInt8 => 2,
            Self::Int16 => 4,
            Self::Int32 => 8,
            Self::Float32 => 16,
            Self::Float64 => 64,
            Self::UInt16 => 512,
            Self::UInt32 => 768,
        }
    }

    pub fn size_of(self) -> usize {
        match self {
            Self::UInt8 => 1,
            Self::Int16 | Self::UInt16 => 2,
            Self::Int32 | Self::UInt32 | Self::Float32 => 4,
            Self::Float64 => 8,
        }
    }
}

/// Where the voxel-to-world affine came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AffineSource {
    Sform,
    Qform,
    /// Diagonal voxel-size matrix, used when neither sform nor qform is set
    /// or the quaternion is unusable.
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeHeader {
    pub sizeof_hdr: i32,
    pub endianness: Endianness,
    pub dim: [i16; 8],
    pub datatype: DataType,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub qform_code: i16,
    pub sform_code: i16,
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub srow: [[f32; 4]; 3],
    pub magic: [u8; 4],
    pub affine: Affine,
    pub affine_source: AffineSource,
    /// Non-fatal problems noticed while decoding (e.g. an invalid quaternion).
    pub warnings: Vec<String>,
}

impl VolumeHeader {
    pub fn rank(&self) -> usize {
        self.dim[0] as usize
    }

    /// Axis lengths for the in-rank dimensions.
    pub fn shape(&self) -> Vec<usize> {
        (1..=self.rank()).map(|i| self.dim[i] as usize).collect()
    }

    pub fn voxel_size(&self) -> [f64; 3] {
        [
            self.pixdim[1] as f64,
            self.pixdim[2] as f64,
            self.pixdim[3] as f64,
        ]
    }

    /// Number of volumes along the fourth axis (1 for 3D files).
    pub fn time_points(&self) -> usize {
        if self.rank() >= 4 {
            self.dim[4] as usize
        } else {
            1
        }
    }

    pub fn voxel_count(&self) -> usize {
        self.shape().iter().product()
    }

    /// True when the image lives in a separate `.img` file.
    pub fn is_pair(&self) -> bool {
        &self.magic == b"ni1\0"
    }

    pub fn data_offset(&self) -> usize {
        if self.is_pair() {
            0
        } else {
            (self.vox_offset.max(HEADER_SIZE as f32)) as usize
        }
    }
}

fn detect_endianness(bytes: &[u8]) -> Option<Endianness> {
    if LittleEndian::read_i32(&bytes[offsets::SIZEOF_HDR..]) == HEADER_SIZE as i32 {
        Some(Endianness::Little)
    } else if BigEndian::read_i32(&bytes[offsets::SIZEOF_HDR..]) == HEADER_SIZE as i32 {
        Some(Endianness::Big)
    } else {
        None
    }
}

pub fn parse_header(bytes: &[u8]) -> Result<VolumeHeader, NiftiError> {
    if bytes.len() < HEADER_SIZE {
        return Err(NiftiError::TooShort(bytes.len()));
    }
    let magic: [u8; 4] = bytes[offsets::MAGIC..offsets::MAGIC + 4].try_into().unwrap();
    let sizeof_le = LittleEndian::read_i32(bytes);
    let sizeof_be = BigEndian::read_i32(bytes);
    if sizeof_le == 540 || sizeof_be == 540 || &magic[..3] == b"n+2" {
        return Err(NiftiError::Nifti2);
    }
    if &magic != b"n+1\0" && &magic != b"ni1\0" {
        return Err(NiftiError::BadMagic(magic));
    }
    match detect_endianness(bytes) {
        Some(Endianness::Little) => decode::<LittleEndian>(bytes, Endianness::Little, magic),
        Some(Endianness::Big) => decode::<BigEndian>(bytes, Endianness::Big, magic),
        None => Err(NiftiError::BadSizeofHdr(sizeof_le)),
    }
}

fn decode<B: ByteOrder>(
    bytes: &[u8],
    endianness: Endianness,
    magic: [u8; 4],
) -> Result<VolumeHeader, NiftiError> {
    let i16_at = |off: usize| B::read_i16(&bytes[off..]);
    let f32_at = |off: usize| B::read_f32(&bytes[off..]);

    let mut dim = [0i16; 8];
    for (i, d) in dim.iter_mut().enumerate() {
        *d = i16_at(offsets::DIM + 2 * i);
    }
    let rank = dim[0];
    if !(1..=4).contains(&rank) {
        return Err(NiftiError::BadDim(format!("rank {rank} outside 1..4")));
    }
    for (axis, &len) in dim.iter().enumerate().skip(1).take(rank as usize) {
        if len < 1 {
            return Err(NiftiError::BadDim(format!("axis {axis} has length {len}")));
        }
    }

    let code = i16_at(offsets::DATATYPE);
    let datatype = DataType::from_code(code).ok_or(NiftiError::UnsupportedDatatype(code))?;

    let mut pixdim = [0f32; 8];
    for (i, p) in pixdim.iter_mut().enumerate() {
        *p = f32_at(offsets::PIXDIM + 4 * i);
    }
    let quatern = [0, 1, 2].map(|i| f32_at(offsets::QUATERN_B + 4 * i));
    let qoffset = [0, 1, 2].map(|i| f32_at(offsets::QOFFSET_X + 4 * i));
    let mut srow = [[0f32; 4]; 3];
    for (r, row) in srow.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = f32_at(offsets::SROW_X + 16 * r + 4 * c);
        }
    }

    let mut header = VolumeHeader {
        sizeof_hdr: HEADER_SIZE as i32,
        endianness,
        dim,
        datatype,
        bitpix: i16_at(offsets::BITPIX),
        pixdim,
        vox_offset: f32_at(offsets::VOX_OFFSET),
        scl_slope: f32_at(offsets::SCL_SLOPE),
        scl_inter: f32_at(offsets::SCL_INTER),
        qform_code: i16_at(offsets::QFORM_CODE),
        sform_code: i16_at(offsets::SFORM_CODE),
        quatern,
        qoffset,
        srow,
        magic,
        affine: Affine::identity(),
        affine_source: AffineSource::Diagonal,
        warnings: Vec::new(),
    };
    resolve_affine(&mut header);
    Ok(header)
}

fn diagonal_affine(pixdim: &[f32; 8]) -> Affine {
    let size = |v: f32| if v > 0.0 { v as f64 } else { 1.0 };
    let mut m = Affine::identity();
    m.0[0][0] = size(pixdim[1]);
    m.0[1][1] = size(pixdim[2]);
    m.0[2][2] = size(pixdim[3]);
    m
}

fn resolve_affine(h: &mut VolumeHeader) {
    if h.sform_code > 0 {
        let mut m = Affine::identity();
        for r in 0..3 {
            for c in 0..4 {
                m.0[r][c] = h.srow[r][c] as f64;
            }
        }
        h.affine = m;
        h.affine_source = AffineSource::Sform;
        return;
    }
    if h.qform_code > 0 {
        match quaternion_affine(h) {
            Some(m) => {
                h.affine = m;
                h.affine_source = AffineSource::Qform;
                return;
            }
            None => h
                .warnings
                .push("qform quaternion is not unit length; using diagonal affine".into()),
        }
    }
    h.affine = diagonal_affine(&h.pixdim);
    h.affine_source = AffineSource::Diagonal;
}

fn quaternion_affine(h: &VolumeHeader) -> Option<Affine> {
    let [b, c, d] = h.quatern.map(|v| v as f64);
    let a2 = 1.0 - (b * b + c * c + d * d);
    if a2 < -1e-6 {
        return None;
    }
    let a = a2.max(0.0).sqrt();
    let qfac = if h.pixdim[0] < 0.0 { -1.0 } else { 1.0 };
    let size = |v: f32| if v > 0.0 { v as f64 } else { 1.0 };
    let (dx, dy, dz) = (size(h.pixdim[1]), size(h.pixdim[2]), size(h.pixdim[3]) * qfac);

    let r = [
        [
            a * a + b * b - c * c - d * d,
            2.0 * (b * c - a * d),
            2.0 * (b * d + a * c),
        ],
        [
            2.0 * (b * c + a * d),
            a * a + c * c - b * b - d * d,
            2.0 * (c * d - a * b),
        ],
        [
            2.0 * (b * d - a * c),
            2.0 * (c * d + a * b),
            a * a + d * d - c * c - b * b,
        ],
    ];
    let mut m = Affine::identity();
    for row in 0..3 {
        m.0[row][0] = r[row][0] * dx;
        m.0[row][1] = r[row][1] * dy;
        m.0[row][2] = r[row][2] * dz;
        m.0[row][3] = h.qoffset[row] as f64;
    }
    Some(m)
}
