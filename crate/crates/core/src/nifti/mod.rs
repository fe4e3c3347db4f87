//! NIfTI-1 reading: header decoding, voxel loading and reorientation to a
//! closest-to-RAS canonical layout.

mod affine;
mod header;
mod orient;
mod volume;

use std::path::PathBuf;

use thiserror::Error;

pub use affine::Affine;
pub use header::{parse_header, AffineSource, DataType, Endianness, VolumeHeader, HEADER_SIZE};
pub use orient::{axis_codes, canonical_orient, AxisCode};
pub use volume::{load_header, load_volume, read_volume, Volume};

#[derive(Debug, Error)]
pub enum NiftiError {
    #[error("header needs 348 bytes, got {0}")]
    TooShort(usize),
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("sizeof_hdr is {0}, expected 348 in either byte order")]
    BadSizeofHdr(i32),
    #[error("NIfTI-2 files are not supported")]
    Nifti2,
    #[error("unsupported datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("bad dim: {0}")]
    BadDim(String),
    #[error("voxel data truncated: need {needed} bytes after offset, have {available}")]
    TruncatedData { needed: usize, available: usize },
    #[error("gzip: {0}")]
    Gzip(std::io::Error),
    #[error("unsupported file extension: {0}")]
    UnsupportedExtension(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
