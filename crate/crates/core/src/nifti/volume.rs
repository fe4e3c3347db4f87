use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use flate2::read::MultiGzDecoder;

use super::header::{parse_header, DataType, Endianness, VolumeHeader, HEADER_SIZE};
use super::orient::{axis_codes, AxisCode};
use super::{Affine, NiftiError};

/// A voxel grid in memory, x-fastest (Fortran) order, values already
/// scaled by `scl_slope`/`scl_inter`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    shape: Vec<usize>,
    data: Vec<f64>,
    affine: Affine,
    canonical: bool,
    warnings: Vec<String>,
}

impl Volume {
    /// Builds a volume from raw parts. Shapes of rank < 3 are padded with 1s.
    ///
    /// Panics if `data.len()` does not equal the product of `shape`.
    pub fn new(shape: &[usize], data: Vec<f64>, affine: Affine) -> Self {
        assert!(!shape.is_empty() && shape.len() <= 4, "rank must be 1..=4");
        let mut shape = shape.to_vec();
        while shape.len() < 3 {
            shape.push(1);
        }
        assert_eq!(
            data.len(),
            shape.iter().product::<usize>(),
            "data length does not match shape"
        );
        Volume {
            shape,
            data,
            affine,
            canonical: false,
            warnings: Vec::new(),
        }
    }

    pub fn from_fn(shape: &[usize], affine: Affine, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut padded = shape.to_vec();
        while padded.len() < 4 {
            padded.push(1);
        }
        let (nx, ny, nz, nt) = (padded[0], padded[1], padded[2], padded[3]);
        let mut data = Vec::with_capacity(nx * ny * nz * nt);
        for t in 0..nt {
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        data.push(f(i, j, k, t));
                    }
                }
            }
        }
        Volume::new(shape, data, affine)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Spatial extent (nx, ny, nz).
    pub fn dims3(&self) -> [usize; 3] {
        [self.shape[0], self.shape[1], self.shape[2]]
    }

    pub fn time_points(&self) -> usize {
        self.shape.get(3).copied().unwrap_or(1)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn affine(&self) -> &Affine {
        &self.affine
    }

    pub fn orientation(&self) -> [AxisCode; 3] {
        axis_codes(&self.affine)
    }

    /// Set once the volume has been through `canonical_orient` successfully.
    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub(crate) fn mark_canonical(mut self) -> Self {
        self.canonical = true;
        self
    }

    pub(crate) fn with_warning(mut self, w: String) -> Self {
        self.warnings.push(w);
        self
    }

    pub fn voxel_size(&self) -> [f64; 3] {
        [0, 1, 2].map(|c| {
            let col = self.affine.column(c);
            (col[0] * col[0] + col[1] * col[1] + col[2] * col[2]).sqrt()
        })
    }

    pub fn index(&self, i: usize, j: usize, k: usize, t: usize) -> usize {
        let [nx, ny, nz] = self.dims3();
        i + nx * (j + ny * (k + nz * t))
    }

    pub fn get(&self, i: usize, j: usize, k: usize, t: usize) -> f64 {
        self.data[self.index(i, j, k, t)]
    }

    /// One 3D frame of a 4D volume. Frame 0 of a 3D volume is the volume
    /// itself.
    pub fn frame(&self, t: usize) -> Option<Volume> {
        if t >= self.time_points() {
            return None;
        }
        let n = self.dims3().iter().product::<usize>();
        let data = self.data[t * n..(t + 1) * n].to_vec();
        let mut v = Volume::new(&self.dims3(), data, self.affine);
        v.canonical = self.canonical;
        v.warnings = self.warnings.clone();
        Some(v)
    }

    pub(crate) fn rebuild(&self, shape: Vec<usize>, data: Vec<f64>, affine: Affine) -> Volume {
        Volume {
            shape,
            data,
            affine,
            canonical: self.canonical,
            warnings: self.warnings.clone(),
        }
    }
}

enum Compression {
    Plain,
    Gzip,
}

fn classify(path: &Path) -> Result<Compression, NiftiError> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase();
    if name.ends_with(".nii.gz") || name.ends_with(".hdr.gz") {
        Ok(Compression::Gzip)
    } else if name.ends_with(".nii") || name.ends_with(".hdr") {
        Ok(Compression::Plain)
    } else {
        Err(NiftiError::UnsupportedExtension(path.to_path_buf()))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> NiftiError + '_ {
    move |source| NiftiError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_prefix(path: &Path, limit: Option<usize>) -> Result<Vec<u8>, NiftiError> {
    let compression = classify(path)?;
    let file = File::open(path).map_err(io_err(path))?;
    let mut buf = Vec::new();
    match compression {
        Compression::Plain => {
            let mut r = BufReader::new(file);
            match limit {
                Some(n) => r.take(n as u64).read_to_end(&mut buf),
                None => r.read_to_end(&mut buf),
            }
            .map_err(io_err(path))?;
        }
        Compression::Gzip => {
            let mut r = MultiGzDecoder::new(BufReader::new(file));
            match limit {
                Some(n) => r.take(n as u64).read_to_end(&mut buf),
                None => r.read_to_end(&mut buf),
            }
            .map_err(NiftiError::Gzip)?;
        }
    }
    Ok(buf)
}

/// Reads only the header, decompressing just the first 348 bytes of gzip
/// input.
pub fn load_header(path: &Path) -> Result<VolumeHeader, NiftiError> {
    let bytes = read_prefix(path, Some(HEADER_SIZE))?;
    parse_header(&bytes)
}

fn pair_image_path(path: &Path) -> PathBuf {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let img = if let Some(stem) = name.strip_suffix(".gz") {
        format!("{}.img.gz", &stem[..stem.len().saturating_sub(4)])
    } else {
        format!("{}.img", &name[..name.len().saturating_sub(4)])
    };
    path.with_file_name(img)
}

pub fn load_volume(path: &Path) -> Result<Volume, NiftiError> {
    let bytes = read_prefix(path, None)?;
    let header = parse_header(&bytes)?;
    if header.is_pair() {
        let img = pair_image_path(path);
        let payload = read_prefix_any(&img)?;
        return read_volume(&header, &payload);
    }
    let offset = header.data_offset();
    let payload = bytes.get(offset..).unwrap_or(&[]);
    read_volume(&header, payload)
}

fn read_prefix_any(path: &Path) -> Result<Vec<u8>, NiftiError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut buf = Vec::new();
    if path.extension().is_some_and(|e| e == "gz") {
        MultiGzDecoder::new(BufReader::new(file))
            .read_to_end(&mut buf)
            .map_err(NiftiError::Gzip)?;
    } else {
        BufReader::new(file).read_to_end(&mut buf).map_err(io_err(path))?;
    }
    Ok(buf)
}

/// Decodes the voxel payload (bytes starting at `vox_offset`) of a parsed
/// header.
pub fn read_volume(header: &VolumeHeader, payload: &[u8]) -> Result<Volume, NiftiError> {
    let count = header.voxel_count();
    let width = header.datatype.size_of();
    let needed = count * width;
    if payload.len() < needed {
        return Err(NiftiError::TruncatedData {
            needed,
            available: payload.len(),
        });
    }
    let raw = &payload[..needed];
    let data = match header.endianness {
        Endianness::Little => decode_values::<LittleEndian>(raw, header.datatype),
        Endianness::Big => decode_values::<BigEndian>(raw, header.datatype),
    };
    let slope = header.scl_slope as f64;
    let inter = header.scl_inter as f64;
    let data = if slope != 0.0 && slope.is_finite() {
        data.into_iter().map(|v| slope * v + inter).collect()
    } else {
        data
    };
    let mut v = Volume::new(&header.shape(), data, header.affine);
    v.warnings = header.warnings.clone();
    Ok(v)
}

fn decode_values<B: ByteOrder>(raw: &[u8], dt: DataType) -> Vec<f64> {
    let w = dt.size_of();
    raw.chunks_exact(w)
        .map(|c| match dt {
            DataType::UInt8 => c[0] as f64,
            DataType::Int16 => B::read_i16(c) as f64,
            DataType::UInt16 => B::read_u16(c) as f64,
            DataType::Int32 => B::read_i32(c) as f64,
            DataType::UInt32 => B::read_u32(c) as f64,
            DataType::Float32 => B::read_f32(c) as f64,
            DataType::Float64 => B::read_f64(c),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_paths() {
        assert_eq!(pair_image_path(Path::new("/a/x.hdr")), Path::new("/a/x.img"));
        assert_eq!(
            pair_image_path(Path::new("/a/x.hdr.gz")),
            Path::new("/a/x.img.gz")
        );
    }

    #[test]
    fn frame_slices_time_axis() {
        let v = Volume::from_fn(&[2, 2, 1, 3], Affine::identity(), |i, j, _, t| {
            (t * 10 + i + 2 * j) as f64
        });
        assert_eq!(v.time_points(), 3);
        let f = v.frame(2).unwrap();
        assert_eq!(f.shape(), &[2, 2, 1]);
        assert_eq!(f.data(), &[20.0, 21.0, 22.0, 23.0]);
        assert!(v.frame(3).is_none());
    }

    #[test]
    fn rejects_unknown_extension() {
        assert!(matches!(
            load_volume(Path::new("x.mgz")),
            Err(NiftiError::UnsupportedExtension(_))
        ));
    }
}
