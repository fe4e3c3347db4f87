use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Image2D, RenderError};
use crate::nifti::Volume;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    /// Normal to z.
    Axial,
    /// Normal to y.
    Coronal,
    /// Normal to x.
    Sagittal,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Axial, Plane::Coronal, Plane::Sagittal];

    pub fn normal_axis(self) -> usize {
        match self {
            Plane::Axial => 2,
            Plane::Coronal => 1,
            Plane::Sagittal => 0,
        }
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Plane::Axial => "axial",
            Plane::Coronal => "coronal",
            Plane::Sagittal => "sagittal",
        })
    }
}

impl FromStr for Plane {
    type Err = RenderError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "axial" => Ok(Plane::Axial),
            "coronal" => Ok(Plane::Coronal),
            "sagittal" => Ok(Plane::Sagittal),
            other => Err(RenderError::Recipe(format!("unknown plane {other:?}"))),
        }
    }
}

/// `round(fraction · (n − 1))`, halves rounding up.
pub fn slice_index(n: usize, fraction: f64) -> usize {
    let idx = (fraction * (n.saturating_sub(1)) as f64 + 0.5).floor() as usize;
    idx.min(n.saturating_sub(1))
}

/// Cuts one plane out of a canonical 3D volume.
///
/// Display convention, identical for every file: radiological left/right
/// (patient right on the image left), anterior up in axial views, superior
/// up in coronal and sagittal views, anterior on the left in sagittal views.
pub fn extract_slice(v: &Volume, plane: Plane, fraction: f64) -> Result<Image2D, RenderError> {
    if !v.is_canonical() {
        return Err(RenderError::NotCanonical);
    }
    if v.time_points() != 1 {
        return Err(RenderError::NotThreeD(v.time_points()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(RenderError::FractionOutOfRange(fraction));
    }
    let [nx, ny, nz] = v.dims3();
    let s = slice_index(v.dims3()[plane.normal_axis()], fraction);
    let (w, h) = match plane {
        Plane::Axial => (nx, ny),
        Plane::Coronal => (nx, nz),
        Plane::Sagittal => (ny, nz),
    };
    let mut data = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let value = match plane {
                Plane::Axial => v.get(nx - 1 - c, ny - 1 - r, s, 0),
                Plane::Coronal => v.get(nx - 1 - c, s, nz - 1 - r, 0),
                Plane::Sagittal => v.get(s, ny - 1 - c, nz - 1 - r, 0),
            };
            data.push(value);
        }
    }
    Image2D::gray(w, h, data)
}
