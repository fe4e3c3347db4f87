use std::fmt;
use std::str::FromStr;

use super::{CheckResult, PreflightError};
use crate::dataset::B0_THRESHOLD;
use crate::dataset::GradientTable;
use crate::nifti::Volume;
use crate::stats::mean;

/// Share of foreground voxels allowed outside the fraction range.
pub const MAP_OUTLIER_FRACTION: f64 = 0.005;
const MAP_RANGE: (f64, f64) = (-0.01, 1.01);
/// Mean cortical thickness, mm.
pub const THICKNESS_RANGE: (f64, f64) = (2.0, 4.0);
pub const BUNDLE_FA_RANGE: (f64, f64) = (0.4, 0.9);
pub const BVEC_NORM_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeKind {
    FaMap,
    NoddiMap,
    CorticalThicknessMean,
    BundleMeanFa,
}

impl RangeKind {
    pub fn name(self) -> &'static str {
        match self {
            RangeKind::FaMap => "fa_map",
            RangeKind::NoddiMap => "noddi_map",
            RangeKind::CorticalThicknessMean => "cortical_thickness_mean",
            RangeKind::BundleMeanFa => "bundle_mean_fa",
        }
    }
}

impl fmt::Display for RangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RangeKind {
    type Err = PreflightError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "fa_map" => RangeKind::FaMap,
            "noddi_map" => RangeKind::NoddiMap,
            "cortical_thickness_mean" => RangeKind::CorticalThicknessMean,
            "bundle_mean_fa" => RangeKind::BundleMeanFa,
            other => return Err(PreflightError::UnknownKind(other.to_string())),
        })
    }
}

/// A scalar map, or a value already reduced upstream.
#[derive(Debug, Clone, Copy)]
pub enum RangeInput<'a> {
    Map(&'a Volume),
    Value(f64),
}

/// Nonzero (or NaN) voxels.
fn foreground(v: &Volume) -> Vec<f64> {
    v.data().iter().copied().filter(|x| *x != 0.0).collect()
}

pub fn check_scalar_range(input: RangeInput<'_>, kind: RangeKind) -> Result<CheckResult, PreflightError> {
    let name = kind.name();
    match kind {
        RangeKind::FaMap | RangeKind::NoddiMap => {
            let RangeInput::Map(map) = input else {
                return Err(PreflightError::InputMismatch(format!("{name} needs a map")));
            };
            let fg = foreground(map);
            if fg.is_empty() {
                return Ok(CheckResult::not_applicable(name, "map has no foreground voxels"));
            }
            let bad = fg
                .iter()
                .filter(|v| !(**v >= MAP_RANGE.0 && **v <= MAP_RANGE.1))
                .count();
            let share = bad as f64 / fg.len() as f64;
            let detail = format!("{bad} of {} foreground voxels outside [{}, {}]", fg.len(), MAP_RANGE.0, MAP_RANGE.1);
            Ok(if share > MAP_OUTLIER_FRACTION {
                CheckResult::flag(name, share, MAP_OUTLIER_FRACTION, detail)
            } else {
                CheckResult::pass(name, share, MAP_OUTLIER_FRACTION, detail)
            })
        }
        RangeKind::CorticalThicknessMean | RangeKind::BundleMeanFa => {
            let (lo, hi) = if kind == RangeKind::CorticalThicknessMean {
                THICKNESS_RANGE
            } else {
                BUNDLE_FA_RANGE
            };
            let value = match input {
                RangeInput::Value(v) => v,
                RangeInput::Map(m) => match mean(&foreground(m)) {
                    Some(v) => v,
                    None => return Ok(CheckResult::not_applicable(name, "map has no foreground voxels")),
                },
            };
            let threshold = if value < lo { lo } else { hi };
            let detail = format!("mean {value:.4}, expected [{lo}, {hi}]");
            Ok(if (lo..=hi).contains(&value) {
                CheckResult::pass(name, value, threshold, detail)
            } else {
                CheckResult::flag(name, value, threshold, detail)
            })
        }
    }
}

/// Gradient directions must be unit length, except zero vectors at b0.
pub fn check_bvec_norms(grads: &GradientTable) -> CheckResult {
    const NAME: &str = "bvec_norms";
    let mut worst = 0.0f64;
    let mut worst_idx = None;
    for (i, (b, g)) in grads.bvals.iter().zip(&grads.bvecs).enumerate() {
        let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        let dev = if *b <= B0_THRESHOLD && norm < 1e-9 {
            0.0
        } else {
            (norm - 1.0).abs()
        };
        if dev > worst || dev.is_nan() {
            worst = dev;
            worst_idx = Some(i);
        }
    }
    // slack for decimal round-off in text bvec files
    let limit = BVEC_NORM_TOLERANCE + 1e-9;
    match worst_idx {
        Some(i) if !(worst <= limit) => CheckResult::flag(
            NAME,
            worst,
            BVEC_NORM_TOLERANCE,
            format!("volume {i} (b={}) has |g| off by {worst:.4}", grads.bvals[i]),
        ),
        _ => CheckResult::pass(NAME, worst, BVEC_NORM_TOLERANCE, format!("{} directions", grads.len())),
    }
}
