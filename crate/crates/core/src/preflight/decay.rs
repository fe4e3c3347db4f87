//! Mono-exponential decay of median DWI intensity with b-value.

use serde::Serialize;

use super::shells::{shell_group, DEFAULT_SHELL_TOLERANCE};
use super::{CheckResult, PreflightError};
use crate::dataset::{GradientTable, B0_THRESHOLD};
use crate::nifti::Volume;
use crate::stats::median;

pub const CHECK_NAME: &str = "signal_decay";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConfig {
    pub shell_tolerance: f64,
    /// Mask threshold as a fraction of the reference b0 volume's maximum.
    pub mask_fraction: f64,
    /// A shell median may exceed the previous (lower-b) one by this factor.
    pub monotonic_slack: f64,
    /// Shells above this b-value are checked for monotonicity but left out
    /// of the log-linear fit.
    pub fit_max_b: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            shell_tolerance: DEFAULT_SHELL_TOLERANCE,
            mask_fraction: 0.1,
            monotonic_slack: 1.05,
            fit_max_b: 1500.0,
        }
    }
}

/// Log-linear fit of `log S = log S0 − b · d_eff` over shell medians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub s0_log: f64,
    /// Effective scalar diffusivity, mm²/s.
    pub d_eff: f64,
    /// `(b, median intensity)` per shell, ascending b.
    pub shells: Vec<(f64, f64)>,
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Foreground: voxels of `reference` above `fraction` of its maximum.
fn foreground_mask(dwi: &Volume, reference: usize, fraction: f64) -> Vec<usize> {
    let n: usize = dwi.dims3().iter().product();
    let frame = &dwi.data()[reference * n..(reference + 1) * n];
    let max = frame.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let cut = fraction * max;
    frame
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > cut)
        .map(|(i, _)| i)
        .collect()
}

pub fn check_signal_decay(
    dwi: &Volume,
    grads: &GradientTable,
    cfg: &DecayConfig,
) -> Result<(CheckResult, Option<DecayFit>), PreflightError> {
    let volumes = dwi.time_points();
    if volumes != grads.len() {
        return Err(PreflightError::CountMismatch {
            volumes,
            bvals: grads.len(),
        });
    }
    let shells = shell_group(&grads.bvals, cfg.shell_tolerance);
    if shells.len() < 2 {
        return Ok((
            CheckResult::not_applicable(CHECK_NAME, format!("{} shell(s); need 2", shells.len())),
            None,
        ));
    }

    let reference = grads
        .bvals
        .iter()
        .position(|&b| b <= B0_THRESHOLD)
        .unwrap_or(shells[0].members[0]);
    let mask = foreground_mask(dwi, reference, cfg.mask_fraction);
    if mask.is_empty() {
        return Err(PreflightError::AllBackground);
    }

    let n: usize = dwi.dims3().iter().product();
    let per_volume: Vec<f64> = (0..volumes)
        .map(|t| {
            let frame = &dwi.data()[t * n..(t + 1) * n];
            let vals: Vec<f64> = mask.iter().map(|&i| frame[i]).collect();
            median(&vals).unwrap_or(f64::NAN)
        })
        .collect();
    let shell_medians: Vec<(f64, f64)> = shells
        .iter()
        .map(|s| {
            let m: Vec<f64> = s.members.iter().map(|&i| per_volume[i]).collect();
            (s.b, median(&m).unwrap_or(f64::NAN))
        })
        .collect();

    let table = shell_medians
        .iter()
        .map(|(b, m)| format!("b={b}:{m:.4}"))
        .collect::<Vec<_>>()
        .join(" ");

    if shell_medians.iter().any(|&(_, m)| !(m > 0.0)) {
        return Ok((
            CheckResult::flag(CHECK_NAME, f64::NAN, 0.0, format!("non-positive shell median; {table}")),
            None,
        ));
    }

    let violation = shell_medians
        .windows(2)
        .find(|w| w[1].1 > cfg.monotonic_slack * w[0].1);

    let mut fit_points: Vec<(f64, f64)> = shell_medians
        .iter()
        .filter(|(b, _)| *b <= cfg.fit_max_b)
        .map(|&(b, m)| (b, m.ln()))
        .collect();
    if fit_points.len() < 2 {
        fit_points = shell_medians.iter().map(|&(b, m)| (b, m.ln())).collect();
    }
    let (slope, intercept) = least_squares(&fit_points);
    let fit = DecayFit {
        s0_log: intercept,
        d_eff: -slope,
        shells: shell_medians.clone(),
    };

    let result = match violation {
        Some(w) => CheckResult::flag(
            CHECK_NAME,
            slope,
            0.0,
            format!(
                "median rises from {:.4} at b={} to {:.4} at b={}; {table}",
                w[0].1, w[0].0, w[1].1, w[1].0
            ),
        ),
        None if slope >= 0.0 => CheckResult::flag(
            CHECK_NAME,
            slope,
            0.0,
            format!("fitted slope {slope:e} is not negative; {table}"),
        ),
        None => CheckResult::pass(CHECK_NAME, slope, 0.0, format!("d_eff={:e} mm^2/s; {table}", -slope)),
    };
    Ok((result, Some(fit)))
}
