use super::{Image2D, RenderError};
use crate::stats::percentile_sorted;

/// Intensity bounds `(lo, hi)` at the given percentiles of `values`.
pub fn window_bounds(values: &[f64], p_low: f64, p_high: f64) -> Result<(f64, f64), RenderError> {
    if p_low >= p_high {
        return Err(RenderError::BadPercentiles(p_low, p_high));
    }
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Err(RenderError::EmptyImage);
    }
    v.sort_by(f64::total_cmp);
    Ok((
        percentile_sorted(&v, p_low).unwrap(),
        percentile_sorted(&v, p_high).unwrap(),
    ))
}

/// `clamp((v - lo) / (hi - lo), 0, 1)`; all zeros when `hi == lo`.
pub fn apply_window(img: &Image2D, lo: f64, hi: f64) -> Image2D {
    let mut out = img.clone();
    let span = hi - lo;
    for v in out.data_mut() {
        *v = if span > 0.0 && v.is_finite() {
            ((*v - lo) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
    out
}

/// Percentile windowing of a gray image to [0, 1].
pub fn window_intensity(img: &Image2D, p_low: f64, p_high: f64) -> Result<Image2D, RenderError> {
    if img.data().is_empty() {
        return Err(RenderError::EmptyImage);
    }
    let (lo, hi) = window_bounds(img.data(), p_low, p_high)?;
    Ok(apply_window(img, lo, hi))
}
