use super::PreflightError;
use crate::stats::median;

pub const DEFAULT_MAD_K: f64 = 3.0;

/// Indices whose distance from the median exceeds `k` times the median
/// absolute deviation (no normal-consistency constant). With a zero MAD,
/// every value different from the median is flagged.
pub fn mad_outliers(values: &[f64], k: f64) -> Result<Vec<usize>, PreflightError> {
    let m = median(values).ok_or(PreflightError::EmptyInput)?;
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    let mad = median(&dev).ok_or(PreflightError::EmptyInput)?;
    Ok(dev
        .iter()
        .enumerate()
        .filter(|(_, &d)| if mad == 0.0 { d != 0.0 } else { d > k * mad })
        .map(|(i, _)| i)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_outlier() {
        assert_eq!(mad_outliers(&[1.0, 2.0, 3.0, 4.0, 100.0], 3.0).unwrap(), vec![4]);
    }

    #[test]
    fn all_equal() {
        assert!(mad_outliers(&[5.0; 7], 3.0).unwrap().is_empty());
    }

    #[test]
    fn zero_mad_rule() {
        assert_eq!(mad_outliers(&[0.0, 0.0, 0.0, 0.0, 1.0], 3.0).unwrap(), vec![4]);
    }

    #[test]
    fn empty() {
        assert!(matches!(mad_outliers(&[], 3.0), Err(PreflightError::EmptyInput)));
    }

    proptest! {
        // integer data with power-of-two scale and integer shift keeps every
        // intermediate exact, so the comparison cannot flip on round-off
        #[test]
        fn invariant_under_positive_affine(
            vals in prop::collection::vec(-1000i32..1000, 1..40),
            scale_exp in -4i32..8,
            shift in -10_000i32..10_000,
        ) {
            let v: Vec<f64> = vals.iter().map(|&x| x as f64).collect();
            let a = 2f64.powi(scale_exp);
            let w: Vec<f64> = v.iter().map(|x| a * x + shift as f64).collect();
            prop_assert_eq!(mad_outliers(&v, 3.0).unwrap(), mad_outliers(&w, 3.0).unwrap());
        }
    }
}
