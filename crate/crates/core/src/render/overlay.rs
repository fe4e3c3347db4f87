use std::collections::BTreeMap;
use std::path::Path;

use super::{Channels, Image2D, LabelImage, RenderError};

const GOLDEN_RATIO_CONJUGATE: f64 = 0.618_033_988_749_895;

/// Label → RGB color table.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LabelLut {
    /// Hue stepped by the golden-ratio conjugate per label.
    #[default]
    Golden,
    Table(BTreeMap<i64, [f64; 3]>),
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let sector = h6.floor() as i32 % 6;
    let f = h6 - h6.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

impl LabelLut {
    pub fn color(&self, label: i64) -> [f64; 3] {
        match self {
            LabelLut::Golden => {
                hsv_to_rgb((GOLDEN_RATIO_CONJUGATE * label as f64).rem_euclid(1.0), 0.8, 0.9)
            }
            LabelLut::Table(t) => t
                .get(&label)
                .copied()
                .unwrap_or_else(|| LabelLut::Golden.color(label)),
        }
    }

    /// Reads `label r g b` lines (0–255 components); `#` starts a comment.
    /// Trailing tokens such as a region name are ignored.
    pub fn from_file(path: &Path) -> Result<Self, RenderError> {
        let text = std::fs::read_to_string(path).map_err(|e| RenderError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, RenderError> {
        let mut table = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            let bad = || RenderError::Recipe(format!("lut line {}: {line:?}", n + 1));
            if tok.len() < 4 {
                return Err(bad());
            }
            let label: i64 = tok[0].parse().map_err(|_| bad())?;
            let mut rgb = [0.0; 3];
            for (c, t) in rgb.iter_mut().zip(&tok[1..4]) {
                *c = t.parse::<f64>().map_err(|_| bad())? / 255.0;
            }
            table.insert(label, rgb);
        }
        Ok(LabelLut::Table(table))
    }
}

/// Blends label colors over a gray base: label 0 is transparent, other
/// pixels become `(1 − alpha)·gray + alpha·lut(label)` per channel.
pub fn overlay_labels(
    base: &Image2D,
    labels: &LabelImage,
    lut: &LabelLut,
    alpha: f64,
) -> Result<Image2D, RenderError> {
    if base.width() != labels.width || base.height() != labels.height {
        return Err(RenderError::SizeMismatch(format!(
            "base {}×{} vs labels {}×{}",
            base.width(),
            base.height(),
            labels.width,
            labels.height
        )));
    }
    if base.channels() != Channels::Gray {
        return Err(RenderError::SizeMismatch("overlay base must be gray".into()));
    }
    let mut out = base.to_rgb();
    for (idx, &label) in labels.data.iter().enumerate() {
        if label == 0 {
            continue;
        }
        let color = lut.color(label);
        let px = &mut out.data_mut()[idx * 3..idx * 3 + 3];
        for (p, c) in px.iter_mut().zip(color) {
            *p = ((1.0 - alpha) * *p + alpha * c).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn red() -> LabelLut {
        LabelLut::Table(BTreeMap::from([(1, [1.0, 0.0, 0.0])]))
    }

    fn labels(data: Vec<i64>) -> LabelImage {
        LabelImage {
            width: data.len(),
            height: 1,
            data,
        }
    }

    #[test]
    fn alpha_zero_is_identity() {
        let base = Image2D::gray(3, 1, vec![0.1, 0.4, 0.9]).unwrap();
        let out = overlay_labels(&base, &labels(vec![1, 2, 3]), &LabelLut::Golden, 0.0).unwrap();
        assert_eq!(out, base.to_rgb());
    }

    #[test]
    fn alpha_one_is_pure_color() {
        let base = Image2D::gray(2, 1, vec![0.3, 0.3]).unwrap();
        let out = overlay_labels(&base, &labels(vec![1, 0]), &red(), 1.0).unwrap();
        assert_eq!(out.pixel(0, 0), &[1.0, 0.0, 0.0]);
        assert_eq!(out.pixel(1, 0), &[0.3, 0.3, 0.3]);
    }

    #[test]
    fn half_blend() {
        let base = Image2D::gray(1, 1, vec![0.4]).unwrap();
        let out = overlay_labels(&base, &labels(vec![1]), &red(), 0.5).unwrap();
        let px = out.pixel(0, 0);
        assert!((px[0] - 0.7).abs() < 1e-12);
        assert!((px[1] - 0.2).abs() < 1e-12);
        assert!((px[2] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn size_mismatch() {
        let base = Image2D::gray(2, 1, vec![0.0; 2]).unwrap();
        assert!(matches!(
            overlay_labels(&base, &labels(vec![1]), &red(), 0.5),
            Err(RenderError::SizeMismatch(_))
        ));
    }

    #[test]
    fn golden_colors_are_distinct_and_bounded() {
        let lut = LabelLut::Golden;
        let colors: Vec<[f64; 3]> = (1..50).map(|l| lut.color(l)).collect();
        for c in &colors {
            assert!(c.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert_ne!(colors[0], colors[1]);
    }

    #[test]
    fn lut_file_format() {
        let lut = LabelLut::parse("# comment\n1 255 0 0 Left-Cortex\n\n2 0 128 255\n").unwrap();
        assert_eq!(lut.color(1), [1.0, 0.0, 0.0]);
        assert!(LabelLut::parse("1 2\n").is_err());
    }
}
