use super::RenderError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channels {
    Gray,
    Rgb,
}

impl Channels {
    pub fn count(self) -> usize {
        match self {
            Channels::Gray => 1,
            Channels::Rgb => 3,
        }
    }
}

/// Row-major raster with real-valued samples, interleaved channels.
/// Display images hold values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    width: usize,
    height: usize,
    channels: Channels,
    data: Vec<f64>,
}

impl Image2D {
    pub fn new(width: usize, height: usize, channels: Channels, data: Vec<f64>) -> Result<Self, RenderError> {
        if data.len() != width * height * channels.count() {
            return Err(RenderError::SizeMismatch(format!(
                "{width}×{height}×{} needs {} samples, got {}",
                channels.count(),
                width * height * channels.count(),
                data.len()
            )));
        }
        Ok(Image2D {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn gray(width: usize, height: usize, data: Vec<f64>) -> Result<Self, RenderError> {
        Self::new(width, height, Channels::Gray, data)
    }

    pub fn filled(width: usize, height: usize, channels: Channels, value: f64) -> Self {
        Image2D {
            width,
            height,
            channels,
            data: vec![value; width * height * channels.count()],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> Channels {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let c = self.channels.count();
        let i = (y * self.width + x) * c;
        &self.data[i..i + c]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let c = self.channels.count();
        let i = (y * self.width + x) * c;
        &mut self.data[i..i + c]
    }

    /// Gray images are replicated into three channels.
    pub fn to_rgb(&self) -> Image2D {
        match self.channels {
            Channels::Rgb => self.clone(),
            Channels::Gray => Image2D {
                width: self.width,
                height: self.height,
                channels: Channels::Rgb,
                data: self.data.iter().flat_map(|&v| [v, v, v]).collect(),
            },
        }
    }

    /// Rounds samples to integer labels.
    pub fn to_labels(&self) -> LabelImage {
        LabelImage {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .step_by(self.channels.count())
                .map(|v| if v.is_finite() { v.round() as i64 } else { 0 })
                .collect(),
        }
    }

    /// 8-bit samples, clamped to [0, 1] then rounded.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| {
                let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
                (v * 255.0).round() as u8
            })
            .collect()
    }

    pub fn from_u8(width: usize, height: usize, channels: Channels, bytes: &[u8]) -> Result<Self, RenderError> {
        Self::new(
            width,
            height,
            channels,
            bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        )
    }
}

/// Integer label raster (0 = background).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<i64>,
}
