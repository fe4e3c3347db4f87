//! PNG encode/decode with fixed settings.
//!
//! Output is 8-bit gray or RGB, non-interlaced, with only IHDR/IDAT/IEND
//! chunks. Filter and compression are pinned so identical pixels always give
//! identical bytes for a given encoder version.

use std::path::Path;

use png::{BitDepth, ColorType, Compression, Filter, Transformations};

use super::{Channels, Image2D, RenderError};

pub fn encode_png(img: &Image2D) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(match img.channels() {
            Channels::Gray => ColorType::Grayscale,
            Channels::Rgb => ColorType::Rgb,
        });
        enc.set_depth(BitDepth::Eight);
        enc.set_compression(Compression::Balanced);
        enc.set_filter(Filter::Up);
        let mut writer = enc.write_header().map_err(|e| RenderError::Png(e.to_string()))?;
        writer
            .write_image_data(&img.to_u8())
            .map_err(|e| RenderError::Png(e.to_string()))?;
        writer.finish().map_err(|e| RenderError::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Decodes any PNG to 8-bit gray or RGB. Alpha is composited over black.
pub fn decode_png(bytes: &[u8]) -> Result<Image2D, RenderError> {
    let mut dec = png::Decoder::new(std::io::Cursor::new(bytes));
    dec.set_transformations(Transformations::EXPAND | Transformations::STRIP_16);
    let mut reader = dec.read_info().map_err(|e| RenderError::Png(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| RenderError::Png(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let buf = &buf[..info.buffer_size()];
    let (channels, samples): (Channels, Vec<u8>) = match info.color_type {
        ColorType::Grayscale => (Channels::Gray, buf.to_vec()),
        ColorType::GrayscaleAlpha => (
            Channels::Gray,
            buf.chunks_exact(2).map(|p| premultiply(p[0], p[1])).collect(),
        ),
        ColorType::Rgb => (Channels::Rgb, buf.to_vec()),
        ColorType::Rgba => (
            Channels::Rgb,
            buf.chunks_exact(4)
                .flat_map(|p| [premultiply(p[0], p[3]), premultiply(p[1], p[3]), premultiply(p[2], p[3])])
                .collect(),
        ),
        ColorType::Indexed => return Err(RenderError::Png("palette not expanded".into())),
    };
    Image2D::from_u8(w, h, channels, &samples)
}

fn premultiply(v: u8, a: u8) -> u8 {
    ((v as u32 * a as u32 + 127) / 255) as u8
}

pub fn read_png(path: &Path) -> Result<Image2D, RenderError> {
    let bytes = std::fs::read(path).map_err(|source| RenderError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_png(&bytes).map_err(|e| RenderError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_rgb_and_gray() {
        let rgb = Image2D::from_u8(2, 2, Channels::Rgb, &[0, 10, 20, 30, 40, 50, 60, 70, 80, 255, 128, 1]).unwrap();
        assert_eq!(decode_png(&encode_png(&rgb).unwrap()).unwrap(), rgb);
        let gray = Image2D::from_u8(3, 1, Channels::Gray, &[0, 127, 255]).unwrap();
        assert_eq!(decode_png(&encode_png(&gray).unwrap()).unwrap(), gray);
    }

    #[test]
    fn only_critical_chunks() {
        let img = Image2D::filled(4, 4, Channels::Gray, 0.5);
        let bytes = encode_png(&img).unwrap();
        let mut pos = 8;
        let mut kinds = Vec::new();
        while pos < bytes.len() {
            let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
            kinds.push(String::from_utf8_lossy(&bytes[pos + 4..pos + 8]).into_owned());
            pos += 12 + len;
        }
        assert_eq!(kinds.first().map(String::as_str), Some("IHDR"));
        assert_eq!(kinds.last().map(String::as_str), Some("IEND"));
        assert!(kinds.iter().all(|k| k == "IHDR" || k == "IDAT" || k == "IEND"));
        // interlace byte of IHDR
        assert_eq!(bytes[8 + 8 + 12], 0);
    }
}
