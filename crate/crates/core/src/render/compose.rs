use font8x8::{UnicodeFonts, BASIC_FONTS};

use super::{Channels, Image2D, RenderError};

/// Pixels of black between tiles and around the canvas edge.
pub const GUTTER: usize = 2;

fn blit(canvas: &mut Image2D, img: &Image2D, x0: usize, y0: usize) {
    let rgb = canvas.channels() == Channels::Rgb;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let src = img.pixel(x, y);
            let dst = canvas.pixel_mut(x0 + x, y0 + y);
            match (rgb, src.len()) {
                (true, 1) => dst.copy_from_slice(&[src[0]; 3]),
                _ => dst.copy_from_slice(src),
            }
        }
    }
}

/// Draws `text` in white 8×8 glyphs, clipped to the `max_w`×`max_h` box at
/// (`x0`, `y0`).
pub fn draw_text(canvas: &mut Image2D, text: &str, x0: usize, y0: usize, max_w: usize, max_h: usize) {
    for (n, ch) in text.chars().enumerate() {
        let glyph = BASIC_FONTS.get(ch).or_else(|| BASIC_FONTS.get('?')).unwrap_or([0; 8]);
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..8 {
                if bits & (1 << col) == 0 {
                    continue;
                }
                let (dx, dy) = (n * 8 + col, row);
                if dx >= max_w || dy >= max_h {
                    continue;
                }
                let (x, y) = (x0 + dx, y0 + dy);
                if x < canvas.width() && y < canvas.height() {
                    canvas.pixel_mut(x, y).fill(1.0);
                }
            }
        }
    }
}

/// Lays `grid` out on one canvas. Every cell is letterboxed (centered on
/// black) into a common tile of the largest width × largest height; ragged
/// rows leave empty cells black. `labels` are matched to cells in row-major
/// order.
pub fn compose_panels(grid: &[Vec<Image2D>], labels: Option<&[Option<String>]>) -> Result<Image2D, RenderError> {
    let rows = grid.len();
    let cols = grid.iter().map(Vec::len).max().unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(RenderError::EmptyGrid);
    }
    let cells = grid.iter().flatten();
    let tile_w = cells.clone().map(Image2D::width).max().unwrap_or(0);
    let tile_h = cells.clone().map(Image2D::height).max().unwrap_or(0);
    let channels = if cells.clone().any(|c| c.channels() == Channels::Rgb) {
        Channels::Rgb
    } else {
        Channels::Gray
    };
    let width = cols * tile_w + (cols + 1) * GUTTER;
    let height = rows * tile_h + (rows + 1) * GUTTER;
    let mut canvas = Image2D::filled(width, height, channels, 0.0);

    for (r, row) in grid.iter().enumerate() {
        for (c, img) in row.iter().enumerate() {
            let tx = GUTTER + c * (tile_w + GUTTER);
            let ty = GUTTER + r * (tile_h + GUTTER);
            let ox = (tile_w - img.width()) / 2;
            let oy = (tile_h - img.height()) / 2;
            blit(&mut canvas, img, tx + ox, ty + oy);
            if let Some(Some(text)) = labels.and_then(|l| l.get(r * cols + c)) {
                draw_text(&mut canvas, text, tx + 1, ty + 1, tile_w.saturating_sub(1), tile_h.saturating_sub(1));
            }
        }
    }
    Ok(canvas)
}

/// Stacks pages top to bottom; narrower pages are centered on black.
pub fn stitch_pages(pages: &[Image2D]) -> Result<Image2D, RenderError> {
    if pages.is_empty() {
        return Err(RenderError::EmptyList);
    }
    let width = pages.iter().map(Image2D::width).max().unwrap();
    let height = pages.iter().map(Image2D::height).sum();
    let channels = if pages.iter().any(|p| p.channels() == Channels::Rgb) {
        Channels::Rgb
    } else {
        Channels::Gray
    };
    if pages.len() == 1 && pages[0].channels() == channels {
        return Ok(pages[0].clone());
    }
    let mut canvas = Image2D::filled(width, height, channels, 0.0);
    let mut y = 0;
    for p in pages {
        blit(&mut canvas, p, (width - p.width()) / 2, y);
        y += p.height();
    }
    Ok(canvas)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tile(w: usize, h: usize, v: f64) -> Image2D {
        Image2D::filled(w, h, Channels::Gray, v)
    }

    #[test]
    fn single_cell_gets_border() {
        let out = compose_panels(&[vec![tile(10, 5, 1.0)]], None).unwrap();
        assert_eq!((out.width(), out.height()), (14, 9));
        assert_eq!(out.pixel(0, 0)[0], 0.0);
        assert_eq!(out.pixel(2, 2)[0], 1.0);
        assert_eq!(out.pixel(12, 7)[0], 0.0);
    }

    #[test]
    fn one_by_three() {
        let out = compose_panels(&[vec![tile(100, 100, 1.0); 3]], None).unwrap();
        assert_eq!((out.width(), out.height()), (308, 104));
    }

    #[test]
    fn mixed_sizes_letterbox() {
        let row1 = vec![tile(100, 100, 1.0), tile(80, 60, 0.5), tile(100, 100, 1.0)];
        let row2 = vec![tile(80, 60, 0.5), tile(100, 100, 1.0), tile(80, 60, 0.5)];
        let out = compose_panels(&[row1, row2], None).unwrap();
        assert_eq!((out.width(), out.height()), (308, 206));
        // second cell of the first row: tile origin x = 2 + 102 = 104, y = 2;
        // the 80×60 image sits at +10, +20
        assert_eq!(out.pixel(104 + 9, 2 + 19)[0], 0.0);
        assert_eq!(out.pixel(104 + 10, 2 + 20)[0], 0.5);
        assert_eq!(out.pixel(104 + 89, 2 + 79)[0], 0.5);
        assert_eq!(out.pixel(104 + 90, 2 + 80)[0], 0.0);
    }

    #[test]
    fn empty_grid() {
        assert!(matches!(compose_panels(&[], None), Err(RenderError::EmptyGrid)));
        assert!(matches!(compose_panels(&[vec![]], None), Err(RenderError::EmptyGrid)));
    }

    #[test]
    fn labels_draw_white_pixels() {
        let labels = vec![Some("FA".to_string())];
        let out = compose_panels(&[vec![tile(40, 20, 0.0)]], Some(&labels)).unwrap();
        assert!(out.data().contains(&1.0));
        let plain = compose_panels(&[vec![tile(40, 20, 0.0)]], None).unwrap();
        assert!(plain.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stitching() {
        let one = stitch_pages(&[tile(100, 50, 0.2)]).unwrap();
        assert_eq!(one, tile(100, 50, 0.2));

        let two = stitch_pages(&[tile(100, 50, 0.2), tile(100, 50, 0.8)]).unwrap();
        assert_eq!((two.width(), two.height()), (100, 100));
        assert_eq!(two.pixel(0, 0)[0], 0.2);
        assert_eq!(two.pixel(0, 99)[0], 0.8);

        let mixed = stitch_pages(&[tile(80, 50, 1.0), tile(100, 40, 0.5)]).unwrap();
        assert_eq!((mixed.width(), mixed.height()), (100, 90));
        assert_eq!(mixed.pixel(9, 0)[0], 0.0);
        assert_eq!(mixed.pixel(10, 0)[0], 1.0);
        assert_eq!(mixed.pixel(89, 49)[0], 1.0);
        assert_eq!(mixed.pixel(90, 49)[0], 0.0);
        assert_eq!(mixed.pixel(0, 50)[0], 0.5);

        assert!(matches!(stitch_pages(&[]), Err(RenderError::EmptyList)));
    }
}
