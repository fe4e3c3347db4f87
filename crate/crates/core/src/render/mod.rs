//! QC PNG rendering: slicing, windowing, label overlays, panel layout, page
//! stitching and the recipe driver that ties them together.

mod compose;
mod image;
mod overlay;
mod pngio;
mod recipe;
mod slice;
mod window;

use std::path::PathBuf;

use thiserror::Error;

pub use compose::{compose_panels, draw_text, stitch_pages, GUTTER};
pub use image::{Channels, Image2D, LabelImage};
pub use overlay::{overlay_labels, LabelLut};
pub use pngio::{decode_png, encode_png, read_png};
pub use recipe::{render_image, render_recipe, RenderContext, RenderMode, RenderRecipe};
pub use slice::{extract_slice, slice_index, Plane};
pub use window::{apply_window, window_bounds, window_intensity};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("image has no pixels")]
    EmptyImage,
    #[error("percentiles ({0}, {1}): low must be below high")]
    BadPercentiles(f64, f64),
    #[error("volume was not passed through canonical_orient")]
    NotCanonical,
    #[error("expected a 3D volume, got {0} frames")]
    NotThreeD(usize),
    #[error("slice fraction {0} outside (0, 1)")]
    FractionOutOfRange(f64),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("empty panel grid")]
    EmptyGrid,
    #[error("no pages to stitch")]
    EmptyList,
    #[error("no file matches {0:?}")]
    MissingInput(String),
    #[error("recipe: {0}")]
    Recipe(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("png: {0}")]
    Png(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
