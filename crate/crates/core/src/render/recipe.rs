use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::compose::{compose_panels, stitch_pages};
use super::overlay::{overlay_labels, LabelLut};
use super::pngio::{encode_png, read_png};
use super::slice::{extract_slice, Plane};
use super::window::{apply_window, window_bounds};
use super::{Image2D, RenderError};
use crate::dataset::EntityMap;
use crate::nifti::{canonical_orient, load_volume, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    TriplanarGray,
    TriplanarOverlay,
    SideBySide,
    AxialGrid,
    StitchPages,
}

fn default_fractions() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

fn default_alpha() -> f64 {
    0.5
}

fn default_window() -> (f64, f64) {
    (1.0, 99.0)
}

/// How one pipeline's outputs become a QC PNG.
///
/// Patterns are globs relative to the data root. They may contain the
/// placeholders `{dataset}`, `{pipeline}`, `{sub}`, `{ses}`, `{acq}`,
/// `{run}`, `{suffix}`, `{stem}` (canonical entity string), `{image}` (the
/// manifest image path), `{ses_dir}` (`ses-<label>/` or empty) and
/// `{sub_output}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderRecipe {
    pub name: String,
    pub base_pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay_pattern: Option<String>,
    pub mode: RenderMode,
    #[serde(default = "default_fractions")]
    pub slice_fractions: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub overlay_alpha: f64,
    #[serde(default = "default_window")]
    pub window_percentiles: (f64, f64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel_labels: Option<Vec<String>>,
    /// Frame of a 4D base volume to show; 0 when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<usize>,
    /// Label color table (`label r g b` lines), relative to the recipe file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lut: Option<PathBuf>,
    /// Manifest suffixes this recipe renders (e.g. `["dwi"]`); all when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applies_to: Option<Vec<String>>,
    /// Render one PNG per entry (e.g. one per tract bundle), substituted
    /// for `{sub_output}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_outputs: Option<Vec<String>>,
    /// Inputs for the quantitative checks of the same pipeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preflight: Option<crate::preflight::PreflightSpec>,
}

impl RenderRecipe {
    pub fn parse(text: &str) -> Result<Self, RenderError> {
        let recipe: RenderRecipe = toml::from_str(text).map_err(|e| RenderError::Recipe(e.to_string()))?;
        recipe.validate()?;
        Ok(recipe)
    }

    /// Loads a recipe file; a relative `lut` path is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, RenderError> {
        let text = std::fs::read_to_string(path).map_err(|source| RenderError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut r = Self::parse(&text).map_err(|e| RenderError::Recipe(format!("{}: {e}", path.display())))?;
        if let (Some(lut), Some(dir)) = (&r.lut, path.parent()) {
            if lut.is_relative() {
                r.lut = Some(dir.join(lut));
            }
        }
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: String| Err(RenderError::Recipe(format!("{}: {m}", self.name)));
        if self.slice_fractions.is_empty() {
            return bad("slice_fractions is empty".into());
        }
        if self.slice_fractions.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
            return bad("slice_fractions must lie in (0, 1)".into());
        }
        if self.slice_fractions.windows(2).any(|w| w[0] >= w[1]) {
            return bad("slice_fractions must be strictly increasing".into());
        }
        if !(0.0..=1.0).contains(&self.overlay_alpha) {
            return bad(format!("overlay_alpha {} outside [0, 1]", self.overlay_alpha));
        }
        let (lo, hi) = self.window_percentiles;
        if !(0.0 <= lo && lo < hi && hi <= 100.0) {
            return bad(format!("window_percentiles ({lo}, {hi}) must satisfy 0 <= low < high <= 100"));
        }
        if let Some(outs) = &self.sub_outputs {
            let ok = |o: &String| !o.is_empty() && o.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if let Some(o) = outs.iter().find(|o| !ok(o)) {
                return bad(format!("sub_output {o:?} may only contain letters, digits, '_' and '-'"));
            }
        }
        let needs_second = matches!(self.mode, RenderMode::TriplanarOverlay | RenderMode::SideBySide);
        if needs_second && self.overlay_pattern.is_none() {
            return bad(format!("mode {:?} needs overlay_pattern", self.mode));
        }
        Ok(())
    }

    pub fn applies_to(&self, suffix: &str) -> bool {
        self.applies_to
            .as_ref()
            .is_none_or(|list| list.iter().any(|s| s == suffix))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("recipe serializes")
    }
}

/// The item being rendered: where its data lives and how it is named.
#[derive(Debug, Clone)]
pub struct RenderContext {
    pub data_root: PathBuf,
    pub pipeline: String,
    pub entities: EntityMap,
    /// Manifest image path relative to the data root.
    pub image: String,
    pub sub_output: Option<String>,
}

impl RenderContext {
    pub fn substitute(&self, pattern: &str) -> String {
        let e = &self.entities;
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        pattern
            .replace("{dataset}", &e.dataset)
            .replace("{pipeline}", &self.pipeline)
            .replace("{sub}", &e.subject)
            .replace("{ses_dir}", &e.session.as_ref().map(|s| format!("ses-{s}/")).unwrap_or_default())
            .replace("{ses}", &opt(&e.session))
            .replace("{acq}", &opt(&e.acquisition))
            .replace("{run}", &opt(&e.run))
            .replace("{suffix}", &e.suffix)
            .replace("{stem}", &e.stem())
            .replace("{image}", &self.image)
            .replace("{sub_output}", self.sub_output.as_deref().unwrap_or_default())
    }

    /// All files matching a pattern, sorted.
    pub fn resolve(&self, pattern: &str) -> Result<Vec<PathBuf>, RenderError> {
        let full = self.data_root.join(self.substitute(pattern));
        let full = full.to_string_lossy().into_owned();
        let mut hits: Vec<PathBuf> = glob::glob(&full)
            .map_err(|e| RenderError::Recipe(format!("pattern {pattern:?}: {e}")))?
            .filter_map(Result::ok)
            .filter(|p| p.is_file())
            .collect();
        hits.sort();
        if hits.is_empty() {
            return Err(RenderError::MissingInput(pattern.to_string()));
        }
        Ok(hits)
    }

    fn resolve_one(&self, pattern: &str) -> Result<PathBuf, RenderError> {
        Ok(self.resolve(pattern)?.swap_remove(0))
    }
}

fn load_frame(path: &Path, frame: usize) -> Result<Volume, RenderError> {
    let input_err = |message: String| RenderError::Input {
        path: path.to_path_buf(),
        message,
    };
    let v = load_volume(path).map_err(|e| input_err(e.to_string()))?;
    let v = v
        .frame(frame)
        .ok_or_else(|| input_err(format!("frame {frame} out of range")))?;
    let v = canonical_orient(v);
    if !v.is_canonical() {
        return Err(input_err(v.warnings().join("; ")));
    }
    Ok(v)
}

struct Windowed {
    volume: Volume,
    lo: f64,
    hi: f64,
}

impl Windowed {
    fn new(volume: Volume, percentiles: (f64, f64)) -> Result<Self, RenderError> {
        let (lo, hi) = window_bounds(volume.data(), percentiles.0, percentiles.1)?;
        Ok(Windowed { volume, lo, hi })
    }

    fn slice(&self, plane: Plane, fraction: f64) -> Result<Image2D, RenderError> {
        Ok(apply_window(&extract_slice(&self.volume, plane, fraction)?, self.lo, self.hi))
    }
}

fn same_grid(a: &Volume, b: &Volume, path: &Path) -> Result<(), RenderError> {
    if a.dims3() != b.dims3() {
        return Err(RenderError::Input {
            path: path.to_path_buf(),
            message: format!("grid {:?} does not match base {:?}", b.dims3(), a.dims3()),
        });
    }
    Ok(())
}

/// Places `labels[g]` on the top-left cell of column group `g` of a grid
/// with `cols` columns split into `groups` equal groups.
fn group_labels(labels: &Option<Vec<String>>, cols: usize, groups: usize) -> Option<Vec<Option<String>>> {
    let labels = labels.as_ref()?;
    let per = cols / groups.max(1);
    let mut cells = vec![None; cols];
    for (g, text) in labels.iter().enumerate().take(groups) {
        cells[g * per] = Some(text.clone());
    }
    Some(cells)
}

/// Renders the item's QC image and returns PNG bytes.
pub fn render_recipe(recipe: &RenderRecipe, ctx: &RenderContext) -> Result<Vec<u8>, RenderError> {
    recipe.validate()?;
    let image = render_image(recipe, ctx)?;
    encode_png(&image)
}

pub fn render_image(recipe: &RenderRecipe, ctx: &RenderContext) -> Result<Image2D, RenderError> {
    let fractions = &recipe.slice_fractions;
    let frame = recipe.frame.unwrap_or(0);

    if recipe.mode == RenderMode::StitchPages {
        let pages = ctx
            .resolve(&recipe.base_pattern)?
            .iter()
            .map(|p| read_png(p))
            .collect::<Result<Vec<_>, _>>()?;
        return stitch_pages(&pages);
    }

    // resolve every input first so a missing output is reported before any
    // parse error
    let base_path = ctx.resolve_one(&recipe.base_pattern)?;
    let second_path = match &recipe.overlay_pattern {
        Some(p) if recipe.mode != RenderMode::TriplanarGray && recipe.mode != RenderMode::AxialGrid => {
            Some(ctx.resolve_one(p)?)
        }
        _ => None,
    };

    let base = Windowed::new(load_frame(&base_path, frame)?, recipe.window_percentiles)?;

    match recipe.mode {
        RenderMode::TriplanarGray => {
            let grid = Plane::ALL
                .iter()
                .map(|&plane| fractions.iter().map(|&f| base.slice(plane, f)).collect())
                .collect::<Result<Vec<Vec<_>>, _>>()?;
            compose_panels(&grid, group_labels(&recipe.panel_labels, fractions.len(), fractions.len()).as_deref())
        }
        RenderMode::TriplanarOverlay => {
            let path = second_path.expect("validated");
            let labels = load_frame(&path, 0)?;
            same_grid(&base.volume, &labels, &path)?;
            let lut = match &recipe.lut {
                Some(p) => LabelLut::from_file(p)?,
                None => LabelLut::Golden,
            };
            let mut grid = Vec::new();
            for plane in Plane::ALL {
                let mut row = Vec::new();
                for &f in fractions {
                    let gray = base.slice(plane, f)?;
                    let lab = extract_slice(&labels, plane, f)?.to_labels();
                    row.push(overlay_labels(&gray, &lab, &lut, recipe.overlay_alpha)?);
                }
                grid.push(row);
            }
            compose_panels(&grid, group_labels(&recipe.panel_labels, fractions.len(), fractions.len()).as_deref())
        }
        RenderMode::SideBySide => {
            let path = second_path.expect("validated");
            let right = Windowed::new(load_frame(&path, frame)?, recipe.window_percentiles)?;
            let mut grid = Vec::new();
            for plane in Plane::ALL {
                let mut row = Vec::new();
                for side in [&base, &right] {
                    for &f in fractions {
                        row.push(side.slice(plane, f)?);
                    }
                }
                grid.push(row);
            }
            compose_panels(&grid, group_labels(&recipe.panel_labels, 2 * fractions.len(), 2).as_deref())
        }
        RenderMode::AxialGrid => {
            let n = fractions.len();
            let cols = (n as f64).sqrt().ceil() as usize;
            let tiles = fractions
                .iter()
                .map(|&f| base.slice(Plane::Axial, f))
                .collect::<Result<Vec<_>, _>>()?;
            let grid: Vec<Vec<Image2D>> = tiles.chunks(cols).map(<[Image2D]>::to_vec).collect();
            let labels = recipe.panel_labels.as_ref().map(|l| {
                let mut cells: Vec<Option<String>> = l.iter().cloned().map(Some).collect();
                cells.resize(grid.len() * cols, None);
                cells
            });
            compose_panels(&grid, labels.as_deref())
        }
        RenderMode::StitchPages => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "tensor"
base_pattern = "derivatives/{pipeline}/{stem}_fa.nii.gz"
mode = "triplanar_gray"
"#;

    #[test]
    fn defaults_apply() {
        let r = RenderRecipe::parse(MINIMAL).unwrap();
        assert_eq!(r.slice_fractions, vec![0.25, 0.5, 0.75]);
        assert_eq!(r.overlay_alpha, 0.5);
        assert_eq!(r.window_percentiles, (1.0, 99.0));
        assert!(r.applies_to("T1w"));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = format!("{MINIMAL}\ncolour = \"red\"\n");
        assert!(matches!(RenderRecipe::parse(&text), Err(RenderError::Recipe(_))));
    }

    #[test]
    fn invariants_checked() {
        for extra in [
            "slice_fractions = [0.5, 0.25]",
            "slice_fractions = [0.0, 0.5]",
            "overlay_alpha = 1.5",
            "window_percentiles = [99.0, 1.0]",
            "sub_outputs = [\"a/b\"]",
        ] {
            let text = format!("{MINIMAL}{extra}\n");
            assert!(RenderRecipe::parse(&text).is_err(), "{extra}");
        }
        let overlay = MINIMAL.replace("triplanar_gray", "triplanar_overlay");
        assert!(RenderRecipe::parse(&overlay).is_err());
    }

    #[test]
    fn toml_roundtrip() {
        let r = RenderRecipe::parse(&format!("{MINIMAL}panel_labels = [\"a\", \"b\"]\napplies_to = [\"dwi\"]\n")).unwrap();
        assert_eq!(RenderRecipe::parse(&r.to_toml()).unwrap(), r);
    }

    #[test]
    fn preflight_table() {
        let text = format!("{MINIMAL}[preflight]\nchecks = [\"fa_map\"]\nfa_map = \"{{stem}}_fa.nii.gz\"\n");
        let r = RenderRecipe::parse(&text).unwrap();
        assert_eq!(r.preflight.unwrap().fa_map.as_deref(), Some("{stem}_fa.nii.gz"));
    }

    #[test]
    fn placeholders() {
        let ctx = RenderContext {
            data_root: PathBuf::from("/data"),
            pipeline: "tensor".into(),
            entities: crate::dataset::parse_entities("sub-01_ses-2_dwi.nii.gz").unwrap(),
            image: "sub-01/ses-2/dwi/sub-01_ses-2_dwi.nii.gz".into(),
            sub_output: Some("AF_left".into()),
        };
        assert_eq!(
            ctx.substitute("derivatives/{pipeline}/sub-{sub}/{ses_dir}{stem}.nii"),
            "derivatives/tensor/sub-01/ses-2/sub-01_ses-2_dwi.nii"
        );
        assert_eq!(ctx.substitute("bundles/{sub_output}.nii.gz"), "bundles/AF_left.nii.gz");
    }
}
