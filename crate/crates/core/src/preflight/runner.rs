use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::connectome::{check_connectome, Connectome, ConnectomeConfig, Weighting};
use super::decay::{check_signal_decay, DecayConfig};
use super::mad::mad_outliers;
use super::ranges::{check_bvec_norms, check_scalar_range, RangeInput, RangeKind};
use super::{CheckResult, CheckStatus, PreflightError};
use crate::dataset::{load_gradients, GradientTable, ManifestItem};
use crate::render::RenderContext;
use crate::nifti::{load_volume, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    SignalDecay,
    BvecNorms,
    FaMap,
    NoddiMap,
    CorticalThicknessMean,
    BundleMeanFa,
    Connectome,
}

impl CheckKind {
    pub const ALL: [CheckKind; 7] = [
        CheckKind::SignalDecay,
        CheckKind::BvecNorms,
        CheckKind::FaMap,
        CheckKind::NoddiMap,
        CheckKind::CorticalThicknessMean,
        CheckKind::BundleMeanFa,
        CheckKind::Connectome,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::SignalDecay => super::decay::CHECK_NAME,
            CheckKind::BvecNorms => "bvec_norms",
            CheckKind::FaMap => RangeKind::FaMap.name(),
            CheckKind::NoddiMap => RangeKind::NoddiMap.name(),
            CheckKind::CorticalThicknessMean => RangeKind::CorticalThicknessMean.name(),
            CheckKind::BundleMeanFa => RangeKind::BundleMeanFa.name(),
            CheckKind::Connectome => super::connectome::CHECK_NAME,
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = PreflightError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| PreflightError::UnknownKind(s.to_string()))
    }
}

/// A scalar supplied either directly, as a map to average, or as a text
/// file holding one number.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarSource {
    Value(f64),
    Map(PathBuf),
    Text(PathBuf),
}

impl ScalarSource {
    /// NIfTI paths are maps; anything else is read as a number.
    pub fn from_path(path: PathBuf) -> Self {
        let name = path.to_string_lossy();
        if name.ends_with(".nii") || name.ends_with(".nii.gz") {
            ScalarSource::Map(path)
        } else {
            ScalarSource::Text(path)
        }
    }
}

/// Inputs for one QC item. Absent inputs make the matching checks
/// not applicable.
#[derive(Debug, Clone, Default)]
pub struct PreflightItem {
    pub item_id: String,
    pub dwi: Option<PathBuf>,
    pub bval: Option<PathBuf>,
    pub bvec: Option<PathBuf>,
    pub fa_map: Option<PathBuf>,
    pub noddi_maps: Vec<PathBuf>,
    pub connectome: Option<(PathBuf, Weighting)>,
    pub cortical_thickness: Option<ScalarSource>,
    pub bundle_fa: Option<ScalarSource>,
}

/// The `[preflight]` table of a pipeline recipe. Patterns use the same
/// placeholders as render patterns; a pattern matching nothing leaves that
/// input absent. DWI inputs come from the manifest item itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreflightSpec {
    /// Checks to run; all when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fa_map: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub noddi_maps: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connectome: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connectome_weighting: Option<Weighting>,
    /// A thickness map or a text file holding the mean, mm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cortical_thickness: Option<String>,
    /// A bundle FA map or a text file holding the mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle_fa: Option<String>,
}

impl PreflightSpec {
    pub fn checks(&self) -> Vec<CheckKind> {
        self.checks.clone().unwrap_or_else(|| CheckKind::ALL.to_vec())
    }

    pub fn item(&self, ctx: &RenderContext, manifest: &ManifestItem, item_id: &str) -> PreflightItem {
        let find = |p: &Option<String>| p.as_ref().and_then(|p| ctx.resolve(p).ok()).map(|mut v| v.swap_remove(0));
        let data = |rel: &Option<String>| rel.as_ref().map(|r| ctx.data_root.join(r));
        let is_dwi = manifest.datatype == "dwi";
        PreflightItem {
            item_id: item_id.to_string(),
            dwi: is_dwi.then(|| ctx.data_root.join(&manifest.image)),
            bval: if is_dwi { data(&manifest.bval) } else { None },
            bvec: if is_dwi { data(&manifest.bvec) } else { None },
            fa_map: find(&self.fa_map),
            noddi_maps: self
                .noddi_maps
                .iter()
                .filter_map(|p| ctx.resolve(p).ok())
                .flatten()
                .collect(),
            connectome: find(&self.connectome).map(|p| (p, self.connectome_weighting.unwrap_or(Weighting::Other))),
            cortical_thickness: find(&self.cortical_thickness).map(ScalarSource::from_path),
            bundle_fa: find(&self.bundle_fa).map(ScalarSource::from_path),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PreflightConfig {
    pub decay: DecayConfig,
    pub connectome: ConnectomeConfig,
}

/// Loads each input at most once. A failed load is reported by the first
/// check that needs it and silently skipped by later ones, so one bad file
/// produces one flag.
#[derive(Default)]
struct Inputs {
    volumes: HashMap<PathBuf, Option<Volume>>,
    grads: Option<Option<GradientTable>>,
}

enum Loaded<T> {
    Ok(T),
    Failed(CheckResult),
    Reported,
}

impl Inputs {
    fn volume(&mut self, name: &str, path: &Path) -> Loaded<&Volume> {
        if !self.volumes.contains_key(path) {
            match load_volume(path) {
                Ok(v) => {
                    self.volumes.insert(path.to_path_buf(), Some(v));
                }
                Err(e) => {
                    self.volumes.insert(path.to_path_buf(), None);
                    return Loaded::Failed(CheckResult::flag(name, f64::NAN, f64::NAN, e.to_string()));
                }
            }
        }
        match self.volumes.get(path) {
            Some(Some(v)) => Loaded::Ok(v),
            _ => Loaded::Reported,
        }
    }

    fn gradients(&mut self, name: &str, bval: &Path, bvec: &Path) -> Loaded<&GradientTable> {
        if self.grads.is_none() {
            match load_gradients(bval, bvec) {
                Ok(g) => self.grads = Some(Some(g)),
                Err(e) => {
                    self.grads = Some(None);
                    return Loaded::Failed(CheckResult::flag(name, f64::NAN, f64::NAN, e.to_string()));
                }
            }
        }
        match &self.grads {
            Some(Some(g)) => Loaded::Ok(g),
            _ => Loaded::Reported,
        }
    }
}

fn scalar(
    inputs: &mut Inputs,
    src: &ScalarSource,
    kind: RangeKind,
) -> Option<CheckResult> {
    let name = kind.name();
    let res = match src {
        ScalarSource::Value(v) => check_scalar_range(RangeInput::Value(*v), kind),
        ScalarSource::Map(p) => match inputs.volume(name, p) {
            Loaded::Ok(v) => check_scalar_range(RangeInput::Map(v), kind),
            Loaded::Failed(r) => return Some(r),
            Loaded::Reported => return None,
        },
        ScalarSource::Text(p) => {
            let parsed = std::fs::read_to_string(p)
                .map_err(|e| e.to_string())
                .and_then(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")));
            match parsed {
                Ok(v) => check_scalar_range(RangeInput::Value(v), kind),
                Err(e) => return Some(CheckResult::flag(name, f64::NAN, f64::NAN, format!("{}: {e}", p.display()))),
            }
        }
    };
    Some(res.unwrap_or_else(|e| CheckResult::flag(name, f64::NAN, f64::NAN, e.to_string())))
}

/// Run the requested checks on one item. Never fails: input problems become
/// flags, absent inputs become not-applicable results.
pub fn run_preflight(item: &PreflightItem, checks: &[CheckKind], cfg: &PreflightConfig) -> Vec<CheckResult> {
    let mut inputs = Inputs::default();
    let mut out = Vec::new();
    let missing = |k: CheckKind, what: &str| CheckResult::not_applicable(k.name(), format!("no {what}"));
    for &kind in checks {
        let name = kind.name();
        let result = match kind {
            CheckKind::SignalDecay => match (&item.dwi, &item.bval, &item.bvec) {
                (Some(dwi), Some(bval), Some(bvec)) => {
                    let grads = match inputs.gradients(name, bval, bvec) {
                        Loaded::Ok(g) => g.clone(),
                        Loaded::Failed(r) => {
                            out.push(r);
                            continue;
                        }
                        Loaded::Reported => continue,
                    };
                    match inputs.volume(name, dwi) {
                        Loaded::Ok(v) => Some(match check_signal_decay(v, &grads, &cfg.decay) {
                            Ok((r, _)) => r,
                            Err(e) => CheckResult::flag(name, f64::NAN, f64::NAN, e.to_string()),
                        }),
                        Loaded::Failed(r) => Some(r),
                        Loaded::Reported => None,
                    }
                }
                _ => Some(missing(kind, "DWI with gradient table")),
            },
            CheckKind::BvecNorms => match (&item.bval, &item.bvec) {
                (Some(bval), Some(bvec)) => match inputs.gradients(name, bval, bvec) {
                    Loaded::Ok(g) => Some(check_bvec_norms(g)),
                    Loaded::Failed(r) => Some(r),
                    Loaded::Reported => None,
                },
                _ => Some(missing(kind, "gradient table")),
            },
            CheckKind::FaMap => match &item.fa_map {
                Some(p) => scalar(&mut inputs, &ScalarSource::Map(p.clone()), RangeKind::FaMap),
                None => Some(missing(kind, "FA map")),
            },
            CheckKind::NoddiMap => {
                if item.noddi_maps.is_empty() {
                    Some(missing(kind, "NODDI maps"))
                } else {
                    noddi(&mut inputs, &item.noddi_maps)
                }
            }
            CheckKind::CorticalThicknessMean => match &item.cortical_thickness {
                Some(src) => scalar(&mut inputs, src, RangeKind::CorticalThicknessMean),
                None => Some(missing(kind, "cortical thickness")),
            },
            CheckKind::BundleMeanFa => match &item.bundle_fa {
                Some(src) => scalar(&mut inputs, src, RangeKind::BundleMeanFa),
                None => Some(missing(kind, "bundle FA")),
            },
            CheckKind::Connectome => match &item.connectome {
                Some((p, w)) => Some(
                    Connectome::load(p, *w)
                        .and_then(|c| check_connectome(&c, &cfg.connectome))
                        .unwrap_or_else(|e| CheckResult::flag(name, f64::NAN, f64::NAN, e.to_string())),
                ),
                None => Some(missing(kind, "connectome")),
            },
        };
        out.extend(result);
    }
    out
}

/// All NODDI maps reduce to one result: the worst offending share.
fn noddi(inputs: &mut Inputs, maps: &[PathBuf]) -> Option<CheckResult> {
    let name = RangeKind::NoddiMap.name();
    let mut worst: Option<(CheckResult, &Path)> = None;
    for p in maps {
        let r = match scalar(inputs, &ScalarSource::Map(p.clone()), RangeKind::NoddiMap) {
            Some(r) => r,
            None => continue,
        };
        if r.is_flag() && r.metric.is_nan() {
            return Some(r);
        }
        let better = match &worst {
            None => true,
            Some((w, _)) => r.status == CheckStatus::Flag && w.status != CheckStatus::Flag || r.metric > w.metric,
        };
        if better {
            worst = Some((r, p));
        }
    }
    worst.map(|(mut r, p)| {
        let file = p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        r.detail = format!("{} map(s), worst {file}: {}", maps.len(), r.detail);
        r.check_name = name.to_string();
        r
    })
}

/// Batch supplement: items whose metric for one check is a MAD outlier
/// across the batch. Non-finite metrics are ignored.
pub fn batch_outliers<'a>(
    results: impl IntoIterator<Item = (&'a str, &'a CheckResult)>,
    check_name: &str,
    k: f64,
) -> Vec<String> {
    let (ids, vals): (Vec<&str>, Vec<f64>) = results
        .into_iter()
        .filter(|(_, r)| r.check_name == check_name && r.metric.is_finite())
        .map(|(id, r)| (id, r.metric))
        .unzip();
    match mad_outliers(&vals, k) {
        Ok(idx) => idx.into_iter().map(|i| ids[i].to_string()).collect(),
        Err(_) => Vec::new(),
    }
}
