use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::filter::{prefilter, CompanionRule, DwiCandidate, FilterDecision};
use super::{parse_entities, EntityMap, ScanError};
use crate::nifti::load_header;

/// One QC-able input found in the dataset. Paths are relative to the
/// dataset root, `/`-separated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub entities: EntityMap,
    /// BIDS datatype directory: `anat` or `dwi`.
    pub datatype: String,
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bval: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bvec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sidecar: Option<String>,
    pub volumes: usize,
    /// Filled in when the item is assigned to a pipeline.
    #[serde(default)]
    pub pipeline: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub companion_rule: Option<CompanionRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset: String,
    pub items: Vec<ManifestItem>,
    pub exclusions: Vec<Exclusion>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn is_nifti(name: &str) -> bool {
    name.ends_with(".nii") || name.ends_with(".nii.gz")
}

fn rel(root: &Path, p: &Path) -> String {
    p.strip_prefix(root)
        .unwrap_or(p)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// NIfTI files under `sub-*/[ses-*/]{anat,dwi}/`, sorted by path.
fn candidate_files(root: &Path) -> Vec<(PathBuf, String)> {
    let mut out = Vec::new();
    for entry in WalkDir::new(root)
        .min_depth(3)
        .max_depth(4)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
    {
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        if !is_nifti(&name) {
            continue;
        }
        let parts: Vec<String> = entry
            .path()
            .strip_prefix(root)
            .unwrap_or(entry.path())
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        let datatype = &parts[parts.len() - 2];
        let layout_ok = match parts.len() {
            3 => parts[0].starts_with("sub-"),
            4 => parts[0].starts_with("sub-") && parts[1].starts_with("ses-"),
            _ => false,
        };
        if layout_ok && (datatype == "anat" || datatype == "dwi") {
            out.push((entry.path().to_path_buf(), datatype.clone()));
        }
    }
    out
}

struct Probe {
    path: PathBuf,
    datatype: String,
    entities: EntityMap,
    volumes: usize,
    bval: Option<PathBuf>,
    bvec: Option<PathBuf>,
    sidecar: Option<PathBuf>,
    phase_encoding: Option<String>,
}

fn sibling(path: &Path, ext: &str) -> Option<PathBuf> {
    let name = path.file_name()?.to_str()?;
    let base = &name[..name.find('.').unwrap_or(name.len())];
    let p = path.with_file_name(format!("{base}{ext}"));
    p.is_file().then_some(p)
}

fn phase_encoding(json: &Path) -> Option<String> {
    let text = std::fs::read_to_string(json).ok()?;
    let value: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            log::warn!("{}: {e}", json.display());
            return None;
        }
    };
    value
        .get("PhaseEncodingDirection")
        .and_then(|v| v.as_str())
        .map(str::to_string)
}

fn probe(path: &Path, datatype: &str, dataset: &str) -> Result<Probe, String> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let mut entities = parse_entities(name).map_err(|e| format!("bad_filename: {e}"))?;
    entities.dataset = dataset.to_string();
    let header = load_header(path).map_err(|e| format!("unreadable: {e}"))?;
    let sidecar = sibling(path, ".json");
    Ok(Probe {
        path: path.to_path_buf(),
        datatype: datatype.to_string(),
        volumes: header.time_points(),
        bval: sibling(path, ".bval"),
        bvec: sibling(path, ".bvec"),
        phase_encoding: sidecar.as_deref().and_then(phase_encoding),
        sidecar,
        entities,
    })
}

type EntityKey = (
    String,
    Option<String>,
    Option<String>,
    Option<String>,
    std::collections::BTreeMap<String, String>,
    String,
);

fn entity_key(e: &EntityMap) -> EntityKey {
    (
        e.subject.clone(),
        e.session.clone(),
        e.acquisition.clone(),
        e.run.clone(),
        e.extra.clone(),
        e.suffix.clone(),
    )
}

/// Walks a BIDS tree and classifies every NIfTI file as a manifest item or
/// an exclusion. The dataset name is the root directory's name.
pub fn scan_dataset(root: &Path) -> Result<Manifest, ScanError> {
    if !root.is_dir() {
        return Err(ScanError::NotADirectory(root.to_path_buf()));
    }
    let dataset = root
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "dataset".into());

    let files = candidate_files(root);
    let probes: Vec<Result<Probe, (PathBuf, String)>> = files
        .par_iter()
        .map(|(p, dt)| probe(p, dt, &dataset).map_err(|r| (p.clone(), r)))
        .collect();

    let mut exclusions = Vec::new();
    let mut ok = Vec::new();
    for p in probes {
        match p {
            Ok(p) => ok.push(p),
            Err((path, reason)) => exclusions.push(Exclusion {
                path: rel(root, &path),
                reason,
            }),
        }
    }
    ok.sort_by(|a, b| {
        entity_key(&a.entities)
            .cmp(&entity_key(&b.entities))
            .then_with(|| a.path.cmp(&b.path))
    });

    let mut seen = BTreeSet::new();
    let mut unique = Vec::new();
    for p in ok {
        if seen.insert(entity_key(&p.entities)) {
            unique.push(p);
        } else {
            exclusions.push(Exclusion {
                path: rel(root, &p.path),
                reason: "duplicate_entities".into(),
            });
        }
    }

    let dwi: Vec<DwiCandidate> = unique
        .iter()
        .filter(|p| p.entities.suffix == "dwi")
        .map(|p| DwiCandidate {
            entities: p.entities.clone(),
            volumes: p.volumes,
            has_bval: p.bval.is_some(),
            has_bvec: p.bvec.is_some(),
            phase_encoding: p.phase_encoding.clone(),
        })
        .collect();

    let mut items = Vec::new();
    for p in unique {
        let mut item = ManifestItem {
            datatype: p.datatype.clone(),
            image: rel(root, &p.path),
            bval: p.bval.as_deref().map(|b| rel(root, b)),
            bvec: p.bvec.as_deref().map(|b| rel(root, b)),
            sidecar: p.sidecar.as_deref().map(|b| rel(root, b)),
            volumes: p.volumes,
            pipeline: String::new(),
            flags: Vec::new(),
            companion_rule: None,
            entities: p.entities,
        };
        if item.entities.suffix == "dwi" {
            let cand = DwiCandidate {
                entities: item.entities.clone(),
                volumes: item.volumes,
                has_bval: item.bval.is_some(),
                has_bvec: item.bvec.is_some(),
                phase_encoding: p.phase_encoding.clone(),
            };
            match prefilter(&cand, &dwi) {
                FilterDecision::Keep(rule) => item.companion_rule = rule,
                FilterDecision::Flag(reason) => item.flags.push(reason),
                FilterDecision::Exclude(reason) => {
                    exclusions.push(Exclusion {
                        path: item.image,
                        reason,
                    });
                    continue;
                }
            }
        }
        items.push(item);
    }
    exclusions.sort_by(|a, b| a.path.cmp(&b.path).then_with(|| a.reason.cmp(&b.reason)));

    Ok(Manifest {
        dataset,
        items,
        exclusions,
    })
}
