use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ScanError;

/// BIDS filename entities.
///
/// `sub`, `ses`, `acq` and `run` have dedicated slots; any other `key-value`
/// token (`dir-`, `task-`, ...) is kept in `extra` so that distinct files
/// never collapse to the same identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub struct EntityMap {
    #[serde(default)]
    pub dataset: String,
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acquisition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
    pub suffix: String,
    #[serde(default)]
    pub extension: String,
}

impl EntityMap {
    /// Canonical entity string without extension, e.g.
    /// `sub-01_ses-02_acq-b1000_run-1_dwi`.
    pub fn stem(&self) -> String {
        let mut parts = vec![format!("sub-{}", self.subject)];
        if let Some(s) = &self.session {
            parts.push(format!("ses-{s}"));
        }
        if let Some(a) = &self.acquisition {
            parts.push(format!("acq-{a}"));
        }
        if let Some(r) = &self.run {
            parts.push(format!("run-{r}"));
        }
        for (k, v) in &self.extra {
            parts.push(format!("{k}-{v}"));
        }
        parts.push(self.suffix.clone());
        parts.join("_")
    }

    pub fn to_filename(&self) -> String {
        format!("{}{}", self.stem(), self.extension)
    }

    /// Looks up an entity by its BIDS key.
    pub fn get(&self, key: &str) -> Option<&str> {
        match key {
            "sub" => Some(self.subject.as_str()),
            "ses" => self.session.as_deref(),
            "acq" => self.acquisition.as_deref(),
            "run" => self.run.as_deref(),
            _ => self.extra.get(key).map(String::as_str),
        }
    }

    /// Same subject and session.
    pub fn same_session(&self, other: &EntityMap) -> bool {
        self.dataset == other.dataset
            && self.subject == other.subject
            && self.session == other.session
    }
}

impl fmt::Display for EntityMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.stem())
    }
}

fn is_label(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric())
}

/// Parses a BIDS base name such as `sub-01_ses-02_dwi.nii.gz`.
pub fn parse_entities(filename: &str) -> Result<EntityMap, ScanError> {
    if filename.contains('/') || filename.contains('\\') {
        return Err(ScanError::BadFilename(format!("{filename}: not a base name")));
    }
    let (body, extension) = match filename.find('.') {
        Some(i) => (&filename[..i], &filename[i..]),
        None => (filename, ""),
    };
    let tokens: Vec<&str> = body.split('_').collect();
    let (suffix, entities) = tokens.split_last().expect("split yields at least one token");
    if suffix.contains('-') || !is_label(suffix) {
        return Err(ScanError::NoSuffix(filename.to_string()));
    }

    let mut map = EntityMap {
        suffix: suffix.to_string(),
        extension: extension.to_string(),
        ..Default::default()
    };
    let mut seen = std::collections::BTreeSet::new();
    for tok in entities {
        let (key, value) = tok
            .split_once('-')
            .ok_or_else(|| ScanError::BadFilename(format!("{filename}: token {tok:?} is not key-value")))?;
        if !is_label(key) || !is_label(value) {
            return Err(ScanError::BadFilename(format!(
                "{filename}: token {tok:?} is not key-value"
            )));
        }
        if !seen.insert(key) {
            return Err(ScanError::DuplicateEntity(key.to_string()));
        }
        let value = value.to_string();
        match key {
            "sub" => map.subject = value,
            "ses" => map.session = Some(value),
            "acq" => map.acquisition = Some(value),
            "run" => map.run = Some(value),
            _ => {
                map.extra.insert(key.to_string(), value);
            }
        }
    }
    if map.subject.is_empty() {
        return Err(ScanError::MissingSubject(filename.to_string()));
    }
    Ok(map)
}
