//! Initial filtering of DWI candidates before any pipeline runs.

use serde::{Deserialize, Serialize};

use super::EntityMap;

/// Minimum volume count for a DWI to be kept on its own.
pub const MIN_DWI_VOLUMES: usize = 6;

/// What the scanner knows about one DWI file when deciding to keep it.
#[derive(Debug, Clone)]
pub struct DwiCandidate {
    pub entities: EntityMap,
    /// All volumes, b0 included (dim[4]).
    pub volumes: usize,
    pub has_bval: bool,
    pub has_bvec: bool,
    /// `PhaseEncodingDirection` from the JSON sidecar, e.g. `j-`.
    pub phase_encoding: Option<String>,
}

/// Which rule identified a short scan as a reverse phase-encoding companion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompanionRule {
    /// Opposite-polarity `PhaseEncodingDirection` in the JSON sidecars.
    Sidecar,
    /// `acq-`/`dir-` label heuristic (rpe/rev, or AP vs PA).
    EntityLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", content = "reason", rename_all = "snake_case")]
pub enum FilterDecision {
    Keep(Option<CompanionRule>),
    Exclude(String),
    Flag(String),
}

fn split_polarity(pe: &str) -> (&str, bool) {
    match pe.strip_suffix('-') {
        Some(axis) => (axis, true),
        None => (pe, false),
    }
}

fn opposite_polarity(a: &str, b: &str) -> bool {
    let (axis_a, neg_a) = split_polarity(a.trim());
    let (axis_b, neg_b) = split_polarity(b.trim());
    !axis_a.is_empty() && axis_a == axis_b && neg_a != neg_b
}

fn direction_label(e: &EntityMap) -> Option<&str> {
    e.get("dir").or(e.acquisition.as_deref())
}

fn is_reverse_label(label: &str) -> bool {
    let l = label.to_ascii_lowercase();
    l.contains("rpe") || l.contains("rev")
}

/// Polarity from a trailing `AP`/`PA` in a label.
fn ap_pa(label: &str) -> Option<&'static str> {
    let u = label.to_ascii_uppercase();
    if u.ends_with("PA") {
        Some("PA")
    } else if u.ends_with("AP") {
        Some("AP")
    } else {
        None
    }
}

fn companion_rule(short: &DwiCandidate, main: &DwiCandidate) -> Option<CompanionRule> {
    if let (Some(a), Some(b)) = (&short.phase_encoding, &main.phase_encoding) {
        return opposite_polarity(a, b).then_some(CompanionRule::Sidecar);
    }
    let label = direction_label(&short.entities)?;
    if is_reverse_label(label) {
        return Some(CompanionRule::EntityLabel);
    }
    let own = ap_pa(label)?;
    let other = direction_label(&main.entities).and_then(ap_pa)?;
    (own != other).then_some(CompanionRule::EntityLabel)
}

/// Applies the DWI filter rules to `item`, given the other DWI candidates of
/// the dataset (`context` may include `item` itself).
pub fn prefilter(item: &DwiCandidate, context: &[DwiCandidate]) -> FilterDecision {
    if item.volumes < MIN_DWI_VOLUMES {
        let rule = context
            .iter()
            .filter(|c| {
                c.volumes >= MIN_DWI_VOLUMES
                    && c.entities.same_session(&item.entities)
                    && c.entities != item.entities
            })
            .find_map(|main| companion_rule(item, main));
        match rule {
            Some(rule) => {
                if !(item.has_bval && item.has_bvec) {
                    return FilterDecision::Flag("missing_gradients".into());
                }
                return FilterDecision::Keep(Some(rule));
            }
            None => return FilterDecision::Exclude("too_few_volumes".into()),
        }
    }
    if !(item.has_bval && item.has_bvec) {
        return FilterDecision::Flag("missing_gradients".into());
    }
    FilterDecision::Keep(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_entities;

    fn cand(name: &str, volumes: usize, pe: Option<&str>, grads: (bool, bool)) -> DwiCandidate {
        DwiCandidate {
            entities: parse_entities(name).unwrap(),
            volumes,
            has_bval: grads.0,
            has_bvec: grads.1,
            phase_encoding: pe.map(str::to_string),
        }
    }

    #[test]
    fn orphan_short_scan_is_excluded() {
        let short = cand("sub-1_ses-1_acq-b0_dwi.nii.gz", 5, None, (true, true));
        assert_eq!(
            prefilter(&short, std::slice::from_ref(&short)),
            FilterDecision::Exclude("too_few_volumes".into())
        );
    }

    #[test]
    fn sidecar_companion_is_kept() {
        let main = cand("sub-1_ses-1_run-1_dwi.nii.gz", 96, Some("j"), (true, true));
        let short = cand("sub-1_ses-1_run-2_dwi.nii.gz", 5, Some("j-"), (true, true));
        let ctx = vec![main, short.clone()];
        assert_eq!(
            prefilter(&short, &ctx),
            FilterDecision::Keep(Some(CompanionRule::Sidecar))
        );
    }

    #[test]
    fn same_polarity_is_not_a_companion() {
        let main = cand("sub-1_ses-1_run-1_dwi.nii.gz", 96, Some("j"), (true, true));
        let short = cand("sub-1_ses-1_run-2_dwi.nii.gz", 5, Some("j"), (true, true));
        assert_eq!(
            prefilter(&short, &[main]),
            FilterDecision::Exclude("too_few_volumes".into())
        );
    }

    #[test]
    fn companion_must_share_session() {
        let main = cand("sub-1_ses-2_run-1_dwi.nii.gz", 96, Some("j"), (true, true));
        let short = cand("sub-1_ses-1_run-2_dwi.nii.gz", 5, Some("j-"), (true, true));
        assert_eq!(
            prefilter(&short, &[main]),
            FilterDecision::Exclude("too_few_volumes".into())
        );
    }

    #[test]
    fn label_heuristics() {
        let main = cand("sub-1_dir-AP_dwi.nii.gz", 64, None, (true, true));
        let pa = cand("sub-1_dir-PA_dwi.nii.gz", 2, None, (true, true));
        assert_eq!(
            prefilter(&pa, std::slice::from_ref(&main)),
            FilterDecision::Keep(Some(CompanionRule::EntityLabel))
        );
        let rpe = cand("sub-1_acq-rpe_dwi.nii.gz", 2, None, (true, true));
        assert_eq!(
            prefilter(&rpe, &[main]),
            FilterDecision::Keep(Some(CompanionRule::EntityLabel))
        );
    }

    #[test]
    fn missing_bvec_is_flagged() {
        let main = cand("sub-1_dwi.nii.gz", 96, None, (true, false));
        assert_eq!(
            prefilter(&main, &[]),
            FilterDecision::Flag("missing_gradients".into())
        );
    }
}
