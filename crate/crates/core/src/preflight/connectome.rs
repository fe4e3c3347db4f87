use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CheckResult, PreflightError};
use crate::stats::median;

pub const CHECK_NAME: &str = "connectome";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Number of streamlines.
    Nos,
    MeanFa,
    Other,
}

impl FromStr for Weighting {
    type Err = PreflightError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nos" => Ok(Weighting::Nos),
            "mean_fa" => Ok(Weighting::MeanFa),
            "other" => Ok(Weighting::Other),
            other => Err(PreflightError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connectome {
    pub matrix: Vec<Vec<f64>>,
    pub weighting: Weighting,
    pub labels: Option<Vec<String>>,
}

impl Connectome {
    pub fn new(matrix: Vec<Vec<f64>>, weighting: Weighting) -> Self {
        Connectome {
            matrix,
            weighting,
            labels: None,
        }
    }

    pub fn region_count(&self) -> usize {
        self.matrix.len()
    }

    /// Comma- or whitespace-delimited square matrix. A first row that does
    /// not parse as numbers is taken as region labels.
    pub fn parse(text: &str, weighting: Weighting) -> Result<Self, PreflightError> {
        let split = |line: &str| -> Vec<String> {
            line.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect()
        };
        let mut lines = text.lines().map(split).filter(|r| !r.is_empty()).peekable();
        let mut labels = None;
        if let Some(first) = lines.peek() {
            if first.iter().any(|t| t.parse::<f64>().is_err()) {
                labels = lines.next();
            }
        }
        let mut matrix = Vec::new();
        for (n, row) in lines.enumerate() {
            let vals = row
                .iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| PreflightError::Parse(format!("connectome row {}: {t:?}", n + 1)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            matrix.push(vals);
        }
        Ok(Connectome {
            matrix,
            weighting,
            labels,
        })
    }

    pub fn load(path: &Path, weighting: Weighting) -> Result<Self, PreflightError> {
        let text = std::fs::read_to_string(path).map_err(|e| PreflightError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text, weighting)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectomeConfig {
    /// Largest allowed `max|M − Mᵀ| / max|M|`.
    pub symmetry_tolerance: f64,
    /// NOS: median diagonal must be at least this multiple of the median
    /// positive off-diagonal entry.
    pub diagonal_factor: f64,
    /// Mean FA: largest allowed coefficient of variation of positive entries.
    pub max_cov: f64,
}

impl Default for ConnectomeConfig {
    fn default() -> Self {
        ConnectomeConfig {
            symmetry_tolerance: 1e-6,
            diagonal_factor: 2.0,
            max_cov: 1.0,
        }
    }
}

pub fn check_connectome(c: &Connectome, cfg: &ConnectomeConfig) -> Result<CheckResult, PreflightError> {
    let m = &c.matrix;
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(PreflightError::NotSquare(format!(
            "{n} rows, row lengths {:?}",
            m.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    if n < 2 {
        return Err(PreflightError::NotSquare(format!("{n}×{n} is too small")));
    }

    let mut max_abs = 0.0f64;
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            max_abs = max_abs.max(m[i][j].abs());
            max_asym = max_asym.max((m[i][j] - m[j][i]).abs());
        }
    }
    let asym = if max_abs > 0.0 { max_asym / max_abs } else { 0.0 };
    if !(asym <= cfg.symmetry_tolerance) {
        return Ok(CheckResult::flag(
            CHECK_NAME,
            asym,
            cfg.symmetry_tolerance,
            format!("asymmetric: max|M-M^T|/max|M| = {asym:e}"),
        ));
    }

    match c.weighting {
        Weighting::Nos => {
            if m.iter().flatten().any(|&v| v < 0.0) {
                return Ok(CheckResult::flag(CHECK_NAME, f64::NAN, 0.0, "negative streamline counts"));
            }
            let diag: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
            let off: Vec<f64> = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[i][j])
                .filter(|&v| v > 0.0)
                .collect();
            let diag_med = median(&diag).unwrap_or(0.0);
            let off_med = median(&off).unwrap_or(0.0);
            let ratio = if off_med > 0.0 { diag_med / off_med } else { f64::INFINITY };
            let detail = format!("median diagonal {diag_med} vs median off-diagonal {off_med}");
            Ok(if diag_med >= cfg.diagonal_factor * off_med {
                CheckResult::pass(CHECK_NAME, ratio, cfg.diagonal_factor, detail)
            } else {
                CheckResult::flag(CHECK_NAME, ratio, cfg.diagonal_factor, format!("weak diagonal: {detail}"))
            })
        }
        Weighting::MeanFa => {
            let pos: Vec<f64> = m.iter().flatten().copied().filter(|&v| v > 0.0).collect();
            if pos.is_empty() {
                return Ok(CheckResult::flag(CHECK_NAME, f64::NAN, cfg.max_cov, "no positive entries"));
            }
            let mean = pos.iter().sum::<f64>() / pos.len() as f64;
            let var = pos.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / pos.len() as f64;
            let cov = var.sqrt() / mean;
            let detail = format!("coefficient of variation {cov:.4} over {} entries", pos.len());
            Ok(if cov > cfg.max_cov {
                CheckResult::flag(CHECK_NAME, cov, cfg.max_cov, format!("inhomogeneous: {detail}"))
            } else {
                CheckResult::pass(CHECK_NAME, cov, cfg.max_cov, detail)
            })
        }
        Weighting::Other => Ok(CheckResult::pass(
            CHECK_NAME,
            asym,
            cfg.symmetry_tolerance,
            "symmetric",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preflight::CheckStatus;

    fn check(m: Vec<Vec<f64>>, w: Weighting) -> CheckResult {
        check_connectome(&Connectome::new(m, w), &ConnectomeConfig::default()).unwrap()
    }

    #[test]
    fn strong_diagonal_passes() {
        let r = check(vec![vec![10.0, 1.0], vec![1.0, 10.0]], Weighting::Nos);
        assert_eq!(r.status, CheckStatus::Pass);
        assert_eq!(r.metric, 10.0);
    }

    #[test]
    fn asymmetric_flags() {
        let r = check(vec![vec![0.0, 1.0], vec![2.0, 0.0]], Weighting::Other);
        assert_eq!(r.status, CheckStatus::Flag);
        assert!(r.detail.contains("asymmetric"));
    }

    #[test]
    fn weak_diagonal_flags() {
        let r = check(vec![vec![1.0, 5.0], vec![5.0, 1.0]], Weighting::Nos);
        assert_eq!(r.status, CheckStatus::Flag);
        assert!((r.metric - 0.2).abs() < 1e-12);
    }

    #[test]
    fn mean_fa_homogeneity() {
        let r = check(vec![vec![0.0, 0.5, 0.45], vec![0.5, 0.0, 0.55], vec![0.45, 0.55, 0.0]], Weighting::MeanFa);
        assert_eq!(r.status, CheckStatus::Pass);
        let mut m = vec![vec![0.01; 6]; 6];
        m[0][1] = 50.0;
        m[1][0] = 50.0;
        let r = check(m, Weighting::MeanFa);
        assert_eq!(r.status, CheckStatus::Flag);
    }

    #[test]
    fn shape_errors() {
        let c = Connectome::new(vec![vec![1.0, 2.0], vec![1.0]], Weighting::Nos);
        assert!(matches!(
            check_connectome(&c, &ConnectomeConfig::default()),
            Err(PreflightError::NotSquare(_))
        ));
        let c = Connectome::new(vec![vec![1.0]], Weighting::Nos);
        assert!(check_connectome(&c, &ConnectomeConfig::default()).is_err());
    }

    #[test]
    fn parse_with_header() {
        let c = Connectome::parse("L1,R1\n10,1\n1,10\n", Weighting::Nos).unwrap();
        assert_eq!(c.labels, Some(vec!["L1".into(), "R1".into()]));
        assert_eq!(c.matrix, vec![vec![10.0, 1.0], vec![1.0, 10.0]]);
        let c = Connectome::parse("1 2\n2 1\n", Weighting::Other).unwrap();
        assert_eq!(c.region_count(), 2);
        assert!(c.labels.is_none());
    }
}
