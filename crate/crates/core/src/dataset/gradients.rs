use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ScanError;

/// b-values at or below this are treated as b0 volumes.
pub const B0_THRESHOLD: f64 = 50.0;

/// Per-volume diffusion weighting: b-value (s/mm²) and gradient direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientTable {
    pub bvals: Vec<f64>,
    pub bvecs: Vec<[f64; 3]>,
}

impl GradientTable {
    pub fn new(bvals: Vec<f64>, bvecs: Vec<[f64; 3]>) -> Result<Self, ScanError> {
        if bvals.len() != bvecs.len() {
            return Err(ScanError::CountMismatch {
                bvals: bvals.len(),
                bvecs: bvecs.len(),
            });
        }
        Ok(GradientTable { bvals, bvecs })
    }

    pub fn len(&self) -> usize {
        self.bvals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bvals.is_empty()
    }
}

fn parse_rows(text: &str, path: &Path) -> Result<Vec<Vec<f64>>, ScanError> {
    let mut rows = Vec::new();
    for line in text.lines() {
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|_| ScanError::UnparseableNumber {
                    path: path.to_path_buf(),
                    token: t.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if !row.is_empty() {
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(ScanError::EmptyFile(path.to_path_buf()));
    }
    Ok(rows)
}

fn read(path: &Path) -> Result<String, ScanError> {
    std::fs::read_to_string(path).map_err(|source| ScanError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_bvals(text: &str, path: &Path) -> Result<Vec<f64>, ScanError> {
    Ok(parse_rows(text, path)?.into_iter().flatten().collect())
}

/// Accepts 3 rows of N columns (FSL layout) or N rows of 3 columns. A 3×3
/// table is read as 3 rows.
pub fn parse_bvecs(text: &str, path: &Path) -> Result<Vec<[f64; 3]>, ScanError> {
    let rows = parse_rows(text, path)?;
    let bad_shape = || ScanError::BadShape(path.to_path_buf());
    if rows.len() == 3 && rows.iter().all(|r| r.len() == rows[0].len()) {
        let n = rows[0].len();
        return Ok((0..n).map(|i| [rows[0][i], rows[1][i], rows[2][i]]).collect());
    }
    if rows.iter().all(|r| r.len() == 3) {
        return Ok(rows.into_iter().map(|r| [r[0], r[1], r[2]]).collect());
    }
    Err(bad_shape())
}

pub fn load_gradients(bval_path: &Path, bvec_path: &Path) -> Result<GradientTable, ScanError> {
    let bvals = parse_bvals(&read(bval_path)?, bval_path)?;
    let bvecs = parse_bvecs(&read(bvec_path)?, bvec_path)?;
    GradientTable::new(bvals, bvecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn three_by_three_is_rows() {
        let d = tempfile::tempdir().unwrap();
        let bval = write(d.path(), "a.bval", "0 1000 1000\n");
        let bvec = write(d.path(), "a.bvec", "0 1 0\n0 0 1\n0 0 0\n");
        let g = load_gradients(&bval, &bvec).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.bvecs[0], [0.0, 0.0, 0.0]);
        assert_eq!(g.bvecs[1], [1.0, 0.0, 0.0]);
        assert_eq!(g.bvecs[2], [0.0, 1.0, 0.0]);
        assert_eq!(g.bvals[0], 0.0);
    }

    #[test]
    fn column_layout() {
        let d = tempfile::tempdir().unwrap();
        let bval = write(d.path(), "a.bval", "0\n1000\n1000\n1000\n");
        let bvec = write(d.path(), "a.bvec", "0 0 0\n1 0 0\n0 1 0\n0.6 0.8 0\n");
        let g = load_gradients(&bval, &bvec).unwrap();
        assert_eq!(g.bvecs[3], [0.6, 0.8, 0.0]);
        let n = g.bvecs[3].iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn count_mismatch() {
        let d = tempfile::tempdir().unwrap();
        let bval = write(d.path(), "a.bval", "0 1000 1000 1000");
        let bvec = write(d.path(), "a.bvec", "0 1 0\n0 0 1\n0 0 0\n");
        assert!(matches!(
            load_gradients(&bval, &bvec),
            Err(ScanError::CountMismatch { bvals: 4, bvecs: 3 })
        ));
    }

    #[test]
    fn bad_tokens_and_empty() {
        let d = tempfile::tempdir().unwrap();
        let bval = write(d.path(), "a.bval", "0 abc");
        let empty = write(d.path(), "b.bvec", "\n\n");
        assert!(matches!(
            load_gradients(&bval, &empty),
            Err(ScanError::UnparseableNumber { .. })
        ));
        let ok = write(d.path(), "c.bval", "0");
        assert!(matches!(
            load_gradients(&ok, &empty),
            Err(ScanError::EmptyFile(_))
        ));
    }
}
