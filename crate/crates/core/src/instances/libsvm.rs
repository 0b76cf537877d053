//! Reader for LIBSVM regression files: `label idx:val idx:val …` with
//! 1-based indices; absent indices are zeros.

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Dense design matrix and targets.
#[derive(Clone, Debug)]
pub struct Dataset<T> {
    pub features: Matrix<T>,
    pub targets: Vec<T>,
}

pub fn read_file<T: Real>(path: &Path) -> Result<Dataset<T>> {
    let file = std::fs::File::open(path)?;
    parse(std::io::BufReader::new(file))
}

pub fn parse<T: Real, R: BufRead>(reader: R) -> Result<Dataset<T>> {
    let mut targets = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut width = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = tokens.next().unwrap_or_default();
        let label: f64 =
            label.parse().map_err(|_| Error::Parse { line: line_no, message: format!("bad label `{label}`") })?;
        let mut entries = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse { line: line_no, message: format!("expected idx:val, got `{tok}`") })?;
            let idx: usize =
                idx.parse().map_err(|_| Error::Parse { line: line_no, message: format!("bad index `{idx}`") })?;
            if idx == 0 {
                return Err(Error::Parse { line: line_no, message: "indices are 1-based".into() });
            }
            let val: f64 =
                val.parse().map_err(|_| Error::Parse { line: line_no, message: format!("bad value `{val}`") })?;
            width = width.max(idx);
            entries.push((idx - 1, val));
        }
        targets.push(T::lit(label));
        rows.push(entries);
    }
    let mut features = Matrix::zeros(rows.len(), width);
    for (i, entries) in rows.iter().enumerate() {
        for &(j, v) in entries {
            features[(i, j)] = T::lit(v);
        }
    }
    Ok(Dataset { features, targets })
}
