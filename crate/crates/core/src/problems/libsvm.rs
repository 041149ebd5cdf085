//! Reader for the LIBSVM sparse text format:
//! `<label> <index>:<value> <index>:<value> ...` with 1-based indices.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use nalgebra::DMatrix;

use super::logistic::{prepare, Dataset};
use crate::error::{Error, Result};

/// Parses LIBSVM text. Positive labels map to +1, all others to -1.
/// The feature dimension is the largest index that appears.
pub fn parse_libsvm<R: BufRead>(reader: R, source: &str) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;
    let err = |line: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        msg,
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(lineno, format!("bad label `{label_tok}`")))?;
        let mut row = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(lineno, format!("expected index:value, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(lineno, format!("bad feature index `{idx}`")))?;
            if idx == 0 {
                return Err(err(lineno, "feature indices are 1-based".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| err(lineno, format!("bad feature value `{val}`")))?;
            if !val.is_finite() {
                return Err(err(lineno, format!("non-finite feature value `{val}`")));
            }
            dim = dim.max(idx);
            row.push((idx - 1, val));
        }
        labels.push(if label > 0.0 { 1.0 } else { -1.0 });
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(err(0, "no samples".into()));
    }
    let mut features = DMatrix::zeros(rows.len(), dim);
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            features[(r, c)] = v;
        }
    }
    Dataset::new(features, labels)
}

/// Loads a LIBSVM file and returns `(train, test)`; see [`prepare`].
pub fn load_libsvm(
    path: &Path,
    normalize: bool,
    split_seed: Option<u64>,
) -> Result<(Dataset, Dataset)> {
    let file = File::open(path)?;
    let data = parse_libsvm(BufReader::new(file), &path.display().to_string())?;
    Ok(prepare(&data, normalize, split_seed))
}
