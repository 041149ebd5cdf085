//! Dense matrix files.
//!
//! Binary layout (little-endian): the 4 bytes `PADM`, `u32` rows, `u32`
//! cols, then `rows * cols` `f64` values in row-major order. Files without
//! the magic are read as CSV, one matrix row per line.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PADM";
const HEADER_LEN: usize = 12;

pub fn encode_matrix(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u32).to_le_bytes());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
    out
}

pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<DMatrix<f64>> {
    let bad = |msg: &str| Error::MatrixFormat {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(bad("missing PADM header"));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| bad("dimensions overflow"))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected {
        return Err(bad(&format!(
            "expected {expected} data bytes for {rows}x{cols}, found {}",
            body.len()
        )));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

fn parse_csv(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.display().to_string(),
                    line: i + 1,
                    msg: format!("bad number `{}`", t.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: i + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        decode_matrix(&bytes, path)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::MatrixFormat {
            path: path.to_path_buf(),
            msg: "neither PADM binary nor UTF-8 CSV".into(),
        })?;
        parse_csv(&text, path)
    }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_matrix(m))?;
    Ok(())
}

/// Reads a single-column matrix as a vector.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.ncols() != 1 {
        return Err(Error::MatrixFormat {
            path: path.to_path_buf(),
            msg: format!("expected one column, found {}", m.ncols()),
        });
    }
    Ok(m.as_slice().to_vec())
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    write_matrix(path, &DMatrix::from_column_slice(v.len(), 1, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = encode_matrix(&m);
        assert_eq!(&b[..4], b"PADM");
        assert_eq!(&b[4..8], &[2, 0, 0, 0]);
        assert_eq!(&b[8..12], &[3, 0, 0, 0]);
        assert_eq!(&b[12..20], &1.0f64.to_le_bytes());
        assert_eq!(&b[20..28], &2.0f64.to_le_bytes());
        assert_eq!(b.len(), 12 + 6 * 8);
    }

    #[test]
    fn truncated_body_rejected() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let mut b = encode_matrix(&m);
        b.pop();
        assert!(decode_matrix(&b, Path::new("x")).is_err());
    }

    #[test]
    fn csv_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "1, 2\n3,4\n").unwrap();
        assert_eq!(
            read_matrix(&p).unwrap(),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])
        );
        fs::write(&p, "1,2\n3\n").unwrap();
        assert!(matches!(read_matrix(&p), Err(Error::Parse { line: 2, .. })));
    }

    proptest! {
        #[test]
        fn binary_round_trip(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
            let mut rng = crate::problems::rng::SeededRng::new(seed);
            let m = DMatrix::from_fn(rows, cols, |_, _| rng.normal());
            let back = decode_matrix(&encode_matrix(&m), Path::new("mem")).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
