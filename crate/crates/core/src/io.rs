//! Covariance file format shared with the CLI.
//!
//! UTF-8 text: a first line `# C=<int> L=<int>`, followed by `CL` lines of
//! `CL` space-separated decimal floats. Values are written with Rust's
//! shortest round-trip formatting, so a write/read cycle is lossless.
//! The reader validates symmetry to 1e-9 relative and symmetrizes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mat::{Mat, SymMat};

/// Dimensions parsed from a covariance file header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CovHeader {
    pub c: usize,
    pub l: usize,
}

pub fn write_covariance(path: &Path, c: usize, l: usize, m: &SymMat) -> Result<()> {
    let n = c * l;
    if m.dim() != n {
        return Err(Error::Dimension(format!(
            "matrix dimension {} does not match C*L = {}",
            m.dim(),
            n
        )));
    }
    let mut out = String::new();
    out.push_str(&format!("# C={c} L={l}\n"));
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_covariance(path: &Path) -> Result<(CovHeader, SymMat)> {
    let text = fs::read_to_string(path)?;
    parse_covariance(&text)
}

pub fn parse_covariance(text: &str) -> Result<(CovHeader, SymMat)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty covariance file".into()))?;
    let header = parse_header(header)?;
    let n = header.c * header.l;

    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {n} data rows, got {i}")))?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != n {
            return Err(Error::Parse(format!(
                "row {i}: expected {n} values, got {}",
                vals.len()
            )));
        }
        for (j, v) in vals.iter().enumerate() {
            m[(i, j)] = v
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {i} col {j}: {e}")))?;
        }
    }

    // Symmetry to 1e-9 relative before symmetrizing.
    let scale = m.max_abs().max(1e-300);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if d > 1e-9 * scale {
                return Err(Error::Parse(format!(
                    "asymmetry at ({i},{j}): |{} - {}| = {d:e} exceeds 1e-9 relative",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok((header, SymMat::new(m)?))
}

fn parse_header(line: &str) -> Result<CovHeader> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("header must start with '#'".into()))?
        .trim();
    let mut c = None;
    let mut l = None;
    for tok in body.split_whitespace() {
        if let Some(v) = tok.strip_prefix("C=") {
            c = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
        } else if let Some(v) = tok.strip_prefix("L=") {
            l = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
        }
    }
    match (c, l) {
        (Some(c), Some(l)) if c >= 1 && l >= 1 => Ok(CovHeader { c, l }),
        _ => Err(Error::Parse(format!("bad header line: {line:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_exact() {
        let m = SymMat::new(Mat::from_rows(&[
            &[1.0, 0.125, -3.5e-7],
            &[0.125, 2.0, 0.7071067811865476],
            &[-3.5e-7, 0.7071067811865476, 9.0],
        ]))
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.cov");
        write_covariance(&path, 3, 1, &m).unwrap();
        let (h, back) = read_covariance(&path).unwrap();
        assert_eq!(h, CovHeader { c: 3, l: 1 });
        assert_eq!(back.as_mat(), m.as_mat());
    }

    #[test]
    fn rejects_asymmetry() {
        let text = "# C=2 L=1\n1 2\n3 1\n";
        assert!(parse_covariance(text).is_err());
    }

    #[test]
    fn rejects_bad_header() {
        assert!(parse_covariance("C=2 L=1\n1 0\n0 1\n").is_err());
        assert!(parse_covariance("# C=0 L=1\n").is_err());
    }
}
