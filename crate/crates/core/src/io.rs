//! MatrixMarket coordinate files.
//!
//! Symmetric samples are written as `symmetric` with the lower triangle
//! stored; rectangular factors as `general`. Sample metadata travels in a
//! `% edgelab kind=... scale=... seed=...` comment line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::ensembles::{EnsembleKind, EnsembleSample, Triplet};
use crate::error::{EdgeError, Result};

const META_PREFIX: &str = "% edgelab";

fn parse_err(line: usize, msg: impl std::fmt::Display) -> EdgeError {
    EdgeError::Parse(format!("line {line}: {msg}"))
}

fn kind_name(kind: EnsembleKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| "custom".into())
}

fn kind_from_name(name: &str) -> Option<EnsembleKind> {
    serde_json::from_value(serde_json::Value::String(name.to_owned())).ok()
}

pub fn write_matrix_market<W: Write>(sample: &EnsembleSample, mut w: W) -> Result<()> {
    let symmetric = sample.is_symmetric();
    writeln!(
        w,
        "%%MatrixMarket matrix coordinate real {}",
        if symmetric { "symmetric" } else { "general" }
    )?;
    writeln!(
        w,
        "{META_PREFIX} kind={} scale={} seed={}",
        kind_name(sample.kind),
        sample.scale,
        sample.seed
    )?;
    writeln!(w, "{} {} {}", sample.rows, sample.cols, sample.entries.len())?;
    for t in &sample.entries {
        let (r, c) = if symmetric {
            (t.row.max(t.col), t.row.min(t.col))
        } else {
            (t.row, t.col)
        };
        writeln!(w, "{} {} {}", r + 1, c + 1, t.value)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(r: R) -> Result<EnsembleSample> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| EdgeError::Parse("empty file".into()))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported header {header:?}")));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(parse_err(1, format!("unsupported field {other:?}"))),
    };
    let symmetric = match tokens[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(1, format!("unsupported symmetry {other:?}"))),
    };

    let mut meta_kind = None;
    let mut scale = 1.0;
    let mut seed = 0u64;
    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix(META_PREFIX) {
            for kv in rest.split_whitespace() {
                match kv.split_once('=') {
                    Some(("kind", v)) => meta_kind = kind_from_name(v),
                    Some(("scale", v)) => scale = v.parse().map_err(|e| parse_err(lineno, e))?,
                    Some(("seed", v)) => seed = v.parse().map_err(|e| parse_err(lineno, e))?,
                    _ => {}
                }
            }
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let Some((rows, cols, _)) = size else {
            if fields.len() != 3 {
                return Err(parse_err(lineno, "expected `rows cols nnz`"));
            }
            let p = |s: &str| s.parse::<usize>().map_err(|e| parse_err(lineno, e));
            let dims = (p(fields[0])?, p(fields[1])?, p(fields[2])?);
            if symmetric && dims.0 != dims.1 {
                return Err(parse_err(lineno, "symmetric matrix must be square"));
            }
            size = Some(dims);
            continue;
        };
        let want = if pattern { 2 } else { 3 };
        if fields.len() != want {
            return Err(parse_err(lineno, format!("expected {want} fields")));
        }
        let i: usize = fields[0].parse().map_err(|e| parse_err(lineno, e))?;
        let j: usize = fields[1].parse().map_err(|e| parse_err(lineno, e))?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(parse_err(lineno, format!("index ({i}, {j}) outside {rows}x{cols}")));
        }
        let v: f64 = if pattern {
            1.0
        } else {
            fields[2].parse().map_err(|e| parse_err(lineno, e))?
        };
        if !v.is_finite() {
            return Err(parse_err(lineno, "non-finite value"));
        }
        entries.push(Triplet::new(i - 1, j - 1, v));
    }
    let (rows, cols, nnz) = size.ok_or_else(|| EdgeError::Parse("missing size line".into()))?;
    if entries.len() != nnz {
        return Err(EdgeError::Parse(format!(
            "expected {nnz} entries, found {}",
            entries.len()
        )));
    }

    let folded = symmetric || (rows == cols && is_symmetric_general(&entries));
    let mut seen = HashMap::with_capacity(entries.len());
    let mut stored = Vec::with_capacity(entries.len());
    for t in entries {
        let key = if folded {
            (t.row.min(t.col), t.row.max(t.col))
        } else {
            (t.row, t.col)
        };
        if !symmetric && folded && t.row > t.col {
            continue;
        }
        if seen.insert(key, ()).is_some() {
            return Err(EdgeError::DuplicateSite(key.0, key.1));
        }
        stored.push(Triplet::new(key.0, key.1, t.value));
    }
    let kind = match meta_kind {
        Some(k) if k.is_symmetric() == folded => k,
        _ if folded => EnsembleKind::Custom,
        _ => EnsembleKind::CovarianceFactor,
    };
    Ok(EnsembleSample {
        rows,
        cols,
        entries: stored,
        kind,
        scale,
        seed,
    })
}

/// A `general` file whose entries mirror exactly across the diagonal.
fn is_symmetric_general(entries: &[Triplet]) -> bool {
    let map: HashMap<(usize, usize), f64> = entries.iter().map(|t| ((t.row, t.col), t.value)).collect();
    entries.iter().all(|t| map.get(&(t.col, t.row)) == Some(&t.value))
}

pub fn save_matrix_market(sample: &EnsembleSample, path: &Path) -> Result<()> {
    write_matrix_market(sample, BufWriter::new(File::create(path)?))
}

pub fn load_matrix_market(path: &Path) -> Result<EnsembleSample> {
    let f = File::open(path).map_err(|e| EdgeError::Config(format!("cannot open {}: {e}", path.display())))?;
    read_matrix_market(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_covariance_factor, sample_sparse_wigner};
    use crate::tail_laws::TailLaw;

    fn round_trip(s: &EnsembleSample) -> EnsembleSample {
        let mut buf = Vec::new();
        write_matrix_market(s, &mut buf).unwrap();
        read_matrix_market(buf.as_slice()).unwrap()
    }

    #[test]
    fn symmetric_round_trip_is_exact() {
        let law = TailLaw::with_default_crossover(2.0, 4.0).unwrap();
        let s = sample_sparse_wigner(60, 10.0, &law, 3).unwrap();
        let back = round_trip(&s);
        assert_eq!(back, s);
    }

    #[test]
    fn lower_triangle_is_stored() {
        let s = EnsembleSample::from_symmetric_triplets(3, [Triplet::new(0, 2, 1.5)]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n"));
        assert!(text.ends_with("3 3 1\n3 1 1.5\n"));
    }

    #[test]
    fn rectangular_round_trip() {
        let law = TailLaw::with_default_crossover(2.0, 4.0).unwrap();
        let s = sample_covariance_factor(4, 7, &law, 9).unwrap();
        let back = round_trip(&s);
        assert_eq!(back, s);
    }

    #[test]
    fn foreign_general_symmetric_file_is_folded() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 2 0.5\n2 1 0.5\n2 2 -1\n";
        let s = read_matrix_market(text.as_bytes()).unwrap();
        assert!(s.is_symmetric());
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.to_dense()[(1, 0)], 0.5);
    }

    #[test]
    fn malformed_files_are_rejected() {
        for text in [
            "",
            "%%MatrixMarket matrix array real general\n",
            "%%MatrixMarket matrix coordinate real symmetric\n2 3 0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n",
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n2 1 1\n1 2 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n",
        ] {
            assert!(read_matrix_market(text.as_bytes()).is_err(), "{text:?}");
        }
    }
}
