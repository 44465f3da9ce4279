//! Cosine CSV files: `round,canary_id,label,cosine`, with round −1 for
//! cosines against the final model.

use std::collections::BTreeMap;
use std::path::Path;

use canary_audit::Label;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

pub const FINAL_ROUND: i64 = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineRow {
    pub round: i64,
    pub canary_id: usize,
    pub label: Label,
    pub cosine: f64,
}

pub fn to_csv(rows: &[CosineRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Runtime(format!("cannot encode cosine row: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(format!("cannot encode cosines: {e}")))
}

pub fn read_rows(path: &Path) -> CliResult<Vec<CosineRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    let headers = r.headers().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["round", "canary_id", "label", "cosine"] {
        return Err(CliError::Usage(format!(
            "{}: expected header round,canary_id,label,cosine, got {}",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| CliError::Usage(format!("{} row {}: {e}", path.display(), i + 2))))
        .collect()
}

/// Cosines of `label` at `round`, ordered by canary id.
pub fn select_round(rows: &[CosineRow], label: Label, round: i64) -> Vec<f64> {
    let picked: BTreeMap<usize, f64> =
        rows.iter().filter(|r| r.label == label && r.round == round).map(|r| (r.canary_id, r.cosine)).collect();
    picked.into_values().collect()
}

/// Per-canary maximum over traced rounds (round ≥ 0), ordered by canary id.
pub fn select_max(rows: &[CosineRow], label: Label) -> Vec<f64> {
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.label == label && r.round >= 0) {
        let e = best.entry(r.canary_id).or_insert(f64::NEG_INFINITY);
        *e = e.max(r.cosine);
    }
    best.into_values().collect()
}

/// One numeric column of an arbitrary CSV, optionally filtered on its
/// `label` and `round` columns.
pub fn read_column(path: &Path, column: &str, label: Option<&str>, round: Option<i64>) -> CliResult<Vec<f64>> {
    let usage = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| usage(e.to_string()))?;
    let headers = r.headers().map_err(|e| usage(e.to_string()))?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let col = find(column).ok_or_else(|| usage(format!("no column {column:?}")))?;
    let label_col = match label {
        Some(_) => Some(find("label").ok_or_else(|| usage("no label column to filter on".into()))?),
        None => None,
    };
    let round_col = match round {
        Some(_) => Some(find("round").ok_or_else(|| usage("no round column to filter on".into()))?),
        None => None,
    };
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| usage(e.to_string()))?;
        let line = i + 2;
        if let (Some(c), Some(want)) = (label_col, label) {
            if rec.get(c) != Some(want) {
                continue;
            }
        }
        if let (Some(c), Some(want)) = (round_col, round) {
            let got: i64 = rec.get(c).unwrap_or("").trim().parse().map_err(|_| usage(format!("row {line}: bad round")))?;
            if got != want {
                continue;
            }
        }
        let v: f64 = rec
            .get(col)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| usage(format!("row {line}: {column} is not a number")))?;
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(round: i64, id: usize, label: Label, cosine: f64) -> CosineRow {
        CosineRow { round, canary_id: id, label, cosine }
    }

    #[test]
    fn csv_round_trips() {
        let rows = vec![row(-1, 0, Label::Observed, 0.25), row(3, 1, Label::Unobserved, -1e-3)];
        let bytes = to_csv(&rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("round,canary_id,label,cosine\n-1,0,observed,0.25\n"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        std::fs::write(&p, bytes).unwrap();
        assert_eq!(read_rows(&p).unwrap(), rows);
        assert_eq!(read_column(&p, "cosine", Some("observed"), None).unwrap(), vec![0.25]);
        assert_eq!(read_column(&p, "cosine", None, Some(3)).unwrap(), vec![-1e-3]);
        assert!(read_column(&p, "nope", None, None).is_err());
    }

    #[test]
    fn selection() {
        let rows = vec![
            row(0, 1, Label::Observed, 0.1),
            row(1, 1, Label::Observed, 0.3),
            row(0, 0, Label::Observed, 0.2),
            row(1, 0, Label::Observed, -0.2),
            row(-1, 0, Label::Observed, 0.9),
            row(0, 0, Label::Unobserved, 0.05),
        ];
        assert_eq!(select_max(&rows, Label::Observed), vec![0.2, 0.3]);
        assert_eq!(select_round(&rows, Label::Observed, -1), vec![0.9]);
        assert_eq!(select_max(&rows, Label::Unobserved), vec![0.05]);
    }
}
