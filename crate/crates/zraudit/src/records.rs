//! Record-file IO.
//!
//! The audit record CSV has a mandatory header and mandatory `id` and
//! `membership` columns; `score`, `guess`, `pi_hat` and contiguous feature
//! columns `f0..f{d-1}` are optional. Numeric cells use '.' decimals and are
//! never quoted, so rewriting a file is byte-stable. Externally produced
//! scores can also arrive as JSON lines (one record object per line).

use std::path::Path;

use crate::audit::AuditRecord;
use crate::error::{Error, Result};

/// Read an audit-record file; `.jsonl`/`.ndjson` parse as JSON lines,
/// anything else as CSV.
pub fn read_records(path: &Path) -> Result<Vec<AuditRecord>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("ndjson") => read_records_jsonl(path),
        _ => read_records_csv(path),
    }
}

/// Read JSON-lines records: one object per line with fields `id`,
/// `membership` and optionally `score`, `guess`, `pi_hat`, `features`.
pub fn read_records_jsonl(path: &Path) -> Result<Vec<AuditRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut records = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: AuditRecord = serde_json::from_str(line)
            .map_err(|e| Error::Schema(format!("line {line_idx}: {e}")))?;
        if rec.membership != 1 && rec.membership != -1 {
            return Err(Error::Schema(format!(
                "line {line_idx}: membership must be -1 or 1"
            )));
        }
        if rec.score.is_none() && rec.features.is_none() {
            return Err(Error::Schema(format!(
                "line {line_idx}: need at least one of score or features"
            )));
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Schema("record file has no rows".into()));
    }
    Ok(records)
}

/// Read an audit-record CSV.
pub fn read_records_csv(path: &Path) -> Result<Vec<AuditRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);

    let id_col = col("id").ok_or_else(|| Error::Schema("missing column: id".into()))?;
    let membership_col =
        col("membership").ok_or_else(|| Error::Schema("missing column: membership".into()))?;
    let score_col = col("score");
    let guess_col = col("guess");
    let pi_col = col("pi_hat");

    // Feature columns must be f0..f{d-1} with no gaps.
    let mut d = 0;
    while col(&format!("f{d}")).is_some() {
        d += 1;
    }
    for h in headers.iter() {
        if let Some(rest) = h.strip_prefix('f') {
            if let Ok(k) = rest.parse::<usize>() {
                if k >= d {
                    return Err(Error::Schema(format!(
                        "feature column {h} leaves a gap (found f0..f{})",
                        d.saturating_sub(1)
                    )));
                }
            }
        }
    }
    let feature_cols: Vec<usize> = (0..d)
        .map(|k| col(&format!("f{k}")).expect("checked contiguous"))
        .collect();
    if score_col.is_none() && d == 0 {
        return Err(Error::Schema(
            "need at least one of a score column or feature columns f0..".into(),
        ));
    }

    let parse_f64 = |cell: &str, what: &str, row: usize| -> Result<f64> {
        cell.trim()
            .parse::<f64>()
            .map_err(|_| Error::Schema(format!("row {row}: bad {what}: {cell:?}")))
    };

    let mut records = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row?;
        let get = |c: usize| row.get(c).unwrap_or("");
        let membership = match get(membership_col).trim() {
            "1" | "+1" => 1i8,
            "-1" => -1i8,
            other => {
                return Err(Error::Schema(format!(
                    "row {row_idx}: membership must be -1 or 1, got {other:?}"
                )))
            }
        };
        let mut rec = AuditRecord::new(get(id_col).to_string(), membership);
        if let Some(c) = score_col {
            let cell = get(c).trim();
            if !cell.is_empty() {
                rec.score = Some(parse_f64(cell, "score", row_idx)?);
            }
        }
        if let Some(c) = guess_col {
            let cell = get(c).trim();
            if !cell.is_empty() {
                rec.guess = match cell {
                    "1" | "+1" => 1,
                    "0" => 0,
                    "-1" => -1,
                    other => {
                        return Err(Error::Schema(format!(
                            "row {row_idx}: guess must be -1, 0 or 1, got {other:?}"
                        )))
                    }
                };
            }
        }
        if let Some(c) = pi_col {
            let cell = get(c).trim();
            if !cell.is_empty() {
                let pi = parse_f64(cell, "pi_hat", row_idx)?;
                if !(0.0..=1.0).contains(&pi) {
                    return Err(Error::Schema(format!(
                        "row {row_idx}: pi_hat {pi} outside [0,1]"
                    )));
                }
                rec.pi_hat = Some(pi);
            }
        }
        if d > 0 {
            let mut features = Vec::with_capacity(d);
            for (k, &c) in feature_cols.iter().enumerate() {
                features.push(parse_f64(get(c), &format!("f{k}"), row_idx)?);
            }
            rec.features = Some(features);
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Schema("record file has no rows".into()));
    }
    Ok(records)
}

/// Write an audit-record CSV. Optional columns appear when any record
/// carries them; feature width comes from the first record with features.
pub fn write_records(path: &Path, records: &[AuditRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to write".into()));
    }
    let has_score = records.iter().any(|r| r.score.is_some());
    let has_guess = records.iter().any(|r| r.guess != 0);
    let has_pi = records.iter().any(|r| r.pi_hat.is_some());
    let d = records
        .iter()
        .find_map(|r| r.features.as_ref().map(|f| f.len()))
        .unwrap_or(0);

    let mut writer = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .from_path(path)?;
    let mut header = vec!["id".to_string(), "membership".to_string()];
    if has_score {
        header.push("score".into());
    }
    if has_guess {
        header.push("guess".into());
    }
    if has_pi {
        header.push("pi_hat".into());
    }
    for k in 0..d {
        header.push(format!("f{k}"));
    }
    writer.write_record(&header)?;

    for rec in records {
        let mut row = vec![rec.id.clone(), rec.membership.to_string()];
        if has_score {
            row.push(rec.score.map(|v| v.to_string()).unwrap_or_default());
        }
        if has_guess {
            row.push(rec.guess.to_string());
        }
        if has_pi {
            row.push(rec.pi_hat.map(|v| v.to_string()).unwrap_or_default());
        }
        if d > 0 {
            match &rec.features {
                Some(f) if f.len() == d => row.extend(f.iter().map(|v| v.to_string())),
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "record {}: inconsistent feature width",
                        rec.id
                    )))
                }
            }
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write any serializable value as pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Read a JSON file into a deserializable value.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
