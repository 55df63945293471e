//! Embedding, trace and label files.

use std::path::{Path, PathBuf};

use desmap::dataset::format_real;
use desmap::{Error, Matrix64};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub ids: Vec<String>,
    pub coords: Matrix64,
}

pub fn params_path(embedding: &Path) -> PathBuf {
    embedding.with_extension("params")
}

pub fn trace_path(embedding: &Path) -> PathBuf {
    embedding.with_extension("trace.csv")
}

pub fn labels_path(report: &Path) -> PathBuf {
    report.with_extension("labels.csv")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| {
        CliError::Core(Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| {
        CliError::Core(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// `id,y1,…,yd` with 17 significant digits.
pub fn write_embedding(path: &Path, emb: &Embedding) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["id".to_string()];
    header.extend((1..=emb.coords.cols()).map(|j| format!("y{j}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for (i, id) in emb.ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(emb.coords.row(i).iter().map(|&v| format_real(v)));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_embedding(path: &Path) -> Result<Embedding, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.get(0) != Some("id") || header.len() < 2 {
        return Err(Error::MissingColumn { column: "id".into() }.into());
    }
    let d = header.len() - 1;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        ids.push(rec[0].to_string());
        for j in 1..=d {
            let cell = &rec[j];
            let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumericCell {
                row,
                column: header[j].to_string(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumericCell {
                    row,
                    column: header[j].to_string(),
                    value: cell.to_string(),
                }
                .into());
            }
            data.push(v);
        }
    }
    let mut seen = std::collections::HashSet::new();
    for (row, id) in ids.iter().enumerate() {
        if !seen.insert(id) {
            return Err(Error::DuplicateId { id: id.clone(), row }.into());
        }
    }
    Ok(Embedding {
        coords: Matrix64::from_vec(ids.len(), d, data),
        ids,
    })
}

pub fn write_trace(path: &Path, trace: &[(usize, f64)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["iteration", "kl"]).map_err(csv_err(path))?;
    for (t, c) in trace {
        w.write_record([t.to_string(), format_real(*c)]).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// `id,cluster` rows.
pub fn read_labels(path: &Path) -> Result<Vec<(String, usize)>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        if rec.len() < 2 {
            return Err(Error::RaggedRow {
                row,
                expected: 2,
                found: rec.len(),
            }
            .into());
        }
        let label = rec[1].trim().parse().map_err(|_| Error::NonNumericCell {
            row,
            column: "cluster".into(),
            value: rec[1].to_string(),
        })?;
        out.push((rec[0].to_string(), label));
    }
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}
