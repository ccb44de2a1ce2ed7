//! CSV ingestion and emission: datasets, parameter chains, palette stores
//! and cumulative traces.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::postprocess::ChainRun;
use crate::samplers::{SampleStore, ThetaChain};

/// Name of the optional hyperparameter column in chain and store files.
pub const HYPER_COLUMN: &str = "V";

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<f64>>,
}

/// Reads a headed numeric CSV. Only `keep` columns are parsed (all when
/// `None`); line numbers in errors count the header as line 1.
fn read_table<R: Read>(reader: R, name: &str, keep: Option<&[usize]>, headers_only: bool) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(name, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::NoRecords(name.to_string()));
    }
    let mut rows = Vec::new();
    if headers_only {
        return Ok(Table { headers, rows });
    }
    let all: Vec<usize> = (0..headers.len()).collect();
    let keep = keep.unwrap_or(&all);
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_error(name, e))?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        let mut row = Vec::with_capacity(keep.len());
        for &c in keep {
            let cell = rec.get(c).ok_or_else(|| Error::Parse {
                source_name: name.to_string(),
                line,
                column: headers[c].clone(),
                message: "missing cell".into(),
            })?;
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                source_name: name.to_string(),
                line,
                column: headers[c].clone(),
                message: format!("non-numeric value '{cell}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    source_name: name.to_string(),
                    line,
                    column: headers[c].clone(),
                    message: format!("non-finite value '{cell}' in row {}", i + 1),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::NoRecords(name.to_string()));
    }
    Ok(Table { headers, rows })
}

fn csv_error(name: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(name, io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            source_name: name.to_string(),
            line,
            column: String::new(),
            message: format!("record has {len} fields, header has {expected_len}"),
        },
        other => Error::Parse {
            source_name: name.to_string(),
            line,
            column: String::new(),
            message: format!("{other:?}"),
        },
    }
}

fn columns_of(rows: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    (0..width).map(|c| rows.iter().map(|r| r[c]).collect()).collect()
}

/// Parses a dataset. With a non-empty `schema` only those columns are read
/// and each must be present; otherwise every column is read.
pub fn parse_dataset_csv<R: Read>(reader: R, name: &str, schema: &[&str]) -> Result<Dataset> {
    let mut reader = reader;
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(|e| Error::io(name, e))?;
    if text.trim().is_empty() {
        return Err(Error::NoRecords(name.to_string()));
    }
    let head = read_table(text.as_bytes(), name, None, true)?;
    let keep: Vec<usize> = if schema.is_empty() {
        (0..head.headers.len()).collect()
    } else {
        schema
            .iter()
            .map(|col| {
                head.headers.iter().position(|h| h == col).ok_or_else(|| Error::MissingColumn {
                    source_name: name.to_string(),
                    column: col.to_string(),
                })
            })
            .collect::<Result<_>>()?
    };
    let table = read_table(text.as_bytes(), name, Some(&keep), false)?;
    let names: Vec<String> = keep.iter().map(|&c| table.headers[c].clone()).collect();
    let dataset = Dataset::new(names, columns_of(&table.rows, keep.len()))?;
    log::info!("{name}: {} records", dataset.n_rows());
    Ok(dataset)
}

pub fn load_dataset_csv(path: &Path, schema: &[&str]) -> Result<Dataset> {
    parse_dataset_csv(open(path)?, &source_name(path), schema)
}

/// Parses a parameter chain with `expected_dim` parameter columns and an
/// optional hyperparameter column named `V`.
pub fn parse_chain_csv<R: Read>(reader: R, name: &str, expected_dim: usize) -> Result<ThetaChain> {
    let table = read_table(reader, name, None, false)?;
    let hyper_col = table.headers.iter().position(|h| h == HYPER_COLUMN);
    let theta_cols: Vec<usize> = (0..table.headers.len()).filter(|&c| Some(c) != hyper_col).collect();
    if theta_cols.len() > expected_dim {
        let extra = &table.headers[theta_cols[expected_dim]];
        return Err(Error::dim(
            format!("{name}: parameter columns (unexpected extra column '{extra}')"),
            expected_dim,
            theta_cols.len(),
        ));
    }
    if theta_cols.len() < expected_dim {
        return Err(Error::dim(format!("{name}: parameter columns"), expected_dim, theta_cols.len()));
    }
    Ok(ThetaChain {
        names: theta_cols.iter().map(|&c| table.headers[c].clone()).collect(),
        draws: table.rows.iter().map(|r| theta_cols.iter().map(|&c| r[c]).collect()).collect(),
        hyper: hyper_col.map(|h| table.rows.iter().map(|r| r[h]).collect()),
    })
}

pub fn load_chain_csv(path: &Path, expected_dim: usize) -> Result<ThetaChain> {
    parse_chain_csv(open(path)?, &source_name(path), expected_dim)
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<File>) -> std::result::Result<(), csv::Error>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    f(&mut w).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_chain_csv(path: &Path, chain: &ThetaChain) -> Result<()> {
    write_with(path, |w| {
        let mut header = chain.names.clone();
        if chain.hyper.is_some() {
            header.push(HYPER_COLUMN.into());
        }
        w.write_record(&header)?;
        for (i, row) in chain.draws.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
            if let Some(h) = &chain.hyper {
                rec.push(h[i].to_string());
            }
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

/// Palette store header: `psi_1..psi_d`, then `V` when present.
pub fn write_store_csv(path: &Path, store: &SampleStore) -> Result<()> {
    write_with(path, |w| {
        let mut header: Vec<String> = (1..=store.dim()).map(|i| format!("psi_{i}")).collect();
        if store.has_hyper() {
            header.push(HYPER_COLUMN.into());
        }
        w.write_record(&header)?;
        for (i, row) in store.rows().enumerate() {
            let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
            if let Some(h) = store.hyper(i) {
                rec.push(h.to_string());
            }
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

pub fn parse_store_csv<R: Read>(reader: R, name: &str, model: usize, dim: usize) -> Result<SampleStore> {
    let chain = parse_chain_csv(reader, name, dim)?;
    for (i, n) in chain.names.iter().enumerate() {
        if *n != format!("psi_{}", i + 1) {
            return Err(Error::Parse {
                source_name: name.to_string(),
                line: 1,
                column: n.clone(),
                message: format!("expected header psi_{}", i + 1),
            });
        }
    }
    SampleStore::from_rows(model, &chain.draws, chain.hyper)
}

pub fn load_store_csv(path: &Path, model: usize, dim: usize) -> Result<SampleStore> {
    parse_store_csv(open(path)?, &source_name(path), model, dim)
}

/// Cumulative trace of one chain: `iteration,model_1,...,model_K`.
pub fn write_trace_csv<W: Write>(out: W, chain: &ChainRun, n_models: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iteration".to_string()];
    header.extend((1..=n_models).map(|k| format!("model_{k}")));
    let wrap = |e: csv::Error| Error::Config(format!("trace CSV: {e}"));
    w.write_record(&header).map_err(wrap)?;
    for row in &chain.trace {
        let mut rec = vec![row.iteration.to_string()];
        rec.extend(row.probs.iter().map(f64::to_string));
        w.write_record(&rec).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("trace CSV", e))
}
