//! Column-oriented numeric datasets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A table of named, fully observed numeric columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::dim("dataset columns", names.len(), columns.len()));
        }
        let rows = columns.first().map_or(0, Vec::len);
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != rows {
                return Err(Error::InvalidArgument(format!(
                    "column '{name}' has {} rows, expected {rows}",
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("column '{name}', record {}", i + 1)));
            }
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::InvalidArgument(format!("duplicate column '{name}'")));
            }
        }
        Ok(Self { names, columns })
    }

    /// Builds a dataset from `(name, values)` pairs.
    pub fn from_columns<S: Into<String>>(cols: impl IntoIterator<Item = (S, Vec<f64>)>) -> Result<Self> {
        let (names, columns) = cols.into_iter().map(|(n, c)| (n.into(), c)).unzip();
        Self::new(names, columns)
    }

    /// An empty dataset; useful for prior-only runs.
    pub fn empty() -> Self {
        Self {
            names: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::MissingColumn {
                source_name: "dataset".into(),
                column: name.into(),
            })
    }

    /// Replaces a column by its z-score.
    pub fn standardize(&mut self, name: &str) -> Result<()> {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn {
                source_name: "dataset".into(),
                column: name.into(),
            })?;
        let col = &mut self.columns[i];
        let n = col.len() as f64;
        if col.len() < 2 {
            return Err(Error::InvalidArgument(format!("cannot standardize '{name}' with fewer than 2 rows")));
        }
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        if sd == 0.0 {
            return Err(Error::InvalidArgument(format!("column '{name}' is constant")));
        }
        col.iter_mut().for_each(|v| *v = (*v - mean) / sd);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(Dataset::from_columns([("a", vec![1.0, 2.0]), ("b", vec![1.0])]).is_err());
        assert!(Dataset::from_columns([("a", vec![1.0, f64::NAN])]).is_err());
        assert!(Dataset::from_columns([("a", vec![1.0]), ("a", vec![2.0])]).is_err());
    }

    #[test]
    fn standardize_gives_zero_mean_unit_sd() {
        let mut d = Dataset::from_columns([("x", vec![1.0, 2.0, 3.0, 10.0])]).unwrap();
        d.standardize("x").unwrap();
        let x = d.column("x").unwrap();
        let m = x.iter().sum::<f64>() / 4.0;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 3.0;
        assert!(m.abs() < 1e-15);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_column_is_named() {
        let d = Dataset::from_columns([("y", vec![0.0])]).unwrap();
        let err = d.column("S").unwrap_err().to_string();
        assert!(err.contains("'S'"), "{err}");
    }
}
