//! The dictionary `h_1, ..., h_M`, held only through its evaluations
//! `phi[i, j] = h_j(X_i)`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survival::SurvivalDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DictionaryKind {
    Linear,
    UserSupplied,
}

#[derive(Debug, Clone)]
pub struct DictionaryMatrix {
    phi: DMatrix<f64>,
    labels: Vec<String>,
    kind: DictionaryKind,
}

impl DictionaryMatrix {
    pub fn new(phi: DMatrix<f64>, labels: Vec<String>, kind: DictionaryKind) -> Result<Self> {
        if phi.ncols() == 0 || phi.nrows() == 0 {
            return Err(Error::Dimension("dictionary needs at least one row and one column".into()));
        }
        if labels.len() != phi.ncols() {
            return Err(Error::Dimension(format!(
                "{} labels for {} dictionary columns",
                labels.len(),
                phi.ncols()
            )));
        }
        if let Some(pos) = phi.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % phi.nrows(), pos / phi.nrows());
            return Err(Error::param(format!(
                "dictionary entry (row {}, column {}) is not finite",
                r + 1,
                labels[c]
            )));
        }
        Ok(Self { phi, labels, kind })
    }

    /// `h_j(x) = x_j`.
    pub fn linear(data: &SurvivalDataset) -> Self {
        let n = data.len();
        let d = data.dim();
        let phi = DMatrix::from_fn(n, d, |i, j| data.records()[i].covariates[j]);
        Self {
            phi,
            labels: data.labels().to_vec(),
            kind: DictionaryKind::Linear,
        }
    }

    /// Reads a precomputed design: a header of labels followed by exactly one
    /// row per record of `data`.
    pub fn load_csv(data: &SurvivalDataset, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let labels: Vec<String> = reader
            .headers()
            .map_err(|e| Error::File {
                path: path.to_path_buf(),
                message: format!("unreadable header: {e}"),
            })?
            .iter()
            .map(str::to_string)
            .collect();
        let m = labels.len();
        let mut values = Vec::new();
        let mut rows = 0;
        for (k, row) in reader.records().enumerate() {
            let row_no = k + 1;
            let row_err = |message: String| Error::Row {
                path: path.to_path_buf(),
                row: row_no,
                message,
            };
            let row = row.map_err(|e| row_err(e.to_string()))?;
            if row.len() != m {
                return Err(row_err(format!("{} fields, expected {m}", row.len())));
            }
            for (j, field) in row.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| row_err(format!("column {} `{field}` is not a number", labels[j])))?;
                if !v.is_finite() {
                    return Err(row_err(format!("column {} is not finite", labels[j])));
                }
                values.push(v);
            }
            rows += 1;
        }
        if rows != data.len() {
            return Err(Error::Dimension(format!(
                "{}: dictionary has {rows} rows, expected n = {}",
                path.display(),
                data.len()
            )));
        }
        let phi = DMatrix::from_row_slice(rows, m, &values);
        Self::new(phi, labels, DictionaryKind::UserSupplied)
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    pub fn n_rows(&self) -> usize {
        self.phi.nrows()
    }

    pub fn size(&self) -> usize {
        self.phi.ncols()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.phi.nrows();
        &self.phi.as_slice()[j * n..(j + 1) * n]
    }

    /// `‖h_j‖_{n,∞} = max_i |phi[i, j]|` for every column.
    pub fn sup_norms(&self) -> Vec<f64> {
        (0..self.size())
            .map(|j| self.column(j).iter().fold(0.0, |m: f64, v| m.max(v.abs())))
            .collect()
    }

    /// Indices of all-zero columns.
    pub fn zero_columns(&self) -> Vec<usize> {
        (0..self.size())
            .filter(|&j| self.column(j).iter().all(|&v| v == 0.0))
            .collect()
    }

    /// Evaluations of `h_β = Σ β_j h_j` at every record.
    pub fn evaluate(&self, beta: &[f64]) -> Vec<f64> {
        assert_eq!(beta.len(), self.size());
        let b = DVector::from_column_slice(beta);
        (&self.phi * b).as_slice().to_vec()
    }

    /// Dictionary whose columns are `phi · transform`.
    pub fn transformed(&self, transform: &DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if transform.nrows() != self.size() {
            return Err(Error::Dimension(format!(
                "transform has {} rows for {} columns",
                transform.nrows(),
                self.size()
            )));
        }
        Self::new(&self.phi * transform, labels, DictionaryKind::UserSupplied)
    }
}
