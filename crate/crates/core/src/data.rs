//! Row-major point sets and CSV ingestion.

use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// An `m × d` matrix of finite reals, one point per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    values: Vec<f64>,
}

/// Observations to estimate from: rows are observations, columns variables.
pub type Dataset = PointSet;

impl PointSet {
    /// Builds a point set from row-major values.
    pub fn from_flat(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::param(format!(
                "{} values do not fill rows of dimension {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite coordinate at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(PointSet { dim, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::param("no rows"))?;
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::param(format!(
                    "row {i} has {} columns, expected {dim}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::from_flat(dim, values)
    }

    /// A one-dimensional point set.
    pub fn from_column(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(1, values)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Applies `f` to every coordinate, `f(column, value)`.
    pub fn map(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i % self.dim, v))
            .collect();
        Self::from_flat(self.dim, values)
    }

    /// Sample standard deviation (n − 1 denominator) of every column.
    pub fn column_std(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (0..self.dim)
            .map(|j| {
                let mean = self.rows().map(|r| r[j]).sum::<f64>() / n;
                let ss: f64 = self.rows().map(|r| (r[j] - mean).powi(2)).sum();
                (ss / (n - 1.0).max(1.0)).sqrt()
            })
            .collect()
    }

    /// Index of the first column whose values are all identical.
    pub fn constant_column(&self) -> Option<usize> {
        let first = self.row(0);
        (0..self.dim).find(|&j| self.rows().all(|r| r[j] == first[j]))
    }

    /// Rows at the given indices, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        PointSet {
            dim: self.dim,
            values,
        }
    }
}

/// A column reference by header name or 0-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Name(n) => f.write_str(n),
            ColumnRef::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Which columns to load and whether to subsample rows.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ColumnSelection {
    /// Empty means every column.
    pub columns: Vec<ColumnRef>,
    pub subsample: Option<usize>,
    pub subsample_seed: u64,
}

/// A loaded dataset plus bookkeeping about the rows that were dropped.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: Dataset,
    pub column_names: Vec<String>,
    pub total_rows: usize,
    pub rejected_rows: usize,
}

/// Reads a headered CSV file and returns the selected numeric columns.
///
/// Rows with a missing or non-numeric value in any selected column are
/// dropped and counted. When a subsample size is given, rows are drawn
/// uniformly without replacement from the usable rows.
pub fn load_csv(path: impl AsRef<Path>, selection: &ColumnSelection) -> Result<LoadedData> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv_reader(file, selection)
}

pub fn load_csv_reader<R: std::io::Read>(
    reader: R,
    selection: &ColumnSelection,
) -> Result<LoadedData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let idx: Vec<usize> = if selection.columns.is_empty() {
        (0..headers.len()).collect()
    } else {
        selection
            .columns
            .iter()
            .map(|c| match c {
                ColumnRef::Index(i) if *i < headers.len() => Ok(*i),
                ColumnRef::Index(i) => Err(Error::Data(format!(
                    "column index {i} out of range ({} columns)",
                    headers.len()
                ))),
                ColumnRef::Name(name) => headers.iter().position(|h| h == name).ok_or_else(|| {
                    Error::Data(format!(
                        "unknown column '{name}' (available: {})",
                        headers.join(", ")
                    ))
                }),
            })
            .collect::<Result<_>>()?
    };
    if idx.len() < 2 {
        return Err(Error::param(format!(
            "mutual information needs at least 2 columns, {} selected",
            idx.len()
        )));
    }

    let mut values = Vec::new();
    let mut total = 0;
    let mut rejected = 0;
    let mut row = Vec::with_capacity(idx.len());
    for rec in rdr.records() {
        let rec = rec?;
        total += 1;
        row.clear();
        for &j in &idx {
            match rec.get(j).and_then(|s| s.parse::<f64>().ok()) {
                Some(v) if v.is_finite() => row.push(v),
                _ => break,
            }
        }
        if row.len() == idx.len() {
            values.extend_from_slice(&row);
        } else {
            rejected += 1;
        }
    }
    let mut data = PointSet::from_flat(idx.len(), values)?;
    if data.len() < 2 {
        return Err(Error::Data(format!(
            "only {} usable rows ({rejected} rejected)",
            data.len()
        )));
    }
    if let Some(m) = selection.subsample {
        if m < 2 || m > data.len() {
            return Err(Error::param(format!(
                "subsample size {m} must be between 2 and the {} usable rows",
                data.len()
            )));
        }
        let mut rng = rng::stream(selection.subsample_seed, 0);
        let picked = index::sample(&mut rng, data.len(), m).into_vec();
        data = data.select_rows(&picked);
    }
    Ok(LoadedData {
        data,
        column_names: idx.iter().map(|&j| headers[j].clone()).collect(),
        total_rows: total,
        rejected_rows: rejected,
    })
}
