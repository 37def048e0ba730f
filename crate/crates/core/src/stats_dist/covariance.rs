use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symmetric positive-definite covariance matrix together with its
/// lower Cholesky factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceRepr", into = "CovarianceRepr")]
pub struct CovarianceMatrix {
    dim: usize,
    entries: Vec<f64>,
    lower: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CovarianceRepr {
    dim: usize,
    entries: Vec<f64>,
}

impl TryFrom<CovarianceRepr> for CovarianceMatrix {
    type Error = Error;

    fn try_from(r: CovarianceRepr) -> Result<Self> {
        CovarianceMatrix::new(r.dim, r.entries)
    }
}

impl From<CovarianceMatrix> for CovarianceRepr {
    fn from(c: CovarianceMatrix) -> Self {
        CovarianceRepr {
            dim: c.dim,
            entries: c.entries,
        }
    }
}

const SYMMETRY_TOL: f64 = 1e-12;

impl CovarianceMatrix {
    /// Validates and factorizes a row-major `dim × dim` matrix.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("covariance dimension must be at least 1"));
        }
        if entries.len() != dim * dim {
            return Err(Error::param(format!(
                "covariance of dimension {dim} needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("covariance entries must be finite"));
        }
        for i in 0..dim {
            if entries[i * dim + i] <= 0.0 {
                return Err(Error::Factorization(format!(
                    "diagonal entry {i} is not positive"
                )));
            }
            for j in 0..i {
                if (entries[i * dim + j] - entries[j * dim + i]).abs() > SYMMETRY_TOL {
                    return Err(Error::param(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let m = DMatrix::from_row_slice(dim, dim, &entries);
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Factorization("Cholesky factorization failed".into()))?;
        let l = chol.l();
        let lower = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| l[(i, j)])
            .collect();
        Ok(CovarianceMatrix {
            dim,
            entries,
            lower,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        Self::from_fn(
            variances.len(),
            |i, j| if i == j { variances[i] } else { 0.0 },
        )
    }

    /// Σ_d: diagonal (1, 2, 1, …, 1), 0.5 everywhere off the diagonal.
    pub fn sigma(dim: usize) -> Result<Self> {
        Self::from_fn(dim, |i, j| match (i == j, i) {
            (true, 1) => 2.0,
            (true, _) => 1.0,
            (false, _) => 0.5,
        })
    }

    /// A_d: identity except for 0.5 coupling the last two coordinates.
    pub fn last_pair(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::param("A_d needs dimension at least 2"));
        }
        Self::from_fn(dim, |i, j| {
            if i == j {
                1.0
            } else if i.min(j) == dim - 2 && i.max(j) == dim - 1 {
                0.5
            } else {
                0.0
            }
        })
    }

    /// B_d: unit diagonal, 0.9 everywhere else.
    pub fn equicorrelated(dim: usize) -> Result<Self> {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.9 })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let entries = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Lower-triangular Cholesky factor, row-major.
    pub fn cholesky_lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim)
            .map(|i| self.lower[i * self.dim + i].ln())
            .sum::<f64>()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0.0))
    }

    /// Same matrix with rows and columns reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::from_fn(self.dim, |i, j| self.get(perm[i], perm[j]))
    }
}
