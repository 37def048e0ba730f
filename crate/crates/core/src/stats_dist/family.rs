use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{gaussian_true_mi, student_true_mi, CovarianceMatrix};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// One-dimensional families usable as factors of a product distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marginal {
    Normal { mean: f64, sd: f64 },
    Student { df: f64 },
    Maxwell { scale: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            Marginal::Student { df } => df > 0.0 && df.is_finite(),
            Marginal::Maxwell { scale } => scale > 0.0 && scale.is_finite(),
            Marginal::LogNormal { mu, sigma } => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid marginal {self:?}")))
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            Marginal::Student { df } => {
                let z: f64 = rng.sample(StandardNormal);
                z / (chi_squared(df, rng) / df).sqrt()
            }
            Marginal::Maxwell { scale } => maxwell(scale, rng),
            Marginal::LogNormal { mu, sigma } => {
                (mu + sigma * rng.sample::<f64, _>(StandardNormal)).exp()
            }
        }
    }
}

/// The distribution families of the simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    MvNormal {
        mean: Vec<f64>,
        cov: CovarianceMatrix,
    },
    /// Location 0, identity scale.
    MvStudent {
        df: f64,
        dim: usize,
    },
    /// Independent Maxwell–Boltzmann coordinates with a common scale.
    MaxwellProduct {
        scale: f64,
        dim: usize,
    },
    /// Uniform direction times a LogNormal(0, log_sd²) radius.
    SphericalLogNormal {
        dim: usize,
        log_sd: f64,
    },
    ProductOfMarginals(Vec<Marginal>),
}

impl Family {
    pub fn standard_normal(dim: usize) -> Result<Self> {
        Ok(Family::MvNormal {
            mean: vec![0.0; dim],
            cov: CovarianceMatrix::identity(dim)?,
        })
    }

    pub fn normal(mean: Vec<f64>, cov: CovarianceMatrix) -> Result<Self> {
        let f = Family::MvNormal { mean, cov };
        f.validate()?;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        match self {
            Family::MvNormal { cov, .. } => cov.dim(),
            Family::MvStudent { dim, .. }
            | Family::MaxwellProduct { dim, .. }
            | Family::SphericalLogNormal { dim, .. } => *dim,
            Family::ProductOfMarginals(m) => m.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        match self {
            Family::MvNormal { mean, cov } => {
                if mean.len() != cov.dim() {
                    return Err(Error::param(format!(
                        "mean has length {}, covariance dimension {}",
                        mean.len(),
                        cov.dim()
                    )));
                }
                if mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::param("mean must be finite"));
                }
            }
            Family::MvStudent { df, .. } => {
                if !(df.is_finite() && *df > 0.0) {
                    return Err(Error::param(format!(
                        "degrees of freedom must be positive, got {df}"
                    )));
                }
            }
            Family::MaxwellProduct { scale, .. } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::param(format!(
                        "Maxwell scale must be positive, got {scale}"
                    )));
                }
            }
            Family::SphericalLogNormal { log_sd, .. } => {
                if !(log_sd.is_finite() && *log_sd > 0.0) {
                    return Err(Error::param(format!(
                        "log-radius sd must be positive, got {log_sd}"
                    )));
                }
            }
            Family::ProductOfMarginals(ms) => {
                for m in ms {
                    m.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Closed-form MI among the coordinates, where one is known.
    pub fn true_mi(&self) -> Option<f64> {
        match self {
            Family::MvNormal { cov, .. } => Some(gaussian_true_mi(cov)),
            Family::MvStudent { df, dim } => student_true_mi(*df, *dim).ok(),
            Family::MaxwellProduct { .. } | Family::ProductOfMarginals(_) => Some(0.0),
            Family::SphericalLogNormal { dim: 1, .. } => Some(0.0),
            Family::SphericalLogNormal { .. } => None,
        }
    }

    /// Writes one draw into `out` (length `dim`).
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let d = out.len();
        debug_assert_eq!(d, self.dim());
        match self {
            Family::MvNormal { mean, cov } => {
                let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let l = cov.cholesky_lower();
                for i in 0..d {
                    out[i] = mean[i] + (0..=i).map(|j| l[i * d + j] * z[j]).sum::<f64>();
                }
            }
            Family::MvStudent { df, .. } => {
                let scale = (chi_squared(*df, rng) / df).sqrt();
                for o in out.iter_mut() {
                    *o = rng.sample::<f64, _>(StandardNormal) / scale;
                }
            }
            Family::MaxwellProduct { scale, .. } => {
                for o in out.iter_mut() {
                    *o = maxwell(*scale, rng);
                }
            }
            Family::SphericalLogNormal { log_sd, .. } => {
                let mut norm2 = 0.0;
                loop {
                    for o in out.iter_mut() {
                        *o = rng.sample(StandardNormal);
                        norm2 += *o * *o;
                    }
                    if norm2 > 0.0 {
                        break;
                    }
                }
                let radius = (log_sd * rng.sample::<f64, _>(StandardNormal)).exp();
                let f = radius / norm2.sqrt();
                for o in out.iter_mut() {
                    *o *= f;
                }
            }
            Family::ProductOfMarginals(ms) => {
                for (o, m) in out.iter_mut().zip(ms) {
                    *o = m.draw(rng);
                }
            }
        }
    }

    /// `n` i.i.d. draws as an `n × d` dataset.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        self.validate()?;
        if n == 0 {
            return Err(Error::param("sample size must be at least 1"));
        }
        let d = self.dim();
        let mut values = vec![0.0; n * d];
        for row in values.chunks_exact_mut(d) {
            self.draw_into(rng, row);
        }
        Dataset::from_flat(d, values)
    }
}

fn chi_squared<R: Rng + ?Sized>(df: f64, rng: &mut R) -> f64 {
    ChiSquared::new(df)
        .expect("validated degrees of freedom")
        .sample(rng)
}

/// c·‖(Z₁, Z₂, Z₃)‖ with Z standard normal.
fn maxwell<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let s: f64 = (0..3)
        .map(|_| rng.sample::<f64, _>(StandardNormal).powi(2))
        .sum();
    scale * s.sqrt()
}

/// A synthetic data-generating distribution and its true MI, if known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub family: Family,
    pub true_mi: Option<f64>,
}

impl ScenarioSpec {
    pub fn new(family: Family) -> Result<Self> {
        family.validate()?;
        let true_mi = family.true_mi();
        Ok(ScenarioSpec { family, true_mi })
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        self.family.sample(n, rng)
    }
}

/// Sample `n` rows from `spec`.
pub fn sample_scenario<R: Rng + ?Sized>(
    spec: &ScenarioSpec,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    spec.sample(n, rng)
}

/// The base measure G of the Dirichlet-process prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BaseMeasure(Family);

impl BaseMeasure {
    pub fn new(family: Family) -> Result<Self> {
        family.validate()?;
        Ok(BaseMeasure(family))
    }

    /// N_d(0, I_d).
    pub fn standard_normal(dim: usize) -> Result<Self> {
        Ok(BaseMeasure(Family::standard_normal(dim)?))
    }

    pub fn family(&self) -> &Family {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        self.0.draw_into(rng, out)
    }
}
