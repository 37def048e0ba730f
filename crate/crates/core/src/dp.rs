//! Finite approximation of the Dirichlet-process posterior
//! DP(a + n, G_{a,n}) with G_{a,n} = a/(a+n)·G + n/(a+n)·F_n.
//!
//! A draw is `P_N = Σ J_i δ_{Y_i}`: atoms `Y_i` i.i.d. from G_{a,n} and
//! weights from a symmetric Dirichlet((a+n)/N, …, (a+n)/N) built by
//! normalizing independent Gamma variates.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PointSet};
use crate::error::{Error, Result};
use crate::stats_dist::BaseMeasure;

/// Concentration `a` and base measure `G` of the prior DP(a, G).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub concentration: f64,
    pub base: BaseMeasure,
}

impl PriorSpec {
    pub fn new(concentration: f64, base: BaseMeasure) -> Result<Self> {
        if !(concentration.is_finite() && concentration > 0.0) {
            return Err(Error::param(format!(
                "concentration must be positive, got {concentration}"
            )));
        }
        Ok(PriorSpec {
            concentration,
            base,
        })
    }

    /// DP(a, N_d(0, I_d)).
    pub fn standard(concentration: f64, dim: usize) -> Result<Self> {
        Self::new(concentration, BaseMeasure::standard_normal(dim)?)
    }
}

/// Gaussian noise added to atoms resampled from the data. The standard
/// deviation in column j is `scale` times the sample sd of that column.
/// Prior-sourced atoms are never perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterPolicy {
    pub scale: f64,
}

impl JitterPolicy {
    pub const NONE: JitterPolicy = JitterPolicy { scale: 0.0 };

    pub fn new(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::param(format!(
                "jitter scale must be non-negative, got {scale}"
            )));
        }
        Ok(JitterPolicy { scale })
    }

    pub fn is_active(&self) -> bool {
        self.scale > 0.0
    }
}

/// One finite draw `Σ J_i δ_{Y_i}` from the posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DPApproximation {
    atoms: PointSet,
    weights: Vec<f64>,
    /// `true` where the atom came from the prior base measure.
    source_flags: Vec<bool>,
}

const WEIGHT_SUM_TOL: f64 = 1e-10;

impl DPApproximation {
    pub fn new(atoms: PointSet, weights: Vec<f64>, source_flags: Vec<bool>) -> Result<Self> {
        let n = atoms.len();
        if n < 2 {
            return Err(Error::Contract(format!("{n} atoms; need at least 2")));
        }
        if weights.len() != n || source_flags.len() != n {
            return Err(Error::Contract(format!(
                "{n} atoms but {} weights and {} flags",
                weights.len(),
                source_flags.len()
            )));
        }
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(Error::Contract("negative or NaN weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Contract(format!("weights sum to {total}")));
        }
        Ok(DPApproximation {
            atoms,
            weights,
            source_flags,
        })
    }

    pub fn atoms(&self) -> &PointSet {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn source_flags(&self) -> &[bool] {
        &self.source_flags
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms.dim()
    }

    pub fn prior_count(&self) -> usize {
        self.source_flags.iter().filter(|&&f| f).count()
    }

    /// The same random measure written over its distinct support points:
    /// identical atoms are merged and their weights summed. Support points
    /// come out in lexicographic order. Fewer than two distinct atoms is a
    /// degenerate measure.
    pub fn collapsed(&self) -> Result<Self> {
        let d = self.dim();
        let atoms = &self.atoms;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_unstable_by(|&i, &j| lex_cmp(atoms.row(i), atoms.row(j)));
        let mut values = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut flags = Vec::new();
        let mut last: Option<&[f64]> = None;
        for &i in &order {
            let row = atoms.row(i);
            // -0.0 sorts and compares equal to +0.0 here
            if last.is_some_and(|l| l == row) {
                *weights.last_mut().unwrap() += self.weights[i];
                continue;
            }
            values.extend_from_slice(row);
            weights.push(self.weights[i]);
            flags.push(self.source_flags[i]);
            last = Some(row);
        }
        if weights.len() < 2 {
            return Err(Error::degenerate(
                "random measure has a single support point",
            ));
        }
        Ok(DPApproximation {
            atoms: PointSet::from_flat(d, values)?,
            weights,
            source_flags: flags,
        })
    }

    /// Marginal of coordinate `j`: atoms projected, weights unchanged.
    pub fn project(&self, j: usize) -> Result<Self> {
        if j >= self.dim() {
            return Err(Error::param(format!("coordinate {j} out of range")));
        }
        Ok(DPApproximation {
            atoms: PointSet::from_column(self.atoms.column(j))?,
            weights: self.weights.clone(),
            source_flags: self.source_flags.clone(),
        })
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x + 0.0).total_cmp(&(y + 0.0)))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Distinct rows of `data` in lexicographic order, and for every row the
/// index of its distinct value.
pub fn distinct_rows(data: &Dataset) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&i, &j| lex_cmp(data.row(i), data.row(j)).then(i.cmp(&j)));
    let mut reps: Vec<usize> = Vec::new();
    let mut id = vec![0; data.len()];
    for &i in &order {
        if reps.last().is_none_or(|&r| data.row(r) != data.row(i)) {
            reps.push(i);
        }
        id[i] = reps.len() - 1;
    }
    (reps, id)
}

/// A posterior draw already written over its distinct support, distributed
/// exactly as `sample_dp_posterior(..).collapsed()` without jitter.
///
/// Rather than materializing `n_atoms` atoms it draws the number of prior
/// atoms, the multiplicity `c` of each distinct data value among the rest,
/// and then a Gamma(c·α) weight per data value (sums of independent
/// Gamma(α) are Gamma(c·α)) and a Gamma(α) weight per prior atom.
pub fn sample_collapsed_dp_posterior<R: Rng + ?Sized>(
    data: &Dataset,
    prior: &PriorSpec,
    n_atoms: usize,
    rng: &mut R,
) -> Result<DPApproximation> {
    let (reps, id) = distinct_rows(data);
    sample_collapsed_with(data, &reps, &id, prior, n_atoms, rng)
}

pub(crate) fn sample_collapsed_with<R: Rng + ?Sized>(
    data: &Dataset,
    reps: &[usize],
    id: &[usize],
    prior: &PriorSpec,
    n_atoms: usize,
    rng: &mut R,
) -> Result<DPApproximation> {
    let n = data.len();
    let d = data.dim();
    if n < 2 {
        return Err(Error::param(format!(
            "need at least 2 observations, got {n}"
        )));
    }
    if n_atoms < 2 {
        return Err(Error::param(format!(
            "need at least 2 atoms, got {n_atoms}"
        )));
    }
    if prior.base.dim() != d {
        return Err(Error::param(format!(
            "base measure has dimension {}, data has {d}",
            prior.base.dim()
        )));
    }
    let total = prior.concentration + n as f64;
    let alpha = total / n_atoms as f64;
    let p_prior = prior.concentration / total;
    let n_prior = Binomial::new(n_atoms as u64, p_prior)
        .map_err(|e| Error::param(e.to_string()))?
        .sample(rng) as usize;
    let mut counts = vec![0usize; reps.len()];
    for _ in 0..n_atoms - n_prior {
        counts[id[rng.random_range(0..n)]] += 1;
    }

    let support = counts.iter().filter(|&&c| c > 0).count() + n_prior;
    if support < 2 {
        return Err(Error::degenerate(
            "random measure has a single support point",
        ));
    }
    let mut values = Vec::with_capacity(support * d);
    let mut logs = Vec::with_capacity(support);
    let mut flags = Vec::with_capacity(support);
    for (&r, &c) in reps.iter().zip(&counts) {
        if c > 0 {
            values.extend_from_slice(data.row(r));
            logs.push(log_gamma_variate(c as f64 * alpha, rng));
            flags.push(false);
        }
    }
    let mut atom = vec![0.0; d];
    for _ in 0..n_prior {
        prior.base.draw_into(rng, &mut atom);
        values.extend_from_slice(&atom);
        logs.push(log_gamma_variate(alpha, rng));
        flags.push(true);
    }
    Ok(DPApproximation {
        atoms: PointSet::from_flat(d, values)?,
        weights: normalize_log_weights(&logs),
        source_flags: flags,
    })
}

fn normalize_log_weights(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    // The largest term is exactly 1, so the sum is at least 1.
    let sum: f64 = w.iter().sum();
    for x in &mut w {
        *x /= sum;
    }
    w
}

/// Draws `n_atoms` i.i.d. atoms from G_{a,n}: with probability a/(a+n) a
/// fresh draw from the base measure, otherwise a uniformly chosen data row
/// (perturbed by `jitter` when active). Returns the atoms and their
/// source flags (`true` = prior).
pub fn posterior_base_sample<R: Rng + ?Sized>(
    data: &Dataset,
    prior: &PriorSpec,
    n_atoms: usize,
    jitter: JitterPolicy,
    rng: &mut R,
) -> Result<(PointSet, Vec<bool>)> {
    let n = data.len();
    let d = data.dim();
    if n < 2 {
        return Err(Error::param(format!(
            "need at least 2 observations, got {n}"
        )));
    }
    if n_atoms < 2 {
        return Err(Error::param(format!(
            "need at least 2 atoms, got {n_atoms}"
        )));
    }
    if prior.base.dim() != d {
        return Err(Error::param(format!(
            "base measure has dimension {}, data has {d}",
            prior.base.dim()
        )));
    }
    let p_prior = prior.concentration / (prior.concentration + n as f64);
    let sd: Vec<f64> = if jitter.is_active() {
        data.column_std().iter().map(|s| s * jitter.scale).collect()
    } else {
        Vec::new()
    };

    let mut values = vec![0.0; n_atoms * d];
    let mut flags = Vec::with_capacity(n_atoms);
    for atom in values.chunks_exact_mut(d) {
        let from_prior = rng.random::<f64>() < p_prior;
        if from_prior {
            prior.base.draw_into(rng, atom);
        } else {
            atom.copy_from_slice(data.row(rng.random_range(0..n)));
            for (x, s) in atom.iter_mut().zip(&sd) {
                *x += s * rng.sample::<f64, _>(StandardNormal);
            }
        }
        flags.push(from_prior);
    }
    Ok((PointSet::from_flat(d, values)?, flags))
}

/// log of a Gamma(shape, 1) variate. For shape < 1 this uses
/// `G·U^{1/shape}` with `G ~ Gamma(shape + 1)`, kept in log space so tiny
/// shapes never underflow.
pub fn log_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("shape >= 1").sample(rng);
        g.ln()
    } else {
        let g: f64 = Gamma::new(shape + 1.0, 1.0).expect("shape > 0").sample(rng);
        let u: f64 = rng.sample(Open01);
        g.ln() + u.ln() / shape
    }
}

/// Symmetric Dirichlet(total_mass/N, …) weights via normalized Gamma draws.
pub fn dirichlet_weights<R: Rng + ?Sized>(
    n: usize,
    total_mass: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("need at least one weight"));
    }
    if !(total_mass.is_finite() && total_mass > 0.0) {
        return Err(Error::param(format!(
            "total mass must be positive, got {total_mass}"
        )));
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let shape = total_mass / n as f64;
    let logs: Vec<f64> = (0..n).map(|_| log_gamma_variate(shape, rng)).collect();
    Ok(normalize_log_weights(&logs))
}

/// One draw from the finite posterior approximation with `n_atoms` atoms.
pub fn sample_dp_posterior<R: Rng + ?Sized>(
    data: &Dataset,
    prior: &PriorSpec,
    n_atoms: usize,
    jitter: JitterPolicy,
    rng: &mut R,
) -> Result<DPApproximation> {
    let (atoms, flags) = posterior_base_sample(data, prior, n_atoms, jitter, rng)?;
    let weights = dirichlet_weights(n_atoms, prior.concentration + data.len() as f64, rng)?;
    DPApproximation::new(atoms, weights, flags)
}
