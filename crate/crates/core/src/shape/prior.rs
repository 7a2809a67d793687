//! Gaussian priors over embedding space with diagonal shrinkage.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bank::EmbeddingBank;
use crate::error::{Error, Result};

pub const DEFAULT_RELATIVE_SHRINKAGE: f64 = 1e-4;
/// Lower bound on the shrinkage so zero-variance banks still factor.
pub const SHRINKAGE_FLOOR: f64 = 1e-12;
pub const PRIORS_VERSION: u32 = 1;
pub const DEFAULT_PRIOR_KEY: &str = "default";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorRecord", into = "PriorRecord")]
pub struct GaussianShapePrior {
    mean: DVector<f64>,
    cov_factor: DMatrix<f64>,
    shrinkage: f64,
}

#[derive(Serialize, Deserialize)]
struct PriorRecord {
    mean: Vec<f64>,
    cov_factor: Vec<Vec<f64>>,
    shrinkage: f64,
}

impl TryFrom<PriorRecord> for GaussianShapePrior {
    type Error = Error;

    fn try_from(r: PriorRecord) -> Result<Self> {
        let d = r.mean.len();
        if r.cov_factor.len() != d || r.cov_factor.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidData(format!("covariance factor must be {d}x{d}")));
        }
        let flat: Vec<f64> = r.cov_factor.into_iter().flatten().collect();
        Self::new(DVector::from_vec(r.mean), DMatrix::from_row_slice(d, d, &flat), r.shrinkage)
    }
}

impl From<GaussianShapePrior> for PriorRecord {
    fn from(p: GaussianShapePrior) -> Self {
        let d = p.dim();
        Self {
            mean: p.mean.iter().copied().collect(),
            cov_factor: (0..d)
                .map(|i| (0..d).map(|j| p.cov_factor[(i, j)]).collect())
                .collect(),
            shrinkage: p.shrinkage,
        }
    }
}

impl GaussianShapePrior {
    pub fn new(mean: DVector<f64>, cov_factor: DMatrix<f64>, shrinkage: f64) -> Result<Self> {
        let d = mean.len();
        if d == 0 || cov_factor.shape() != (d, d) {
            return Err(Error::InvalidData(format!(
                "prior dimension mismatch: mean {d}, factor {:?}",
                cov_factor.shape()
            )));
        }
        if mean.iter().chain(cov_factor.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("prior contains non-finite values".into()));
        }
        for i in 0..d {
            if !(cov_factor[(i, i)] > 0.0) {
                return Err(Error::InvalidData(format!("factor diagonal {i} is not positive")));
            }
            if (i + 1..d).any(|j| cov_factor[(i, j)] != 0.0) {
                return Err(Error::InvalidData("covariance factor is not lower-triangular".into()));
            }
        }
        Ok(Self { mean, cov_factor, shrinkage })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov_factor(&self) -> &DMatrix<f64> {
        &self.cov_factor
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.cov_factor * self.cov_factor.transpose()
    }
}

/// Column means summed in sorted order, so the result does not depend on row order.
pub fn column_means(rows: &DMatrix<f64>) -> DVector<f64> {
    let n = rows.nrows() as f64;
    DVector::from_iterator(
        rows.ncols(),
        rows.column_iter().map(|col| {
            let mut v: Vec<f64> = col.iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v.iter().sum::<f64>() / n
        }),
    )
}

/// Sample covariance with an `n - 1` denominator (zero for a single row).
pub fn sample_covariance(rows: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let n = rows.nrows();
    let mut centered = rows.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    if n < 2 {
        return DMatrix::zeros(rows.ncols(), rows.ncols());
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    (&cov + cov.transpose()) * 0.5
}

/// Fit a Gaussian to the rows of `rows`, adding `relative * trace / d` to the
/// diagonal before factoring.
pub fn fit_gaussian(rows: &DMatrix<f64>, relative_shrinkage: f64) -> Result<GaussianShapePrior> {
    if rows.nrows() == 0 || rows.ncols() == 0 {
        return Err(Error::InvalidData("cannot fit a prior to an empty sample".into()));
    }
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("embedding rows contain non-finite values".into()));
    }
    if !(relative_shrinkage >= 0.0) {
        return Err(Error::InvalidArgument(format!("shrinkage must be non-negative, got {relative_shrinkage}")));
    }
    let d = rows.ncols();
    let mean = column_means(rows);
    let cov = sample_covariance(rows, &mean);
    let eps = (relative_shrinkage * cov.trace() / d as f64).max(SHRINKAGE_FLOOR);
    let shrunk = cov + DMatrix::identity(d, d) * eps;
    let chol = shrunk
        .cholesky()
        .ok_or_else(|| Error::DegenerateInput("shrunk covariance is not positive-definite".into()))?;
    GaussianShapePrior::new(mean, chol.l(), eps)
}

pub fn fit_prior(bank: &EmbeddingBank) -> Result<GaussianShapePrior> {
    fit_gaussian(bank.vectors(), DEFAULT_RELATIVE_SHRINKAGE)
}

/// Draw `mean + L z` with `z` standard normal.
pub fn sample_embedding<R: Rng + ?Sized>(prior: &GaussianShapePrior, rng: &mut R) -> DVector<f64> {
    let z = DVector::from_iterator(prior.dim(), (0..prior.dim()).map(|_| StandardNormal.sample(rng)));
    &prior.mean + &prior.cov_factor * z
}

/// A collection of per-taxon priors, optionally with a fallback entry keyed
/// `"default"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSet {
    pub version: u32,
    pub dim: usize,
    pub priors: BTreeMap<String, GaussianShapePrior>,
}

impl PriorSet {
    pub fn new(dim: usize) -> Self {
        Self { version: PRIORS_VERSION, dim, priors: BTreeMap::new() }
    }

    pub fn insert(&mut self, taxon: impl Into<String>, prior: GaussianShapePrior) -> Result<()> {
        if prior.dim() != self.dim {
            return Err(Error::InvalidData(format!(
                "prior dimension {} differs from set dimension {}",
                prior.dim(),
                self.dim
            )));
        }
        self.priors.insert(taxon.into(), prior);
        Ok(())
    }

    pub fn get(&self, taxon: &str) -> Option<&GaussianShapePrior> {
        self.priors.get(taxon).or_else(|| self.priors.get(DEFAULT_PRIOR_KEY))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != PRIORS_VERSION {
            return Err(Error::InvalidData(format!("unsupported priors version {}", self.version)));
        }
        if let Some((name, _)) = self.priors.iter().find(|(_, p)| p.dim() != self.dim) {
            return Err(Error::InvalidData(format!("prior '{name}' has the wrong dimension")));
        }
        Ok(())
    }
}

pub fn load_priors(path: &Path) -> Result<PriorSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let set: PriorSet = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?;
    set.validate()?;
    Ok(set)
}

pub fn write_priors(path: &Path, set: &PriorSet) -> Result<()> {
    let text = serde_json::to_string(set)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
