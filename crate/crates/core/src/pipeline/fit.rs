//! Fitting shape priors from a directory of embedding banks.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::shape::prior::{fit_gaussian, DEFAULT_PRIOR_KEY};
use crate::shape::{fit_prior, load_bank, EmbeddingBank, PriorSet};

pub const BANK_EXTENSION: &str = "bank";

pub fn bank_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == BANK_EXTENSION))
        .collect();
    files.sort();
    Ok(files)
}

/// One prior per bank plus a `default` prior fitted to all rows pooled.
pub fn fit_priors(banks: &[EmbeddingBank], relative_shrinkage: f64) -> Result<PriorSet> {
    let first = banks
        .first()
        .ok_or_else(|| Error::InvalidData("no embedding banks to fit".into()))?;
    let dim = first.dim();
    let mut set = PriorSet::new(dim);
    for bank in banks {
        if bank.dim() != dim {
            return Err(Error::InvalidData(format!(
                "bank '{}' has dimension {}, expected {dim}",
                bank.taxon(),
                bank.dim()
            )));
        }
        if set.priors.contains_key(bank.taxon()) {
            return Err(Error::InvalidData(format!("two banks for taxon '{}'", bank.taxon())));
        }
        let prior = if relative_shrinkage == crate::shape::prior::DEFAULT_RELATIVE_SHRINKAGE {
            fit_prior(bank)?
        } else {
            fit_gaussian(bank.vectors(), relative_shrinkage)?
        };
        set.insert(bank.taxon(), prior)?;
    }
    let rows: usize = banks.iter().map(|b| b.vectors().nrows()).sum();
    let mut pooled = DMatrix::zeros(rows, dim);
    let mut r0 = 0;
    for bank in banks {
        let n = bank.vectors().nrows();
        pooled.rows_mut(r0, n).copy_from(bank.vectors());
        r0 += n;
    }
    if !set.priors.contains_key(DEFAULT_PRIOR_KEY) {
        set.insert(DEFAULT_PRIOR_KEY, fit_gaussian(&pooled, relative_shrinkage)?)?;
    }
    Ok(set)
}

pub fn fit_priors_from_dir(dir: &Path, relative_shrinkage: f64) -> Result<PriorSet> {
    let banks = bank_files(dir)?
        .iter()
        .map(|p| load_bank(p).map_err(|e| Error::InvalidData(format!("{}: {e}", p.display()))))
        .collect::<Result<Vec<_>>>()?;
    log::info!("fitting priors for {} banks from {}", banks.len(), dir.display());
    fit_priors(&banks, relative_shrinkage)
}
