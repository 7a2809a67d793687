//! Taxon universe and balanced species/breed sampling.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Taxonomy shipped with the crate.
pub const DEFAULT_TAXONOMY: &str = include_str!("../data/taxonomy.tsv");

/// Families whose species are test-only by default.
pub const DEFAULT_HOLDOUT_FAMILIES: &[&str] = &["Felidae"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rank {
    Species,
    Breed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonRecord {
    pub name: String,
    pub rank: Rank,
    /// Ancestors from broad to narrow: order, family, genus. Empty levels are omitted.
    pub lineage: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    pub holdout: bool,
}

impl TaxonRecord {
    pub fn family(&self) -> Option<&str> {
        self.family.as_deref()
    }
}

#[derive(Debug, Clone)]
pub struct TaxonomyTree {
    records: Vec<TaxonRecord>,
    breeds: Vec<usize>,
    species: Vec<usize>,
    /// Species eligible for training draws (holdout excluded).
    train_species: Vec<usize>,
    holdout_species: Vec<usize>,
}

impl TaxonomyTree {
    /// Parse the tab-separated taxonomy format, flagging species of the given
    /// families as holdout.
    pub fn parse(text: &str, holdout_families: &[&str]) -> Result<Self> {
        let mut records = Vec::new();
        let mut names = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            let at = |msg: String| Error::InvalidData(format!("taxonomy line {}: {msg}", lineno + 1));
            if cols.len() != 5 {
                return Err(at(format!("expected 5 columns, found {}", cols.len())));
            }
            let rank = match cols[0] {
                "species" => Rank::Species,
                "breed" => Rank::Breed,
                other => return Err(at(format!("unknown rank {other:?}"))),
            };
            let name = cols[1];
            if name.is_empty() {
                return Err(at("empty name".into()));
            }
            if !names.insert(name.to_string()) {
                return Err(at(format!("duplicate name {name:?}")));
            }
            let lineage: Vec<String> = cols[2..]
                .iter()
                .filter(|c| !c.is_empty() && **c != "-")
                .map(|c| c.to_string())
                .collect();
            if rank == Rank::Species && lineage.is_empty() {
                return Err(at(format!("species {name:?} has no lineage")));
            }
            let family = Some(cols[3]).filter(|f| !f.is_empty() && *f != "-");
            let holdout = rank == Rank::Species && family.is_some_and(|f| holdout_families.contains(&f));
            records.push(TaxonRecord {
                name: name.to_string(),
                rank,
                lineage,
                family: family.map(String::from),
                holdout,
            });
        }
        let idx = |pred: &dyn Fn(&TaxonRecord) -> bool| -> Vec<usize> {
            records
                .iter()
                .enumerate()
                .filter(|(_, r)| pred(r))
                .map(|(i, _)| i)
                .collect()
        };
        let breeds = idx(&|r| r.rank == Rank::Breed);
        let species = idx(&|r| r.rank == Rank::Species);
        let train_species = idx(&|r| r.rank == Rank::Species && !r.holdout);
        let holdout_species = idx(&|r| r.rank == Rank::Species && r.holdout);
        Ok(Self {
            records,
            breeds,
            species,
            train_species,
            holdout_species,
        })
    }

    pub fn records(&self) -> &[TaxonRecord] {
        &self.records
    }

    pub fn breed_count(&self) -> usize {
        self.breeds.len()
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn holdout_species(&self) -> impl Iterator<Item = &TaxonRecord> {
        self.holdout_species.iter().map(|&i| &self.records[i])
    }

    pub fn get(&self, name: &str) -> Option<&TaxonRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    /// Balanced draw: with probability 1/2 a uniform breed, otherwise a
    /// uniform species (holdout species only when `include_holdout`).
    pub fn sample_taxon<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        include_holdout: bool,
    ) -> Result<&TaxonRecord> {
        let species = if include_holdout {
            &self.species
        } else {
            &self.train_species
        };
        if self.breeds.is_empty() || species.is_empty() {
            return Err(Error::UnsatisfiableSampling(format!(
                "balanced sampling needs breeds and species ({} breeds, {} eligible species)",
                self.breeds.len(),
                species.len()
            )));
        }
        let pool = if rng.random::<bool>() {
            &self.breeds
        } else {
            species
        };
        Ok(&self.records[pool[rng.random_range(0..pool.len())]])
    }

    /// Uniform draw over holdout species, used when generating test splits.
    pub fn sample_holdout<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&TaxonRecord> {
        if self.holdout_species.is_empty() {
            return Err(Error::UnsatisfiableSampling(
                "taxonomy has no holdout species".into(),
            ));
        }
        let i = self.holdout_species[rng.random_range(0..self.holdout_species.len())];
        Ok(&self.records[i])
    }
}

/// Load a taxonomy file, flagging the default holdout families.
pub fn load_taxonomy(path: &Path) -> Result<TaxonomyTree> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TaxonomyTree::parse(&text, DEFAULT_HOLDOUT_FAMILIES)
}

pub fn default_taxonomy() -> TaxonomyTree {
    TaxonomyTree::parse(DEFAULT_TAXONOMY, DEFAULT_HOLDOUT_FAMILIES)
        .expect("shipped taxonomy is valid")
}
