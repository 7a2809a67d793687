//! Per-taxon embedding banks: one row per appearance descriptor.
//!
//! File layout: a single-line JSON header `{"taxon", "d", "descriptors"}`
//! terminated by `\n`, followed by `128 * d` little-endian f32 values in
//! row-major order.

use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const BANK_ROWS: usize = 128;

pub const DEFAULT_DESCRIPTORS: &str = include_str!("../../data/descriptors.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBank {
    taxon: String,
    descriptors: Vec<String>,
    vectors: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct BankHeader {
    taxon: String,
    d: usize,
    descriptors: Vec<String>,
}

impl EmbeddingBank {
    pub fn new(taxon: impl Into<String>, descriptors: Vec<String>, vectors: DMatrix<f64>) -> Result<Self> {
        let taxon = taxon.into();
        if vectors.nrows() != BANK_ROWS || descriptors.len() != BANK_ROWS {
            return Err(Error::InvalidData(format!(
                "bank for '{taxon}' needs {BANK_ROWS} rows and descriptors, got {} and {}",
                vectors.nrows(),
                descriptors.len()
            )));
        }
        if vectors.ncols() == 0 {
            return Err(Error::InvalidData(format!("bank for '{taxon}' has zero dimension")));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("bank for '{taxon}' contains non-finite values")));
        }
        Ok(Self { taxon, descriptors, vectors })
    }

    pub fn taxon(&self) -> &str {
        &self.taxon
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn descriptors(&self) -> &[String] {
        &self.descriptors
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn encode(&self) -> Vec<u8> {
        let header = BankHeader {
            taxon: self.taxon.clone(),
            d: self.dim(),
            descriptors: self.descriptors.clone(),
        };
        let mut out = serde_json::to_vec(&header).expect("bank header serializes");
        out.push(b'\n');
        for r in 0..BANK_ROWS {
            for c in 0..self.dim() {
                out.extend_from_slice(&(self.vectors[(r, c)] as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let split = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::InvalidData("embedding bank has no header line".into()))?;
        let header: BankHeader = serde_json::from_slice(&bytes[..split])
            .map_err(|e| Error::InvalidData(format!("embedding bank header: {e}")))?;
        let body = &bytes[split + 1..];
        if body.len() != BANK_ROWS * header.d * 4 {
            return Err(Error::InvalidData(format!(
                "embedding bank for '{}' has {} payload bytes, expected {}",
                header.taxon,
                body.len(),
                BANK_ROWS * header.d * 4
            )));
        }
        let values: Vec<f64> = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        let vectors = DMatrix::from_row_slice(BANK_ROWS, header.d, &values);
        Self::new(header.taxon, header.descriptors, vectors)
    }
}

pub fn load_bank(path: &Path) -> Result<EmbeddingBank> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    EmbeddingBank::decode(&bytes)
}

pub fn write_bank(path: &Path, bank: &EmbeddingBank) -> Result<()> {
    std::fs::write(path, bank.encode()).map_err(|e| Error::io(path, e))
}

pub fn default_descriptors() -> Vec<String> {
    DEFAULT_DESCRIPTORS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

/// Text fed to the embedding model for one (descriptor, taxon) pair.
pub fn embedding_prompt(descriptor: &str, taxon: &str) -> String {
    format!("A photo of a {descriptor} {taxon}.")
}

fn hashed_gaussian(key: &str, dim: usize) -> Vec<f64> {
    let seed: [u8; 32] = Sha256::digest(key.as_bytes()).into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Offline stand-in for a text encoder: each prompt maps to a unit vector made
/// of a taxon component, a descriptor component and a prompt-specific part.
pub fn synthetic_bank(taxon: &str, descriptors: &[String], dim: usize) -> Result<EmbeddingBank> {
    if dim == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
    }
    let base = hashed_gaussian(&format!("taxon:{taxon}"), dim);
    let mut rows = Vec::with_capacity(BANK_ROWS * dim);
    for d in descriptors {
        let desc = hashed_gaussian(&format!("descriptor:{d}"), dim);
        let own = hashed_gaussian(&embedding_prompt(d, taxon), dim);
        let v: Vec<f64> = (0..dim)
            .map(|k| base[k] + 0.35 * desc[k] + 0.15 * own[k])
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        rows.extend(v.iter().map(|x| x / norm));
    }
    let n = descriptors.len();
    EmbeddingBank::new(taxon, descriptors.to_vec(), DMatrix::from_row_slice(n, dim, &rows))
}
