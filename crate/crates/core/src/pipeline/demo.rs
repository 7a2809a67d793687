//! Self-contained demo assets: the capsule quadruped, a synthetic pose bank,
//! synthetic embedding banks, fitted priors, a reference decoder and a config.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{AssetPaths, Config};
use super::fit::{fit_priors, BANK_EXTENSION};
use crate::error::{Error, Result};
use crate::model::capsule::{capsule_quadruped, N_BETAS};
use crate::model::container::write_asset;
use crate::pose_bank::{write_pose_records, PoseRecord};
use crate::shape::prior::DEFAULT_RELATIVE_SHRINKAGE;
use crate::shape::{default_descriptors, synthetic_bank, write_bank, write_priors, AffineDecoder};
use crate::taxonomy::default_taxonomy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoOptions {
    pub n_poses: usize,
    pub embedding_dim: usize,
    pub seed: u64,
    /// Also write every synthetic bank file (otherwise only the fitted priors).
    pub write_banks: bool,
}

impl Default for DemoOptions {
    fn default() -> Self {
        Self { n_poses: 500, embedding_dim: 16, seed: 7, write_banks: true }
    }
}

/// Per-joint half-ranges (radians) about x, y, z for the capsule skeleton.
const CAPSULE_POSE_RANGES: [[f64; 3]; 9] = [
    [0.10, 0.45, 0.15],
    [0.15, 0.35, 0.40],
    [0.10, 0.30, 0.30],
    [0.20, 0.60, 0.60],
    [0.20, 0.50, 0.50],
    [0.15, 0.10, 0.55],
    [0.15, 0.10, 0.55],
    [0.15, 0.10, 0.55],
    [0.15, 0.10, 0.55],
];

pub fn demo_pose_records(n: usize, seed: u64) -> Vec<PoseRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| PoseRecord {
            rotations: CAPSULE_POSE_RANGES
                .iter()
                .map(|r| [0, 1, 2].map(|k| rng.random_range(-r[k]..=r[k])))
                .collect(),
            translation: [0.0; 3],
            source: format!("synthetic-{i}"),
        })
        .collect()
}

fn file_name(taxon: &str) -> String {
    let s: String = taxon
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    format!("{s}.{BANK_EXTENSION}")
}

/// Writes the demo asset set into `dir` and returns the config path.
pub fn write_demo_assets(dir: &Path, opts: &DemoOptions) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let asset = capsule_quadruped();
    write_asset(&asset, &dir.join("body_model.zsb"))?;
    write_pose_records(&dir.join("poses.jsonl"), &demo_pose_records(opts.n_poses, opts.seed))?;

    let descriptors = default_descriptors();
    let taxonomy = default_taxonomy();
    let banks = taxonomy
        .records()
        .iter()
        .map(|r| synthetic_bank(&r.name, &descriptors, opts.embedding_dim))
        .collect::<Result<Vec<_>>>()?;
    if opts.write_banks {
        let bank_dir = dir.join("banks");
        std::fs::create_dir_all(&bank_dir).map_err(|e| Error::io(&bank_dir, e))?;
        for b in &banks {
            write_bank(&bank_dir.join(file_name(b.taxon())), b)?;
        }
    }
    write_priors(&dir.join("priors.json"), &fit_priors(&banks, DEFAULT_RELATIVE_SHRINKAGE)?)?;

    let decoder = AffineDecoder::reference(N_BETAS, opts.embedding_dim, opts.seed);
    let decoder_path = dir.join("decoder.json");
    std::fs::write(&decoder_path, serde_json::to_string_pretty(&decoder.to_spec())?)
        .map_err(|e| Error::io(&decoder_path, e))?;

    let config = Config {
        assets: AssetPaths {
            body_model: "body_model.zsb".into(),
            pose_bank: "poses.jsonl".into(),
            priors: "priors.json".into(),
            decoder: "decoder.json".into(),
            taxonomy: None,
            camera_settings: None,
            sceneries: None,
            holdout_families: crate::taxonomy::DEFAULT_HOLDOUT_FAMILIES.iter().map(|s| s.to_string()).collect(),
        },
        generation: Default::default(),
        camera: Default::default(),
        shading: Default::default(),
        canny: Default::default(),
        controls: Default::default(),
        ablations: Default::default(),
        backend: crate::genclient::ServiceSpec::Stub,
        chat: crate::genclient::ServiceSpec::Stub,
        partition: Default::default(),
    };
    let config_path = dir.join("zoosynth.toml");
    std::fs::write(&config_path, config.to_toml()?).map_err(|e| Error::io(&config_path, e))?;
    Ok(config_path)
}
