//! Banks of pseudo-poses, sampled with replacement or exclusively.
//!
//! File format: JSON lines, one pose per line:
//! `{"rotations": [[x,y,z], ...], "translation": [x,y,z], "source": "..."}`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PoseParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub rotations: Vec<[f64; 3]>,
    pub translation: [f64; 3],
    #[serde(default)]
    pub source: String,
}

#[derive(Debug, Clone)]
pub struct PoseBank {
    poses: Vec<PoseParams>,
    sources: Vec<String>,
    source_tag: String,
    used: Vec<bool>,
}

impl PoseBank {
    /// Canonicalizes every pose and checks it has `n_joints` rotations.
    pub fn new(records: Vec<PoseRecord>, n_joints: usize, source_tag: impl Into<String>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidData("pose bank is empty".into()));
        }
        let mut poses = Vec::with_capacity(records.len());
        let mut sources = Vec::with_capacity(records.len());
        for (i, r) in records.into_iter().enumerate() {
            if r.rotations.len() != n_joints {
                return Err(Error::InvalidData(format!(
                    "pose {i} has {} rotations, expected {n_joints}",
                    r.rotations.len()
                )));
            }
            let pose = PoseParams { rotations: r.rotations, translation: r.translation }
                .canonicalized()
                .map_err(|e| Error::InvalidData(format!("pose {i}: {e}")))?;
            poses.push(pose);
            sources.push(r.source);
        }
        let used = vec![false; poses.len()];
        Ok(Self { poses, sources, source_tag: source_tag.into(), used })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn pose(&self, index: usize) -> Option<&PoseParams> {
        self.poses.get(index)
    }

    pub fn source(&self, index: usize) -> Option<&str> {
        self.sources.get(index).map(String::as_str)
    }

    pub fn remaining(&self) -> usize {
        self.used.iter().filter(|u| !**u).count()
    }

    pub fn is_used(&self, index: usize) -> bool {
        self.used[index]
    }

    /// Marks poses as consumed, e.g. to keep training draws off test poses.
    pub fn reserve(&mut self, indices: impl IntoIterator<Item = usize>) -> Result<()> {
        for i in indices {
            let slot = self
                .used
                .get_mut(i)
                .ok_or_else(|| Error::InvalidArgument(format!("pose index {i} out of range")))?;
            *slot = true;
        }
        Ok(())
    }

    pub fn reset(&mut self) {
        self.used.fill(false);
    }

    /// Uniform draw over all poses, ignoring the used flags.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.poses.len())
    }

    /// Uniform draw over unused poses, marking the result as used.
    pub fn sample_exclusive_index<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        let free: Vec<usize> = (0..self.used.len()).filter(|&i| !self.used[i]).collect();
        if free.is_empty() {
            return Err(Error::UnsatisfiableSampling(format!(
                "all {} poses of bank '{}' are used",
                self.poses.len(),
                self.source_tag
            )));
        }
        let idx = free[rng.random_range(0..free.len())];
        self.used[idx] = true;
        Ok(idx)
    }

    /// Returns `(index, pose)`.
    pub fn sample_pose<R: Rng + ?Sized>(&mut self, rng: &mut R, exclusive: bool) -> Result<(usize, PoseParams)> {
        let idx = if exclusive {
            self.sample_exclusive_index(rng)?
        } else {
            self.sample_index(rng)
        };
        Ok((idx, self.poses[idx].clone()))
    }

    pub fn records(&self) -> Vec<PoseRecord> {
        self.poses
            .iter()
            .zip(&self.sources)
            .map(|(p, s)| PoseRecord {
                rotations: p.rotations.clone(),
                translation: p.translation,
                source: s.clone(),
            })
            .collect()
    }
}

pub fn parse_pose_records(text: &str) -> Result<Vec<PoseRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| Error::InvalidData(format!("pose line {}: {e}", n + 1)))
        })
        .collect()
}

pub fn load_pose_bank(path: &Path, n_joints: usize) -> Result<PoseBank> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        text.push_str(&line.map_err(|e| Error::io(path, e))?);
        text.push('\n');
    }
    let bank = PoseBank::new(parse_pose_records(&text)?, n_joints, path.display().to_string())?;
    log::info!("loaded {} poses from {}", bank.len(), path.display());
    Ok(bank)
}

pub fn write_pose_records(path: &Path, records: &[PoseRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}
