use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::PoseParams;
use crate::prompt::Construction;
use crate::render::CameraSpec;
use crate::taxonomy::Rank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
}

impl std::fmt::Display for SplitTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Train => "train",
            Self::Test => "test",
        })
    }
}

impl std::str::FromStr for SplitTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Self::Train),
            "test" => Ok(Self::Test),
            other => Err(format!("unknown split '{other}', expected train or test")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub sample: u64,
}

/// Paths relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFiles {
    pub image: String,
    pub depth: String,
    pub depth_control: String,
    pub canny: String,
    pub shaded: String,
}

impl SampleFiles {
    pub fn for_sample(sample_id: &str) -> Self {
        let dir = format!("samples/{sample_id}");
        Self {
            image: format!("{dir}/image.png"),
            depth: format!("{dir}/depth.pfm"),
            depth_control: format!("{dir}/depth.png"),
            canny: format!("{dir}/canny.png"),
            shaded: format!("{dir}/shaded.png"),
        }
    }

    pub fn all(&self) -> [&str; 5] {
        [&self.image, &self.depth, &self.depth_control, &self.canny, &self.shaded]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_index: u64,
    pub sample_id: String,
    pub taxon: String,
    pub rank: Rank,
    pub family: String,
    pub betas: Vec<f64>,
    pub pose: PoseParams,
    pub pose_index: usize,
    pub camera: CameraSpec,
    pub prompt: String,
    pub construction: Construction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    pub camera_setting: String,
    pub scenery: String,
    pub seeds: Seeds,
    pub files: SampleFiles,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitTag>,
    /// Steps that fell back to a weaker variant, e.g. a failed caption.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub downgrades: Vec<String>,
}

fn index_digest(master_seed: u64, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"zoosynth-sample");
    h.update(master_seed.to_le_bytes());
    h.update(index.to_le_bytes());
    h.finalize().into()
}

/// Stable id derived from the master seed and sample index.
pub fn sample_id(master_seed: u64, index: u64) -> String {
    index_digest(master_seed, index)[..12]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Per-sample seed derived from the same hash as [`sample_id`].
pub fn sample_seed(master_seed: u64, index: u64) -> u64 {
    let d = index_digest(master_seed, index);
    u64::from_le_bytes(d[24..32].try_into().expect("8 bytes"))
}

/// Full 32-byte key for seeding per-sample random streams.
pub fn sample_key(master_seed: u64, index: u64) -> [u8; 32] {
    index_digest(master_seed, index)
}
