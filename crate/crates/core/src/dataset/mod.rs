//! Sample records, manifests and splits.

pub mod manifest;
pub mod record;
pub mod split;

pub use manifest::{Manifest, ManifestHeader, ManifestWriter, MANIFEST_FILE};
pub use record::{sample_id, sample_key, sample_seed, SampleFiles, SampleRecord, Seeds, SplitTag};
pub use split::{build_split, SplitSpec};
