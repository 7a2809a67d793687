//! JSON-lines manifests: a header line followed by one record per line.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::record::SampleRecord;
use crate::error::{Error, Result};

pub const MANIFEST_SCHEMA: &str = "zoosynth-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub schema: String,
    pub version: u32,
    pub master_seed: u64,
    pub config: serde_json::Value,
    pub module_versions: BTreeMap<String, String>,
}

impl ManifestHeader {
    pub fn new(master_seed: u64, config: serde_json::Value) -> Self {
        Self {
            schema: MANIFEST_SCHEMA.into(),
            version: MANIFEST_VERSION,
            master_seed,
            config,
            module_versions: module_versions(),
        }
    }
}

pub fn module_versions() -> BTreeMap<String, String> {
    let v = env!("CARGO_PKG_VERSION");
    [
        ("zoosynth", v),
        ("body-model-container", "1"),
        ("manifest", "1"),
        ("renderer", "1"),
        ("embedding-bank", "1"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub records: Vec<SampleRecord>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::InvalidData("manifest is empty".into()))?;
        let header: ManifestHeader = serde_json::from_str(first)
            .map_err(|e| Error::InvalidData(format!("manifest header: {e}")))?;
        if header.schema != MANIFEST_SCHEMA || header.version != MANIFEST_VERSION {
            return Err(Error::InvalidData(format!(
                "unsupported manifest schema {} v{}",
                header.schema, header.version
            )));
        }
        let records = lines
            .map(|(n, l)| {
                serde_json::from_str(l)
                    .map_err(|e| Error::InvalidData(format!("manifest line {}: {e}", n + 1)))
            })
            .collect::<Result<Vec<SampleRecord>>>()?;
        Ok(Self { header, records })
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = serde_json::to_string(&self.header)?;
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Writes through a temporary file and renames it into place.
    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("jsonl.tmp");
        std::fs::write(&tmp, self.to_jsonl()?).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn find(&self, sample_id: &str) -> Option<&SampleRecord> {
        self.records.iter().find(|r| r.sample_id == sample_id)
    }

    /// Checks id uniqueness and, given the dataset root, that every referenced file exists.
    pub fn verify(&self, root: Option<&Path>) -> Result<()> {
        let mut ids = HashSet::new();
        for r in &self.records {
            if !ids.insert(&r.sample_id) {
                return Err(Error::Integrity(format!("duplicate sample id {}", r.sample_id)));
            }
            if let Some(root) = root {
                check_files(root, r)?;
            }
        }
        Ok(())
    }
}

fn check_files(root: &Path, record: &SampleRecord) -> Result<()> {
    for rel in record.files.all() {
        if !root.join(rel).is_file() {
            return Err(Error::Integrity(format!(
                "sample {} references missing file {rel}",
                record.sample_id
            )));
        }
    }
    Ok(())
}

struct WriterState {
    out: BufWriter<File>,
    ids: HashSet<String>,
    records: Vec<SampleRecord>,
}

/// Appends records to `<root>/manifest.jsonl`. Safe to share between threads;
/// appends are serialized.
pub struct ManifestWriter {
    root: PathBuf,
    path: PathBuf,
    header: ManifestHeader,
    state: Mutex<WriterState>,
}

impl ManifestWriter {
    pub fn create(root: &Path, header: ManifestHeader) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let path = root.join(MANIFEST_FILE);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        out.flush().map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            path,
            header,
            state: Mutex::new(WriterState { out, ids: HashSet::new(), records: Vec::new() }),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record after checking its files exist; call once the
    /// sample's images are on disk. Returns the manifest line.
    pub fn write_sample(&self, record: SampleRecord) -> Result<String> {
        check_files(&self.root, &record)?;
        let line = serde_json::to_string(&record)?;
        let mut st = self.state.lock().expect("manifest writer poisoned");
        if st.ids.contains(&record.sample_id) {
            return Err(Error::Integrity(format!("duplicate sample id {}", record.sample_id)));
        }
        st.out
            .write_all(line.as_bytes())
            .and_then(|_| st.out.write_all(b"\n"))
            .and_then(|_| st.out.flush())
            .map_err(|e| Error::io(&self.path, e))?;
        st.ids.insert(record.sample_id.clone());
        st.records.push(record);
        Ok(line)
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("manifest writer poisoned").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rewrites the manifest sorted by sample index after re-checking files.
    pub fn finalize(self) -> Result<Manifest> {
        let st = self.state.into_inner().expect("manifest writer poisoned");
        drop(st.out);
        let mut records = st.records;
        records.sort_by_key(|r| r.sample_index);
        let manifest = Manifest { header: self.header, records };
        manifest.verify(Some(&self.root))?;
        manifest.write(&self.path)?;
        Ok(manifest)
    }
}
