//! Single-file body-model container.
//!
//! Layout: the 8-byte magic `ZSBODY01`, a little-endian `u64` header length,
//! a UTF-8 JSON header, then the array payloads back to back. Float arrays are
//! little-endian `f64`; index arrays (`faces`, `parents`) are little-endian
//! `i64`, with `-1` marking the root in `parents`. Matrices are row-major.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::asset::{AssetParts, BodyModelAsset, JointTags};

pub const MAGIC: &[u8; 8] = b"ZSBODY01";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F64,
    I64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<usize>,
    /// Byte offset into the payload section.
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContainerHeader {
    pub format: String,
    pub version: u32,
    pub n_v: usize,
    pub n_b: usize,
    pub n_j: usize,
    pub n_f: usize,
    pub joint_names: Vec<String>,
    pub tags: JointTags,
    pub arrays: Vec<ArrayEntry>,
}

const FORMAT_NAME: &str = "zoosynth-body-model";

pub fn write_asset(asset: &BodyModelAsset, path: &Path) -> Result<()> {
    let bytes = encode_asset(asset);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_asset(path: &Path) -> Result<BodyModelAsset> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_asset(&bytes)
}

pub fn encode_asset(asset: &BodyModelAsset) -> Vec<u8> {
    let n_v = asset.n_vertices();
    let n_j = asset.n_joints();
    let n_b = asset.n_betas();

    let mut payload: Vec<u8> = Vec::new();
    let mut arrays = Vec::new();
    let mut push_f64 = |name: &str, shape: Vec<usize>, data: &mut dyn Iterator<Item = f64>| {
        let offset = payload.len();
        for x in data {
            payload.extend_from_slice(&x.to_le_bytes());
        }
        arrays.push(ArrayEntry {
            name: name.into(),
            dtype: DType::F64,
            shape,
            offset,
        });
    };

    push_f64(
        "template_vertices",
        vec![n_v, 3],
        &mut asset.template_vertices().iter().flat_map(|v| [v.x, v.y, v.z]),
    );
    let row_major = |m: &DMatrix<f64>| -> Vec<f64> {
        m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect()
    };
    push_f64(
        "shape_basis",
        vec![3 * n_v, n_b],
        &mut row_major(asset.shape_basis()).into_iter(),
    );
    push_f64(
        "skinning_weights",
        vec![n_v, n_j],
        &mut row_major(asset.skinning_weights()).into_iter(),
    );
    push_f64(
        "joint_regressor",
        vec![n_j, n_v],
        &mut row_major(asset.joint_regressor()).into_iter(),
    );

    let mut push_i64 = |name: &str, shape: Vec<usize>, data: Vec<i64>| {
        let offset = payload.len();
        for x in data {
            payload.extend_from_slice(&x.to_le_bytes());
        }
        arrays.push(ArrayEntry {
            name: name.into(),
            dtype: DType::I64,
            shape,
            offset,
        });
    };
    push_i64(
        "faces",
        vec![asset.faces().len(), 3],
        asset.faces().iter().flat_map(|f| f.map(i64::from)).collect(),
    );
    push_i64(
        "parents",
        vec![n_j],
        asset
            .parents()
            .iter()
            .map(|p| p.map_or(-1, |p| p as i64))
            .collect(),
    );

    let header = ContainerHeader {
        format: FORMAT_NAME.into(),
        version: 1,
        n_v,
        n_b,
        n_j,
        n_f: asset.faces().len(),
        joint_names: asset.joint_names().to_vec(),
        tags: asset.tags().clone(),
        arrays,
    };
    let header_json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + header_json.len() + payload.len());
    out.write_all(MAGIC).unwrap();
    out.write_all(&(header_json.len() as u64).to_le_bytes()).unwrap();
    out.write_all(&header_json).unwrap();
    out.write_all(&payload).unwrap();
    out
}

pub fn decode_asset(bytes: &[u8]) -> Result<BodyModelAsset> {
    let bad = |msg: String| Error::InvalidAsset(msg);
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("missing body-model magic".into()));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let header_end = 16usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| bad("header length exceeds file size".into()))?;
    let header: ContainerHeader = serde_json::from_slice(&bytes[16..header_end])
        .map_err(|e| bad(format!("header: {e}")))?;
    if header.format != FORMAT_NAME || header.version != 1 {
        return Err(bad(format!(
            "unsupported container {} v{}",
            header.format, header.version
        )));
    }
    let payload = &bytes[header_end..];
    let (n_v, n_b, n_j, n_f) = (header.n_v, header.n_b, header.n_j, header.n_f);

    let entry = |name: &str, dtype: DType, shape: &[usize]| -> Result<&[u8]> {
        let e = header
            .arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| bad(format!("array {name} missing")))?;
        if e.dtype != dtype || e.shape != shape {
            return Err(bad(format!(
                "array {name} is {:?}{:?}, expected {dtype:?}{shape:?}",
                e.dtype, e.shape
            )));
        }
        let len = shape.iter().product::<usize>() * 8;
        payload
            .get(e.offset..e.offset + len)
            .ok_or_else(|| bad(format!("array {name} runs past end of file")))
    };
    let f64s = |b: &[u8]| -> Vec<f64> {
        b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    let i64s = |b: &[u8]| -> Vec<i64> {
        b.chunks_exact(8)
            .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };

    let template = f64s(entry("template_vertices", DType::F64, &[n_v, 3])?);
    let template_vertices = template
        .chunks_exact(3)
        .map(|c| Vector3::new(c[0], c[1], c[2]))
        .collect();
    let shape_basis = DMatrix::from_row_slice(
        3 * n_v,
        n_b,
        &f64s(entry("shape_basis", DType::F64, &[3 * n_v, n_b])?),
    );
    let skinning_weights = DMatrix::from_row_slice(
        n_v,
        n_j,
        &f64s(entry("skinning_weights", DType::F64, &[n_v, n_j])?),
    );
    let joint_regressor = DMatrix::from_row_slice(
        n_j,
        n_v,
        &f64s(entry("joint_regressor", DType::F64, &[n_j, n_v])?),
    );
    let faces = i64s(entry("faces", DType::I64, &[n_f, 3])?)
        .chunks_exact(3)
        .map(|c| {
            let idx = |x: i64| u32::try_from(x).map_err(|_| bad(format!("bad face index {x}")));
            Ok([idx(c[0])?, idx(c[1])?, idx(c[2])?])
        })
        .collect::<Result<Vec<_>>>()?;
    let parents = i64s(entry("parents", DType::I64, &[n_j])?)
        .into_iter()
        .map(|p| match p {
            -1 => Ok(None),
            p if p >= 0 => Ok(Some(p as usize)),
            p => Err(bad(format!("bad parent index {p}"))),
        })
        .collect::<Result<Vec<_>>>()?;

    BodyModelAsset::new(AssetParts {
        template_vertices,
        faces,
        shape_basis,
        skinning_weights,
        joint_regressor,
        parents,
        joint_names: header.joint_names,
        tags: header.tags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::capsule::capsule_quadruped;

    #[test]
    fn round_trip_preserves_arrays() {
        let asset = capsule_quadruped();
        let back = decode_asset(&encode_asset(&asset)).unwrap();
        assert_eq!(back.template_vertices(), asset.template_vertices());
        assert_eq!(back.faces(), asset.faces());
        assert_eq!(back.shape_basis(), asset.shape_basis());
        assert_eq!(back.skinning_weights(), asset.skinning_weights());
        assert_eq!(back.joint_regressor(), asset.joint_regressor());
        assert_eq!(back.parents(), asset.parents());
        assert_eq!(back.joint_names(), asset.joint_names());
        assert_eq!(back.tags(), asset.tags());
    }

    #[test]
    fn truncated_file_is_rejected() {
        let bytes = encode_asset(&capsule_quadruped());
        assert!(decode_asset(&bytes[..bytes.len() - 8]).is_err());
        assert!(decode_asset(b"not an asset at all").is_err());
    }

    #[test]
    fn invariant_violation_is_caught_on_load() {
        let mut bytes = encode_asset(&capsule_quadruped());
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let header: ContainerHeader = serde_json::from_slice(&bytes[16..16 + header_len]).unwrap();
        let regressor = header
            .arrays
            .iter()
            .find(|a| a.name == "joint_regressor")
            .unwrap();
        let off = 16 + header_len + regressor.offset;
        let v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()) + 0.5;
        bytes[off..off + 8].copy_from_slice(&v.to_le_bytes());
        assert!(matches!(decode_asset(&bytes), Err(Error::InvalidAsset(_))));
    }
}
