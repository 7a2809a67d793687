use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::rotation::canonicalize_axis_angle;

/// Semantic joint tags used by keypoint metrics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointTags {
    pub head: String,
    pub tail_base: String,
}

/// Parametric articulated body model: template, linear shape space,
/// skinning weights, joint regressor and kinematic tree.
#[derive(Debug, Clone)]
pub struct BodyModelAsset {
    template_vertices: Vec<Vector3<f64>>,
    faces: Vec<[u32; 3]>,
    /// `3·n_V × n_B`, row `3i + c` holds coordinate `c` of vertex `i`.
    shape_basis: DMatrix<f64>,
    /// `n_V × n_J`
    skinning_weights: DMatrix<f64>,
    /// `n_J × n_V`
    joint_regressor: DMatrix<f64>,
    parents: Vec<Option<usize>>,
    joint_names: Vec<String>,
    tags: JointTags,
    /// Joint indices ordered so that every parent precedes its children.
    topo_order: Vec<usize>,
}

/// Raw asset parts prior to validation.
#[derive(Debug, Clone)]
pub struct AssetParts {
    pub template_vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[u32; 3]>,
    pub shape_basis: DMatrix<f64>,
    pub skinning_weights: DMatrix<f64>,
    pub joint_regressor: DMatrix<f64>,
    pub parents: Vec<Option<usize>>,
    pub joint_names: Vec<String>,
    pub tags: JointTags,
}

const ROW_SUM_TOL: f64 = 1e-6;

impl BodyModelAsset {
    pub fn new(parts: AssetParts) -> Result<Self> {
        let n_v = parts.template_vertices.len();
        let n_j = parts.parents.len();
        let bad = |msg: String| Err(Error::InvalidAsset(msg));

        if n_v == 0 || n_j == 0 {
            return bad("asset needs at least one vertex and one joint".into());
        }
        if parts.template_vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return bad("non-finite template vertex".into());
        }
        if parts.shape_basis.nrows() != 3 * n_v {
            return bad(format!(
                "shape basis has {} rows, expected 3·n_V = {}",
                parts.shape_basis.nrows(),
                3 * n_v
            ));
        }
        if parts.skinning_weights.shape() != (n_v, n_j) {
            return bad(format!(
                "skinning weights are {:?}, expected ({n_v}, {n_j})",
                parts.skinning_weights.shape()
            ));
        }
        if parts.joint_regressor.shape() != (n_j, n_v) {
            return bad(format!(
                "joint regressor is {:?}, expected ({n_j}, {n_v})",
                parts.joint_regressor.shape()
            ));
        }
        if parts.joint_names.len() != n_j {
            return bad(format!(
                "{} joint names for {n_j} joints",
                parts.joint_names.len()
            ));
        }
        for (f, face) in parts.faces.iter().enumerate() {
            if face.iter().any(|&i| i as usize >= n_v) {
                return bad(format!("face {f} references a vertex index >= {n_v}"));
            }
        }
        for (i, row) in parts.skinning_weights.row_iter().enumerate() {
            if row.iter().any(|&w| w < 0.0 || !w.is_finite()) {
                return bad(format!("skinning weights of vertex {i} are negative or non-finite"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return bad(format!("skinning weights of vertex {i} sum to {sum}"));
            }
        }
        for (j, row) in parts.joint_regressor.row_iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if !sum.is_finite() || (sum - 1.0).abs() > ROW_SUM_TOL {
                return bad(format!("joint regressor row {j} sums to {sum}"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for name in &parts.joint_names {
            if !seen.insert(name.as_str()) {
                return bad(format!("duplicate joint name {name:?}"));
            }
        }
        for tag in [&parts.tags.head, &parts.tags.tail_base] {
            if !seen.contains(tag.as_str()) {
                return bad(format!("tagged joint {tag:?} not among joint names"));
            }
        }
        let topo_order = topological_order(&parts.parents)?;

        Ok(Self {
            template_vertices: parts.template_vertices,
            faces: parts.faces,
            shape_basis: parts.shape_basis,
            skinning_weights: parts.skinning_weights,
            joint_regressor: parts.joint_regressor,
            parents: parts.parents,
            joint_names: parts.joint_names,
            tags: parts.tags,
            topo_order,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.template_vertices.len()
    }

    pub fn n_betas(&self) -> usize {
        self.shape_basis.ncols()
    }

    pub fn n_joints(&self) -> usize {
        self.parents.len()
    }

    pub fn template_vertices(&self) -> &[Vector3<f64>] {
        &self.template_vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn shape_basis(&self) -> &DMatrix<f64> {
        &self.shape_basis
    }

    pub fn skinning_weights(&self) -> &DMatrix<f64> {
        &self.skinning_weights
    }

    pub fn joint_regressor(&self) -> &DMatrix<f64> {
        &self.joint_regressor
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn tags(&self) -> &JointTags {
        &self.tags
    }

    pub(crate) fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    pub fn into_parts(self) -> AssetParts {
        AssetParts {
            template_vertices: self.template_vertices,
            faces: self.faces,
            shape_basis: self.shape_basis,
            skinning_weights: self.skinning_weights,
            joint_regressor: self.joint_regressor,
            parents: self.parents,
            joint_names: self.joint_names,
            tags: self.tags,
        }
    }
}

fn topological_order(parents: &[Option<usize>]) -> Result<Vec<usize>> {
    let n = parents.len();
    let roots: Vec<usize> = (0..n).filter(|&j| parents[j].is_none()).collect();
    if roots.len() != 1 {
        return Err(Error::InvalidAsset(format!(
            "kinematic tree needs exactly one root, found {}",
            roots.len()
        )));
    }
    let mut children = vec![Vec::new(); n];
    for (j, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            if p >= n || p == j {
                return Err(Error::InvalidAsset(format!("joint {j} has invalid parent {p}")));
            }
            children[p].push(j);
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::from(roots);
    while let Some(j) = queue.pop_front() {
        order.push(j);
        queue.extend(children[j].iter().copied());
    }
    if order.len() != n {
        return Err(Error::InvalidAsset(
            "parents contain a cycle disconnected from the root".into(),
        ));
    }
    Ok(order)
}

/// Shape coefficients for the linear shape basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub betas: Vec<f64>,
}

impl ShapeParams {
    pub fn zeros(n: usize) -> Self {
        Self { betas: vec![0.0; n] }
    }
}

/// Per-joint axis-angle rotations (entry 0 is the global orientation)
/// plus a root translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseParams {
    pub rotations: Vec<[f64; 3]>,
    pub translation: [f64; 3],
}

impl PoseParams {
    pub fn identity(n_joints: usize) -> Self {
        Self {
            rotations: vec![[0.0; 3]; n_joints],
            translation: [0.0; 3],
        }
    }

    /// Same rotations with every axis-angle magnitude folded into `[0, π]`.
    pub fn canonicalized(&self) -> Result<Self> {
        if self.translation.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidData("non-finite root translation".into()));
        }
        let rotations = self
            .rotations
            .iter()
            .map(|&aa| canonicalize_axis_angle(aa))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rotations,
            translation: self.translation,
        })
    }
}

/// Output of posing the model.
#[derive(Debug, Clone)]
pub struct PosedMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub joints_posed: Vec<Vector3<f64>>,
    pub joints_rest: Vec<Vector3<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parts() -> AssetParts {
        AssetParts {
            template_vertices: vec![Vector3::zeros(), Vector3::x()],
            faces: vec![],
            shape_basis: DMatrix::zeros(6, 1),
            skinning_weights: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            joint_regressor: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            parents: vec![None, Some(0)],
            joint_names: vec!["tail_base".into(), "head".into()],
            tags: JointTags {
                head: "head".into(),
                tail_base: "tail_base".into(),
            },
        }
    }

    #[test]
    fn valid_parts_build() {
        let a = BodyModelAsset::new(parts()).unwrap();
        assert_eq!((a.n_vertices(), a.n_betas(), a.n_joints()), (2, 1, 2));
    }

    #[test]
    fn rejects_bad_weight_row() {
        let mut p = parts();
        p.skinning_weights[(0, 0)] = 0.9;
        assert!(matches!(BodyModelAsset::new(p), Err(Error::InvalidAsset(_))));
    }

    #[test]
    fn rejects_negative_weight() {
        let mut p = parts();
        p.skinning_weights[(0, 0)] = 1.5;
        p.skinning_weights[(0, 1)] = -0.5;
        assert!(BodyModelAsset::new(p).is_err());
    }

    #[test]
    fn rejects_cycle_and_two_roots() {
        let mut p = parts();
        p.parents = vec![Some(1), Some(0)];
        assert!(BodyModelAsset::new(p).is_err());
        let mut p = parts();
        p.parents = vec![None, None];
        assert!(BodyModelAsset::new(p).is_err());
    }

    #[test]
    fn rejects_out_of_range_face() {
        let mut p = parts();
        p.faces = vec![[0, 1, 2]];
        assert!(BodyModelAsset::new(p).is_err());
    }

    #[test]
    fn rejects_missing_tag() {
        let mut p = parts();
        p.tags.head = "snout".into();
        assert!(BodyModelAsset::new(p).is_err());
    }
}
