//! Shape deformation, joint regression and linear blend skinning.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

use super::asset::{BodyModelAsset, PosedMesh, PoseParams, ShapeParams};
use super::rotation::axis_angle_to_matrix;

/// Rest-shape vertices `v_t + B·β`.
pub fn apply_shape(asset: &BodyModelAsset, shape: &ShapeParams) -> Result<Vec<Vector3<f64>>> {
    if shape.betas.len() != asset.n_betas() {
        return Err(Error::InvalidArgument(format!(
            "got {} betas, asset has {}",
            shape.betas.len(),
            asset.n_betas()
        )));
    }
    let basis = asset.shape_basis();
    let mut out = asset.template_vertices().to_vec();
    for (k, &beta) in shape.betas.iter().enumerate() {
        if beta == 0.0 {
            continue;
        }
        let column = basis.column(k);
        for (i, v) in out.iter_mut().enumerate() {
            v.x += column[3 * i] * beta;
            v.y += column[3 * i + 1] * beta;
            v.z += column[3 * i + 2] * beta;
        }
    }
    Ok(out)
}

/// Joint locations `J_r · vertices`, applied per coordinate.
pub fn regress_joints(
    asset: &BodyModelAsset,
    vertices: &[Vector3<f64>],
) -> Result<Vec<Vector3<f64>>> {
    if vertices.len() != asset.n_vertices() {
        return Err(Error::InvalidArgument(format!(
            "got {} vertices, asset has {}",
            vertices.len(),
            asset.n_vertices()
        )));
    }
    let regressor = asset.joint_regressor();
    Ok(regressor
        .row_iter()
        .map(|row| {
            row.iter()
                .zip(vertices)
                .filter(|(w, _)| **w != 0.0)
                .fold(Vector3::zeros(), |acc, (w, v)| acc + v * *w)
        })
        .collect())
}

/// World rotation and posed location of every joint.
#[derive(Debug, Clone)]
pub struct JointTransforms {
    pub rotations: Vec<Matrix3<f64>>,
    pub positions: Vec<Vector3<f64>>,
}

/// Forward kinematics: each child's world rotation is its parent's world
/// rotation composed with the local rotation, about the rest joint location.
pub fn forward_kinematics(
    asset: &BodyModelAsset,
    joints_rest: &[Vector3<f64>],
    pose: &PoseParams,
) -> Result<JointTransforms> {
    let n_j = asset.n_joints();
    if pose.rotations.len() != n_j {
        return Err(Error::InvalidArgument(format!(
            "pose has {} joint rotations, asset has {n_j}",
            pose.rotations.len()
        )));
    }
    let mut rotations = vec![Matrix3::identity(); n_j];
    let mut positions = vec![Vector3::zeros(); n_j];
    for &j in asset.topo_order() {
        let local = axis_angle_to_matrix(pose.rotations[j]);
        match asset.parents()[j] {
            None => {
                rotations[j] = local;
                positions[j] = joints_rest[j];
            }
            Some(p) => {
                rotations[j] = rotations[p] * local;
                positions[j] = rotations[p] * (joints_rest[j] - joints_rest[p]) + positions[p];
            }
        }
    }
    Ok(JointTransforms {
        rotations,
        positions,
    })
}

/// Evaluate the full model: shape, regress rest joints from the shaped
/// mesh, forward kinematics, blend per-joint rigid transforms, then add the
/// root translation.
pub fn pose_mesh(
    asset: &BodyModelAsset,
    shape: &ShapeParams,
    pose: &PoseParams,
) -> Result<PosedMesh> {
    let shaped = apply_shape(asset, shape)?;
    let joints_rest = regress_joints(asset, &shaped)?;
    let fk = forward_kinematics(asset, &joints_rest, pose)?;
    let t = Vector3::from(pose.translation);
    let weights = asset.skinning_weights();

    let vertices = shaped
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut acc = Vector3::zeros();
            for (j, &w) in weights.row(i).iter().enumerate() {
                if w != 0.0 {
                    acc += (fk.rotations[j] * (v - joints_rest[j]) + fk.positions[j]) * w;
                }
            }
            acc + t
        })
        .collect();
    let joints_posed = fk.positions.iter().map(|p| p + t).collect();

    Ok(PosedMesh {
        vertices,
        joints_posed,
        joints_rest,
    })
}
