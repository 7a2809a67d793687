//! Parametric quadruped body model.

mod asset;
pub mod capsule;
pub mod container;
mod lbs;
pub mod rotation;

pub use asset::{AssetParts, BodyModelAsset, JointTags, PoseParams, PosedMesh, ShapeParams};
pub use container::{load_asset, write_asset};
pub use lbs::{apply_shape, forward_kinematics, pose_mesh, regress_joints, JointTransforms};
pub use rotation::{
    axis_angle_to_matrix, canonicalize_axis_angle, matrix_to_axis_angle, orthogonalize_rot9,
};
