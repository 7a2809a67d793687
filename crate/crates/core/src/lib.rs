//! Seeded synthetic-data generation for quadruped pose and shape estimation,
//! plus the 3D pose/shape evaluation metrics used to score regressors.

pub mod dataset;
pub mod error;
pub mod genclient;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod pose_bank;
pub mod prompt;
pub mod render;
pub mod shape;
pub mod taxonomy;

pub use error::{Error, Result};
