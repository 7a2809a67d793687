//! Cameras, rasterization, edge extraction and image encoding.

pub mod camera;
pub mod canny;
pub mod imageio;
pub mod raster;

pub use camera::{
    framing_distance, project_points, sample_camera, CameraSampling, CameraSpec, MeshBounds,
    Projected, DEFAULT_IMAGE_SIZE, SENSOR_WIDTH_MM,
};
pub use canny::{canny_edges, gaussian_kernel5, to_gray, CannyParams, EdgeMap};
pub use imageio::{decode_pfm, depth_control_image, encode_pfm, encode_png_gray, encode_png_rgb};
pub use raster::{rasterize, DepthMap, RenderOutput, Shading};
