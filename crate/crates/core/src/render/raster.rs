//! Z-buffered software rasterizer producing depth and a Lambert-shaded render.

use image::{Rgb, RgbImage};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::camera::CameraSpec;

pub const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);

/// Per-pixel camera-space depth, row-major from the top-left pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: u32,
    pub height: u32,
    pub depth: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            depth: vec![f32::INFINITY; (width * height) as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.depth[(y * self.width + x) as usize]
    }

    pub fn is_foreground(&self, x: u32, y: u32) -> bool {
        self.get(x, y).is_finite()
    }

    pub fn foreground_count(&self) -> usize {
        self.depth.iter().filter(|d| d.is_finite()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Shading {
    /// Direction the light travels, in world coordinates.
    pub light_dir: [f64; 3],
    pub albedo: f64,
    pub ambient: f64,
}

impl Default for Shading {
    fn default() -> Self {
        Self {
            light_dir: [-0.3, -1.0, -0.5],
            albedo: 0.7,
            ambient: 0.25,
        }
    }
}

impl Shading {
    /// Intensity in [0, 1] for a unit normal facing the viewer.
    pub fn intensity(&self, normal: &Vector3<f64>, light: &Vector3<f64>) -> f64 {
        let lambert = normal.dot(&-light).max(0.0);
        self.albedo * (self.ambient + (1.0 - self.ambient) * lambert)
    }

    /// Intensity of a surface that receives no direct light.
    pub fn ambient_floor(&self) -> f64 {
        self.albedo * self.ambient
    }

    fn light_unit(&self) -> Vector3<f64> {
        Vector3::from(self.light_dir).normalize()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub depth: DepthMap,
    pub shaded: RgbImage,
}

fn vertex_normals(faces: &[[u32; 3]], vertices: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let mut normals = vec![Vector3::zeros(); vertices.len()];
    for f in faces {
        let [a, b, c] = f.map(|i| i as usize);
        let n = (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a]));
        for i in [a, b, c] {
            normals[i] += n;
        }
    }
    normals
}

fn to_pixel(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Rasterizes the mesh with pixel-centre sampling and perspective-correct
/// interpolation. Triangles touching the near plane are dropped.
pub fn rasterize(
    faces: &[[u32; 3]],
    vertices: &[Vector3<f64>],
    camera: &CameraSpec,
    shading: &Shading,
) -> RenderOutput {
    let size = camera.image_size;
    let mut depth = DepthMap::new(size, size);
    let mut zbuf = vec![f64::INFINITY; (size * size) as usize];
    let mut shaded = RgbImage::from_pixel(size, size, BACKGROUND);

    let rot = camera.rotation();
    let cam_pts = camera.to_camera(vertices);
    let proj: Vec<_> = cam_pts
        .iter()
        .map(|p| camera.project_camera_point(p))
        .collect();
    let normals: Vec<Vector3<f64>> = vertex_normals(faces, vertices)
        .iter()
        .map(|n| rot * n)
        .collect();
    let light = rot * shading.light_unit();
    let f = camera.focal_px();
    let [cx, cy] = camera.principal_point();

    for face in faces {
        let idx = face.map(|i| i as usize);
        let p = idx.map(|i| proj[i]);
        if p.iter().any(|q| !q.valid) {
            continue;
        }
        let [a, b, c] = p.map(|q| q.uv);
        let area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if area.abs() < 1e-12 {
            continue;
        }
        let face_n = {
            let [pa, pb, pc] = idx.map(|i| cam_pts[i]);
            (pb - pa).cross(&(pc - pa))
        };
        let xs = [a[0], b[0], c[0]];
        let ys = [a[1], b[1], c[1]];
        let x0 = (xs.iter().cloned().fold(f64::INFINITY, f64::min) - 0.5).ceil().max(0.0);
        let x1 = (xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - 0.5)
            .floor()
            .min(size as f64 - 1.0);
        let y0 = (ys.iter().cloned().fold(f64::INFINITY, f64::min) - 0.5).ceil().max(0.0);
        let y1 = (ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - 0.5)
            .floor()
            .min(size as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        let inv_z = p.map(|q| 1.0 / q.depth);
        for py in y0 as u32..=y1 as u32 {
            let sy = py as f64 + 0.5;
            for px in x0 as u32..=x1 as u32 {
                let sx = px as f64 + 0.5;
                let w0 = ((b[0] - sx) * (c[1] - sy) - (b[1] - sy) * (c[0] - sx)) / area;
                let w1 = ((c[0] - sx) * (a[1] - sy) - (c[1] - sy) * (a[0] - sx)) / area;
                let w2 = 1.0 - w0 - w1;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let iz = w0 * inv_z[0] + w1 * inv_z[1] + w2 * inv_z[2];
                let z = 1.0 / iz;
                let k = (py * size + px) as usize;
                if !(z < zbuf[k]) {
                    continue;
                }
                zbuf[k] = z;
                depth.depth[k] = z as f32;

                let mut n = (normals[idx[0]] * (w0 * inv_z[0])
                    + normals[idx[1]] * (w1 * inv_z[1])
                    + normals[idx[2]] * (w2 * inv_z[2]))
                    / iz;
                if n.norm_squared() < 1e-24 {
                    n = face_n;
                }
                let mut n = n.normalize();
                let view = Vector3::new((sx - cx) / f, (sy - cy) / f, 1.0);
                if n.dot(&view) > 0.0 {
                    n = -n;
                }
                let v = to_pixel(shading.intensity(&n, &light));
                shaded.put_pixel(px, py, Rgb([v, v, v]));
            }
        }
    }
    if depth.foreground_count() == 0 {
        log::warn!("rasterization produced no foreground pixels");
    }
    RenderOutput { depth, shaded }
}
