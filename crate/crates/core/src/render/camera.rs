//! Orbit cameras around the subject and pinhole projection.
//!
//! Camera space is x right, y down, z forward; pixel origin is the top-left
//! corner and pixel `(i, j)` covers `[i, i+1) × [j, j+1)`. Focal lengths are
//! 35 mm-equivalent against a 36 mm sensor width.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SENSOR_WIDTH_MM: f64 = 36.0;
pub const DEFAULT_IMAGE_SIZE: u32 = 1024;
const NEAR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub distance: f64,
    pub focal_length_mm: f64,
    pub image_size: u32,
    /// Look-at point in world coordinates.
    pub target: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshBounds {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl MeshBounds {
    /// Axis-aligned box centre and the radius of the enclosing sphere about it.
    pub fn from_points(points: &[Vector3<f64>]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidArgument("no points to bound".into()))?;
        let (lo, hi) = points.iter().fold((*first, *first), |(lo, hi), p| {
            (lo.inf(p), hi.sup(p))
        });
        let center = (lo + hi) * 0.5;
        let radius = points
            .iter()
            .map(|p| (p - center).norm())
            .fold(0.0, f64::max);
        Ok(Self { center, radius })
    }
}

/// Distributions used by [`sample_camera`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraSampling {
    pub elevation_deg: (f64, f64),
    pub focal_mm: (u32, u32),
    /// Fraction of the image height spanned by the bounding sphere.
    pub fill: (f64, f64),
    pub image_size: u32,
}

impl Default for CameraSampling {
    fn default() -> Self {
        Self {
            elevation_deg: (-10.0, 30.0),
            focal_mm: (24, 85),
            fill: (0.55, 0.85),
            image_size: DEFAULT_IMAGE_SIZE,
        }
    }
}

impl CameraSampling {
    pub fn validate(&self) -> Result<()> {
        let ok = self.elevation_deg.0 <= self.elevation_deg.1
            && self.elevation_deg.0 > -90.0
            && self.elevation_deg.1 < 90.0
            && self.focal_mm.0 > 0
            && self.focal_mm.0 <= self.focal_mm.1
            && self.fill.0 > 0.0
            && self.fill.0 <= self.fill.1
            && self.image_size > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid camera sampling {self:?}")))
        }
    }
}

/// Distance at which a sphere of `radius` spans `fill` of the image height.
pub fn framing_distance(radius: f64, fill: f64, focal_px: f64, image_size: u32) -> f64 {
    let half_angle = (fill * image_size as f64 / (2.0 * focal_px)).atan();
    radius / half_angle.sin()
}

pub fn sample_camera<R: Rng + ?Sized>(
    rng: &mut R,
    bounds: &MeshBounds,
    sampling: &CameraSampling,
) -> Result<CameraSpec> {
    if !(bounds.radius > 0.0) || !bounds.radius.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "degenerate mesh bounds (radius {})",
            bounds.radius
        )));
    }
    sampling.validate()?;
    let azimuth_deg = rng.random_range(0.0..360.0);
    let elevation_deg = rng.random_range(sampling.elevation_deg.0..=sampling.elevation_deg.1);
    let focal_length_mm = rng.random_range(sampling.focal_mm.0..=sampling.focal_mm.1) as f64;
    let fill = rng.random_range(sampling.fill.0..=sampling.fill.1);
    let focal_px = focal_length_mm / SENSOR_WIDTH_MM * sampling.image_size as f64;
    let distance = framing_distance(bounds.radius, fill, focal_px, sampling.image_size);
    Ok(CameraSpec {
        azimuth_deg,
        elevation_deg,
        distance,
        focal_length_mm,
        image_size: sampling.image_size,
        target: bounds.center.into(),
    })
}

/// A projected point; `valid` is false for points at or behind the camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected {
    pub uv: [f64; 2],
    pub depth: f64,
    pub valid: bool,
}

impl CameraSpec {
    pub fn focal_px(&self) -> f64 {
        self.focal_length_mm / SENSOR_WIDTH_MM * self.image_size as f64
    }

    pub fn principal_point(&self) -> [f64; 2] {
        let c = self.image_size as f64 / 2.0;
        [c, c]
    }

    pub fn position(&self) -> Vector3<f64> {
        let (az, el) = (self.azimuth_deg.to_radians(), self.elevation_deg.to_radians());
        Vector3::from(self.target)
            + Vector3::new(el.cos() * az.sin(), el.sin(), el.cos() * az.cos()) * self.distance
    }

    /// World-to-camera rotation; rows are the camera right, down and forward axes.
    pub fn rotation(&self) -> Matrix3<f64> {
        let forward = (Vector3::from(self.target) - self.position()).normalize();
        let right = forward.cross(&Vector3::y()).normalize();
        let down = forward.cross(&right);
        Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()])
    }

    pub fn to_camera(&self, points: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        let r = self.rotation();
        let c = self.position();
        points.iter().map(|p| r * (p - c)).collect()
    }

    pub fn project_camera_point(&self, p: &Vector3<f64>) -> Projected {
        let f = self.focal_px();
        let [cx, cy] = self.principal_point();
        if p.z <= NEAR {
            return Projected {
                uv: [f64::NAN, f64::NAN],
                depth: p.z,
                valid: false,
            };
        }
        Projected {
            uv: [cx + f * p.x / p.z, cy + f * p.y / p.z],
            depth: p.z,
            valid: true,
        }
    }
}

/// Pinhole projection of world points to pixel coordinates.
pub fn project_points(camera: &CameraSpec, points: &[Vector3<f64>]) -> Vec<Projected> {
    camera
        .to_camera(points)
        .iter()
        .map(|p| camera.project_camera_point(p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn front_camera(distance: f64) -> CameraSpec {
        CameraSpec {
            azimuth_deg: 0.0,
            elevation_deg: 0.0,
            distance,
            focal_length_mm: 50.0,
            image_size: 1000,
            target: [0.0; 3],
        }
    }

    #[test]
    fn axis_point_hits_center() {
        let cam = front_camera(5.0);
        let p = project_points(&cam, &[Vector3::zeros()])[0];
        assert!(p.valid);
        assert_eq!(p.uv, [500.0, 500.0]);
        assert!((p.depth - 5.0).abs() < 1e-12);
    }

    #[test]
    fn world_axes_map_to_image_axes() {
        let cam = front_camera(5.0);
        let p = project_points(&cam, &[Vector3::new(0.1, 0.2, 0.0)])[0];
        assert!(p.uv[0] > 500.0, "world +x should appear to the right");
        assert!(p.uv[1] < 500.0, "world +y should appear upwards");
    }

    #[test]
    fn behind_camera_is_flagged() {
        let cam = front_camera(5.0);
        let p = project_points(&cam, &[Vector3::new(0.0, 0.0, 6.0)])[0];
        assert!(!p.valid);
    }

    #[test]
    fn doubling_distance_halves_offset() {
        let x = Vector3::new(0.3, -0.1, 0.0);
        let near = project_points(&front_camera(4.0), &[x])[0].uv;
        let far = project_points(&front_camera(8.0), &[x])[0].uv;
        for k in 0..2 {
            assert!(((near[k] - 500.0) - 2.0 * (far[k] - 500.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_radius_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = MeshBounds {
            center: Vector3::zeros(),
            radius: 0.0,
        };
        assert!(sample_camera(&mut rng, &b, &CameraSampling::default()).is_err());
    }
}
