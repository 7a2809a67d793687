//! Side-by-side preview panels for a single sample.

use std::path::Path;

use image::{imageops, DynamicImage, RgbImage};

use crate::dataset::Manifest;
use crate::error::{Error, Result};
use crate::render::imageio::encode_png_rgb;

fn load_rgb(path: &Path) -> Result<RgbImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(image::load_from_memory(&bytes)?.to_rgb8())
}

/// Generated image, shaded render, depth control and edges in one row,
/// each panel `image_size` wide.
pub fn preview_panel(manifest: &Manifest, root: &Path, sample_id: &str) -> Result<RgbImage> {
    let rec = manifest
        .find(sample_id)
        .ok_or_else(|| Error::NotFound(format!("sample {sample_id} is not in the manifest")))?;
    let size = rec.camera.image_size;
    let f = &rec.files;
    let mut panel = RgbImage::new(size * 4, size);
    for (i, rel) in [&f.image, &f.shaded, &f.depth_control, &f.canny].into_iter().enumerate() {
        let mut img = load_rgb(&root.join(rel))?;
        if img.dimensions() != (size, size) {
            img = DynamicImage::ImageRgb8(img)
                .resize_exact(size, size, imageops::FilterType::Triangle)
                .to_rgb8();
        }
        imageops::replace(&mut panel, &img, (i as u32 * size) as i64, 0);
    }
    Ok(panel)
}

pub fn preview_png(manifest: &Manifest, root: &Path, sample_id: &str) -> Result<Vec<u8>> {
    encode_png_rgb(&preview_panel(manifest, root, sample_id)?)
}
