//! PNG and PFM encoding plus the depth control image.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use image::{GrayImage, ImageEncoder, Luma, RgbImage};
use image::codecs::png::{CompressionType, FilterType, PngEncoder};

use super::raster::DepthMap;
use crate::error::{Error, Result};

pub fn encode_png_rgb(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Fast, FilterType::Adaptive).write_image(
        img.as_raw(),
        img.width(),
        img.height(),
        image::ExtendedColorType::Rgb8,
    )?;
    Ok(out)
}

pub fn encode_png_gray(img: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Fast, FilterType::Adaptive).write_image(
        img.as_raw(),
        img.width(),
        img.height(),
        image::ExtendedColorType::L8,
    )?;
    Ok(out)
}

pub fn decode_png_rgb(bytes: &[u8]) -> Result<RgbImage> {
    Ok(image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?.to_rgb8())
}

/// Inverse depth stretched to 1..=255 over the foreground; background is 0.
pub fn depth_control_image(depth: &DepthMap) -> GrayImage {
    let inv: Vec<Option<f64>> = depth
        .depth
        .iter()
        .map(|&d| d.is_finite().then(|| 1.0 / d as f64))
        .collect();
    let (lo, hi) = inv.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    GrayImage::from_fn(depth.width, depth.height, |x, y| {
        let v = match inv[(y * depth.width + x) as usize] {
            None => 0,
            Some(_) if span <= 0.0 => 255,
            Some(v) => (1.0 + 254.0 * (v - lo) / span).round() as u8,
        };
        Luma([v])
    })
}

/// Single-channel little-endian PFM, rows stored bottom to top.
pub fn encode_pfm(depth: &DepthMap) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", depth.width, depth.height).into_bytes();
    out.reserve(depth.depth.len() * 4);
    for row in (0..depth.height).rev() {
        let start = (row * depth.width) as usize;
        for v in &depth.depth[start..start + depth.width as usize] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<DepthMap> {
    let bad = |m: &str| Error::InvalidData(format!("pfm: {m}"));
    let mut reader = BufReader::new(bytes);
    let mut line = String::new();
    let mut next_line = |r: &mut BufReader<&[u8]>| -> Result<String> {
        line.clear();
        r.read_line(&mut line).map_err(|e| bad(&e.to_string()))?;
        Ok(line.trim().to_string())
    };
    if next_line(&mut reader)? != "Pf" {
        return Err(bad("only single-channel 'Pf' files are supported"));
    }
    let dims = next_line(&mut reader)?;
    let mut it = dims.split_whitespace().map(str::parse::<u32>);
    let (width, height) = match (it.next(), it.next()) {
        (Some(Ok(w)), Some(Ok(h))) => (w, h),
        _ => return Err(bad("malformed dimensions")),
    };
    let scale: f64 = next_line(&mut reader)?
        .parse()
        .map_err(|_| bad("malformed scale"))?;
    let little = scale < 0.0;
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw).map_err(|e| bad(&e.to_string()))?;
    let n = (width as usize) * (height as usize);
    if raw.len() != n * 4 {
        return Err(bad("payload size mismatch"));
    }
    let mut depth = vec![0f32; n];
    for (i, chunk) in raw.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (row, col) = (i / width as usize, i % width as usize);
        depth[(height as usize - 1 - row) * width as usize + col] = v;
    }
    Ok(DepthMap { width, height, depth })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
