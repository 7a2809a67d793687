//! Canny edge detection on 8-bit grayscale images.

use std::collections::VecDeque;

use image::{GrayImage, Luma, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CannyParams {
    /// Hysteresis thresholds as fractions of the maximum gradient magnitude.
    pub low: f64,
    pub high: f64,
    pub sigma: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            low: 0.1,
            high: 0.2,
            sigma: 1.4,
        }
    }
}

/// Binary edge mask; every entry is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    pub width: u32,
    pub height: u32,
    pub edges: Vec<u8>,
}

impl EdgeMap {
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.edges[(y * self.width + x) as usize]
    }

    pub fn count(&self) -> usize {
        self.edges.iter().filter(|&&e| e != 0).count()
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| Luma([self.get(x, y) * 255]))
    }
}

pub fn to_gray(img: &RgbImage) -> GrayImage {
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let [r, g, b] = img.get_pixel(x, y).0;
        let l = (299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000;
        Luma([l as u8])
    })
}

/// Normalized 5-tap Gaussian.
pub fn gaussian_kernel5(sigma: f64) -> [f64; 5] {
    let mut k = [0.0; 5];
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - 2.0;
        *v = (-x * x / (2.0 * sigma * sigma)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

struct Plane {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Plane {
    fn at(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.data[y * self.w + x]
    }

    fn at_or_zero(&self, x: isize, y: isize) -> f64 {
        if x < 0 || y < 0 || x >= self.w as isize || y >= self.h as isize {
            0.0
        } else {
            self.data[y as usize * self.w + x as usize]
        }
    }
}

fn blur(src: &Plane, k: &[f64; 5]) -> Plane {
    let (w, h) = (src.w, src.h);
    let mut tmp = Plane { w, h, data: vec![0.0; w * h] };
    for y in 0..h {
        for x in 0..w {
            tmp.data[y * w + x] = (0..5)
                .map(|i| k[i] * src.at(x as isize + i as isize - 2, y as isize))
                .sum();
        }
    }
    let mut out = Plane { w, h, data: vec![0.0; w * h] };
    for y in 0..h {
        for x in 0..w {
            out.data[y * w + x] = (0..5)
                .map(|i| k[i] * tmp.at(x as isize, y as isize + i as isize - 2))
                .sum();
        }
    }
    out
}

pub fn canny_edges(image: &GrayImage, params: &CannyParams) -> Result<EdgeMap> {
    let CannyParams { low, high, sigma } = *params;
    if !(low > 0.0 && low < high && high <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "canny thresholds need 0 < low < high <= 1, got low={low} high={high}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("canny sigma must be positive, got {sigma}")));
    }
    let (w, h) = (image.width() as usize, image.height() as usize);
    let mut edges = EdgeMap {
        width: image.width(),
        height: image.height(),
        edges: vec![0; w * h],
    };
    if w == 0 || h == 0 {
        return Ok(edges);
    }
    let src = Plane {
        w,
        h,
        data: image.pixels().map(|p| p.0[0] as f64).collect(),
    };
    let b = blur(&src, &gaussian_kernel5(sigma));

    let mut mag = Plane { w, h, data: vec![0.0; w * h] };
    let mut dir = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (b.at(x + 1, y - 1) + 2.0 * b.at(x + 1, y) + b.at(x + 1, y + 1))
                - (b.at(x - 1, y - 1) + 2.0 * b.at(x - 1, y) + b.at(x - 1, y + 1));
            let gy = (b.at(x - 1, y + 1) + 2.0 * b.at(x, y + 1) + b.at(x + 1, y + 1))
                - (b.at(x - 1, y - 1) + 2.0 * b.at(x, y - 1) + b.at(x + 1, y - 1));
            let k = y as usize * w + x as usize;
            mag.data[k] = gx.hypot(gy);
            let mut angle = gy.atan2(gx).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            dir[k] = if !(22.5..157.5).contains(&angle) {
                0
            } else if angle < 67.5 {
                1
            } else if angle < 112.5 {
                2
            } else {
                3
            };
        }
    }
    let max = mag.data.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Ok(edges);
    }

    let mut nms = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let k = y as usize * w + x as usize;
            let m = mag.data[k];
            if m <= 0.0 {
                continue;
            }
            let (dx, dy) = match dir[k] {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (-1, 1),
            };
            let before = mag.at_or_zero(x - dx, y - dy);
            let after = mag.at_or_zero(x + dx, y + dy);
            if m >= before && m > after {
                nms[k] = m;
            }
        }
    }

    let (lo, hi) = (low * max, high * max);
    let mut queue = VecDeque::new();
    for (k, &m) in nms.iter().enumerate() {
        if m >= hi {
            edges.edges[k] = 1;
            queue.push_back(k);
        }
    }
    while let Some(k) = queue.pop_front() {
        let (x, y) = ((k % w) as isize, (k / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let nk = ny as usize * w + nx as usize;
                if edges.edges[nk] == 0 && nms[nk] >= lo {
                    edges.edges[nk] = 1;
                    queue.push_back(nk);
                }
            }
        }
    }
    Ok(edges)
}
