//! Hermetic stand-ins for the generation and chat services.

use image::{ImageBuffer, Rgb, RgbImage};
use sha2::{Digest, Sha256};

use crate::error::Result;

use super::wire::{ChatRequest, ContentPart, ControlKind, GenerationRequest};

/// Background colours picked by prompt hash.
pub const STUB_PALETTE: [[u8; 3]; 16] = [
    [122, 158, 94],
    [88, 120, 160],
    [196, 170, 120],
    [150, 96, 80],
    [70, 110, 70],
    [180, 190, 200],
    [210, 140, 90],
    [100, 90, 140],
    [60, 140, 150],
    [170, 120, 160],
    [140, 150, 60],
    [200, 200, 170],
    [90, 70, 50],
    [120, 180, 210],
    [230, 210, 150],
    [80, 100, 110],
];

pub fn prompt_background(prompt: &str) -> [u8; 3] {
    let digest = Sha256::digest(prompt.as_bytes());
    let h = u64::from_le_bytes(digest[..8].try_into().unwrap());
    STUB_PALETTE[(h % STUB_PALETTE.len() as u64) as usize]
}

/// Deterministic composite standing in for a diffusion backend: the depth
/// control (as grey) and canny edges (as dark lines) over a background colour
/// chosen by prompt hash. Identical requests give identical PNG bytes.
pub fn stub_generate(req: &GenerationRequest) -> Result<Vec<u8>> {
    let (w, h) = (req.width, req.height);
    let bg = Rgb(prompt_background(&req.prompt));
    let mut img: RgbImage = ImageBuffer::from_pixel(w, h, bg);

    let decode = |kind| -> Result<Option<image::GrayImage>> {
        match req.control(kind) {
            Some(c) => Ok(Some(image::load_from_memory(&c.image)?.into_luma8())),
            None => Ok(None),
        }
    };
    let depth = decode(ControlKind::Depth)?;
    let canny = decode(ControlKind::Canny)?;
    let sample = |g: &image::GrayImage, x: u32, y: u32| -> u8 {
        let sx = (x as u64 * g.width() as u64 / w as u64) as u32;
        let sy = (y as u64 * g.height() as u64 / h as u64) as u32;
        g.get_pixel(sx, sy).0[0]
    };

    for y in 0..h {
        for x in 0..w {
            if let Some(d) = &depth {
                let v = sample(d, x, y);
                if v > 0 {
                    let g = 70 + (v as u32 * 3 / 5) as u8;
                    img.put_pixel(x, y, Rgb([g, g, g]));
                }
            }
            if let Some(c) = &canny {
                if sample(c, x, y) > 127 {
                    img.put_pixel(x, y, Rgb([30, 30, 30]));
                }
            }
        }
    }
    crate::render::imageio::encode_png_rgb(&img)
}

pub const STUB_ORIENTATIONS: [&str; 4] = [
    "facing left",
    "facing right",
    "facing the camera",
    "facing away from the camera",
];

/// Deterministic chat responder. Requests carrying an image get an
/// orientation phrase chosen by image hash; text-only requests get the
/// last non-empty line of the final text part echoed back.
pub fn stub_chat(req: &ChatRequest) -> String {
    let mut image: Option<&[u8]> = None;
    let mut last_text: Option<&str> = None;
    for m in &req.messages {
        for part in &m.content {
            match part {
                ContentPart::Image { image: bytes } => image = Some(bytes),
                ContentPart::Text { text } => last_text = Some(text),
            }
        }
    }
    if let Some(bytes) = image {
        let digest = Sha256::digest(bytes);
        return STUB_ORIENTATIONS[digest[0] as usize % STUB_ORIENTATIONS.len()].to_string();
    }
    last_text
        .and_then(|t| t.lines().rev().find(|l| !l.trim().is_empty()))
        .map(|l| l.trim().to_string())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genclient::wire::ControlImage;

    fn prompt_only(prompt: &str) -> GenerationRequest {
        GenerationRequest {
            prompt: prompt.into(),
            seed: 1,
            width: 16,
            height: 16,
            controls: vec![],
        }
    }

    #[test]
    fn identical_requests_identical_bytes() {
        let r = prompt_only("A photo of a lynx in forest clearing, shot on DSLR, 85mm.");
        assert_eq!(stub_generate(&r).unwrap(), stub_generate(&r).unwrap());
    }

    #[test]
    fn scenery_changes_background() {
        let a = "A photo of a lynx in forest clearing, shot on DSLR, 85mm.";
        let b = "A photo of a lynx in snowy mountain pass, shot on DSLR, 85mm.";
        assert_ne!(prompt_background(a), prompt_background(b));
        assert_ne!(
            stub_generate(&prompt_only(a)).unwrap(),
            stub_generate(&prompt_only(b)).unwrap()
        );
    }

    #[test]
    fn prompt_only_is_solid() {
        let r = prompt_only("A photo of a fox.");
        let img = image::load_from_memory(&stub_generate(&r).unwrap())
            .unwrap()
            .into_rgb8();
        assert_eq!(img.dimensions(), (16, 16));
        let first = *img.get_pixel(0, 0);
        assert!(img.pixels().all(|p| *p == first));
        assert_eq!(first.0, prompt_background("A photo of a fox."));
    }

    #[test]
    fn depth_foreground_is_grey() {
        let mut depth = image::GrayImage::new(16, 16);
        depth.put_pixel(8, 8, image::Luma([255]));
        let mut r = prompt_only("x");
        r.controls.push(ControlImage {
            kind: ControlKind::Depth,
            image: crate::render::imageio::encode_png_gray(&depth).unwrap(),
            strength: 0.9,
        });
        let img = image::load_from_memory(&stub_generate(&r).unwrap())
            .unwrap()
            .into_rgb8();
        assert_eq!(img.get_pixel(8, 8).0, [223, 223, 223]);
        assert_eq!(img.get_pixel(0, 0).0, prompt_background("x"));
    }
}
