//! Frame preprocessing and augmentation.

use serde::{Deserialize, Serialize};

use super::palette::SegmentedImage;
use crate::image::{ImageError, ImageTensor, PixelRange, CHANNELS};
use crate::rng::Rng;

/// Crops the top half of a raw frame and maps `[0, 255]` to `[-1, +1]`.
pub fn normalize_image(img: &ImageTensor) -> Result<ImageTensor, ImageError> {
    if img.range() != PixelRange::Raw {
        return Err(ImageError::WrongRange {
            expected: PixelRange::Raw,
            got: img.range(),
        });
    }
    let crop = img.height() / 2;
    if img.height() < 2 {
        return Err(ImageError::TooShortToCrop {
            height: img.height(),
            crop,
        });
    }
    let kept = img.crop_top(crop)?;
    let data = kept
        .data()
        .iter()
        .map(|&v| ((v as f64 / 127.5) - 1.0).clamp(-1.0, 1.0) as f32)
        .collect();
    ImageTensor::new(kept.height(), kept.width(), PixelRange::Normalized, data)
}

/// Inverse value map of [`normalize_image`] on the kept rows.
pub fn denormalize_image(img: &ImageTensor) -> Result<ImageTensor, ImageError> {
    if img.range() != PixelRange::Normalized {
        return Err(ImageError::WrongRange {
            expected: PixelRange::Normalized,
            got: img.range(),
        });
    }
    let data = img
        .data()
        .iter()
        .map(|&v| ((v as f64 + 1.0) * 127.5).clamp(0.0, 255.0) as f32)
        .collect();
    ImageTensor::new(img.height(), img.width(), PixelRange::Raw, data)
}

/// Scales every channel by `k`, clamping to `[0, 255]`.
pub fn adjust_brightness(img: &ImageTensor, k: f64) -> ImageTensor {
    img.map_clamped(|v| (v as f64 * k) as f32)
}

/// Source coordinates (continuous, pixel units) for output pixel `(row, col)`
/// when rotating counter-clockwise by `theta` about the image center.
fn rotation_source(h: usize, w: usize, row: usize, col: usize, theta: f64) -> (f64, f64) {
    let (cx, cy) = (0.5 * w as f64, 0.5 * h as f64);
    let (x, y) = (col as f64 + 0.5 - cx, row as f64 + 0.5 - cy);
    let (c, s) = (theta.cos(), theta.sin());
    // Image rows grow downward, so a visual counter-clockwise turn is a
    // clockwise one in (x, y); the source lies at the inverse rotation.
    let sx = c * x - s * y;
    let sy = s * x + c * y;
    (sy + cy - 0.5, sx + cx - 0.5)
}

/// Bilinear rotation about the image center with edge replication.
pub fn rotate_bilinear(img: &ImageTensor, degrees: f64) -> ImageTensor {
    let (h, w) = (img.height(), img.width());
    let theta = degrees.to_radians();
    let src = img.data();
    let mut out = Vec::with_capacity(src.len());
    let at = |r: usize, c: usize, ch: usize| src[(r * w + c) * CHANNELS + ch] as f64;
    for row in 0..h {
        for col in 0..w {
            let (sr, sc) = rotation_source(h, w, row, col, theta);
            let sr = sr.clamp(0.0, (h - 1) as f64);
            let sc = sc.clamp(0.0, (w - 1) as f64);
            let (r0, c0) = (sr.floor() as usize, sc.floor() as usize);
            let (r1, c1) = ((r0 + 1).min(h - 1), (c0 + 1).min(w - 1));
            let (fr, fc) = (sr - r0 as f64, sc - c0 as f64);
            for ch in 0..CHANNELS {
                let top = at(r0, c0, ch) * (1.0 - fc) + at(r0, c1, ch) * fc;
                let bottom = at(r1, c0, ch) * (1.0 - fc) + at(r1, c1, ch) * fc;
                out.push((top * (1.0 - fr) + bottom * fr) as f32);
            }
        }
    }
    ImageTensor::new(h, w, img.range(), out).expect("convex combination stays in range")
}

/// Nearest-neighbour rotation, which keeps every pixel a palette color.
pub fn rotate_nearest(seg: &SegmentedImage, degrees: f64) -> SegmentedImage {
    let img = seg.image();
    let (h, w) = (img.height(), img.width());
    let theta = degrees.to_radians();
    let src = img.data();
    let mut out = Vec::with_capacity(src.len());
    for row in 0..h {
        for col in 0..w {
            let (sr, sc) = rotation_source(h, w, row, col, theta);
            let r = sr.round().clamp(0.0, (h - 1) as f64) as usize;
            let c = sc.round().clamp(0.0, (w - 1) as f64) as usize;
            let i = (r * w + c) * CHANNELS;
            out.extend_from_slice(&src[i..i + CHANNELS]);
        }
    }
    let img = ImageTensor::new(h, w, img.range(), out).expect("copied values stay in range");
    SegmentedImage::new(img).expect("copied palette colors")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentKind {
    Rotate,
    Brightness,
    Flip,
}

/// One drawn augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Augmentation {
    Rotate { degrees: f64 },
    Brightness { factor: f64 },
    Flip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub enabled: bool,
    /// Transforms drawn from, uniformly.
    pub kinds: Vec<AugmentKind>,
    pub max_rotation_deg: f64,
    pub max_brightness_change: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            kinds: vec![AugmentKind::Rotate, AugmentKind::Brightness, AugmentKind::Flip],
            max_rotation_deg: 5.0,
            max_brightness_change: 0.2,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), String> {
        let mut bad = Vec::new();
        if self.enabled && self.kinds.is_empty() {
            bad.push("augmentation enabled with no kinds".to_string());
        }
        if !(self.max_rotation_deg >= 0.0) {
            bad.push("max_rotation_deg must be >= 0".to_string());
        }
        if !(0.0..1.0).contains(&self.max_brightness_change) {
            bad.push("max_brightness_change must lie in [0, 1)".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad.join("; "))
        }
    }

    pub fn draw(&self, rng: &mut Rng) -> Augmentation {
        match self.kinds[rng.below(self.kinds.len())] {
            AugmentKind::Rotate => Augmentation::Rotate {
                degrees: rng.uniform(-self.max_rotation_deg, self.max_rotation_deg),
            },
            AugmentKind::Brightness => Augmentation::Brightness {
                factor: rng.uniform(
                    1.0 - self.max_brightness_change,
                    1.0 + self.max_brightness_change,
                ),
            },
            AugmentKind::Flip => Augmentation::Flip,
        }
    }
}
