//! Three-channel raster used for camera frames, segmented frames and fused frames.

use thiserror::Error;

pub const CHANNELS: usize = 3;

/// Value range declared by an [`ImageTensor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PixelRange {
    /// Raw channel values in `[0, 255]`.
    Raw,
    /// Normalized channel values in `[-1, +1]`.
    Normalized,
}

impl PixelRange {
    pub fn bounds(self) -> (f32, f32) {
        match self {
            PixelRange::Raw => (0.0, 255.0),
            PixelRange::Normalized => (-1.0, 1.0),
        }
    }

    pub fn contains(self, v: f32) -> bool {
        let (lo, hi) = self.bounds();
        v >= lo && v <= hi
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ImageError {
    #[error("data length {got} does not match {height}x{width}x3 = {expected}")]
    LengthMismatch {
        height: usize,
        width: usize,
        expected: usize,
        got: usize,
    },
    #[error("value {value} at index {index} lies outside the declared {range:?} range")]
    OutOfRange {
        index: usize,
        value: f32,
        range: PixelRange,
    },
    #[error("image dimensions {a_h}x{a_w} and {b_h}x{b_w} differ")]
    DimensionMismatch {
        a_h: usize,
        a_w: usize,
        b_h: usize,
        b_w: usize,
    },
    #[error("image height {height} is too short to crop {crop} rows")]
    TooShortToCrop { height: usize, crop: usize },
    #[error("expected a {expected:?} image, got {got:?}")]
    WrongRange { expected: PixelRange, got: PixelRange },
}

/// Row-major, channel-interleaved `H x W x 3` raster.
///
/// Values are stored as `f32`. Every 8-bit raster is represented exactly, and
/// blending happens in `f64` before a single rounding back to storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    range: PixelRange,
    data: Vec<f32>,
}

impl ImageTensor {
    pub fn new(
        height: usize,
        width: usize,
        range: PixelRange,
        data: Vec<f32>,
    ) -> Result<Self, ImageError> {
        let expected = height * width * CHANNELS;
        if data.len() != expected {
            return Err(ImageError::LengthMismatch {
                height,
                width,
                expected,
                got: data.len(),
            });
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !range.contains(**v)) {
            return Err(ImageError::OutOfRange { index, value, range });
        }
        Ok(Self {
            height,
            width,
            range,
            data,
        })
    }

    /// Uniformly filled image. Panics if `value` is outside `range`.
    pub fn filled(height: usize, width: usize, range: PixelRange, value: f32) -> Self {
        assert!(range.contains(value), "fill value {value} outside {range:?}");
        Self {
            height,
            width,
            range,
            data: vec![value; height * width * CHANNELS],
        }
    }

    pub fn from_rgb_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for r in 0..height {
            for c in 0..width {
                data.extend(f(r, c).iter().map(|&v| v as f32));
            }
        }
        Self {
            height,
            width,
            range: PixelRange::Raw,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn range(&self) -> PixelRange {
        self.range
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn same_dims(&self, other: &ImageTensor) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub fn check_same_dims(&self, other: &ImageTensor) -> Result<(), ImageError> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(ImageError::DimensionMismatch {
                a_h: self.height,
                a_w: self.width,
                b_h: other.height,
                b_w: other.width,
            })
        }
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        (row * self.width + col) * CHANNELS
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f32; 3] {
        let i = self.index(row, col);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Applies `f` to every value, clamping the result into the declared range.
    pub fn map_clamped(&self, f: impl Fn(f32) -> f32) -> Self {
        let (lo, hi) = self.range.bounds();
        Self {
            height: self.height,
            width: self.width,
            range: self.range,
            data: self.data.iter().map(|&v| f(v).clamp(lo, hi)).collect(),
        }
    }

    /// Image with columns reversed.
    pub fn flip_horizontal(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..self.height {
            for c in (0..self.width).rev() {
                let i = self.index(r, c);
                data.extend_from_slice(&self.data[i..i + CHANNELS]);
            }
        }
        Self {
            height: self.height,
            width: self.width,
            range: self.range,
            data,
        }
    }

    /// Drops the top `rows` rows.
    pub fn crop_top(&self, rows: usize) -> Result<Self, ImageError> {
        if rows >= self.height {
            return Err(ImageError::TooShortToCrop {
                height: self.height,
                crop: rows,
            });
        }
        Ok(Self {
            height: self.height - rows,
            width: self.width,
            range: self.range,
            data: self.data[rows * self.width * CHANNELS..].to_vec(),
        })
    }

    /// Rounds every value to the nearest integer, ties to even, and clamps to `[0, 255]`.
    pub fn quantize(&self) -> Result<Vec<u8>, ImageError> {
        if self.range != PixelRange::Raw {
            return Err(ImageError::WrongRange {
                expected: PixelRange::Raw,
                got: self.range,
            });
        }
        Ok(self.data.iter().map(|&v| quantize_value(v)).collect())
    }
}

#[inline]
pub fn quantize_value(v: f32) -> u8 {
    v.round_ties_even().clamp(0.0, 255.0) as u8
}
