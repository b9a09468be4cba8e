//! Binary portable pixmap (`P6`) reader and writer.
//!
//! Writing quantizes real-valued channels with round-half-to-even. Only
//! `maxval = 255` files are accepted on read.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::image::{ImageError, ImageTensor, PixelRange, CHANNELS};

/// Upper bound on `width * height` accepted from a header.
pub const MAX_PIXELS: usize = 1 << 28;

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("dimensions {width}x{height} overflow the supported raster size")]
    DimensionOverflow { width: u64, height: u64 },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub fn encode(img: &ImageTensor) -> Result<Vec<u8>, PnmError> {
    let payload = img.quantize()?;
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<ImageTensor, PnmError> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(PnmError::MalformedHeader("missing P6 magic".into()));
    }
    cursor.pos = 2;
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PnmError::MalformedHeader("zero dimension".into()));
    }
    if maxval != 255 {
        return Err(PnmError::MalformedHeader(format!(
            "unsupported maxval {maxval}"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => {
            return Err(PnmError::MalformedHeader(
                "missing whitespace after maxval".into(),
            ))
        }
    }
    let pixels = width
        .checked_mul(height)
        .filter(|&p| p <= MAX_PIXELS as u64)
        .ok_or(PnmError::DimensionOverflow { width, height })?;
    let expected = pixels as usize * CHANNELS;
    let payload = &bytes[cursor.pos..];
    if payload.len() < expected {
        return Err(PnmError::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    let data = payload[..expected].iter().map(|&b| b as f32).collect();
    Ok(ImageTensor::new(
        height as usize,
        width as usize,
        PixelRange::Raw,
        data,
    )?)
}

pub fn write(path: impl AsRef<Path>, img: &ImageTensor) -> Result<(), PnmError> {
    fs::write(path, encode(img)?)?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<ImageTensor, PnmError> {
    decode(&fs::read(path)?)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, field: &str) -> Result<u64, PnmError> {
        let before = self.pos;
        self.skip_space_and_comments();
        if self.pos == before {
            return Err(PnmError::MalformedHeader(format!(
                "expected whitespace before {field}"
            )));
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PnmError::MalformedHeader(format!("missing {field}")));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse::<u64>().map_err(|_| PnmError::DimensionOverflow {
            width: u64::MAX,
            height: u64::MAX,
        })
    }
}
