//! Threat values and threat-weighted image fusion.
//!
//! Two ways to score a hazard:
//!
//! * from the range sensor, using longitudinal and lateral distance `(l_x, l_y)`
//!   in centimeters:
//!   `T = sqrt(((l_x_max - l_x) / l_x_max)^2 + ((l_y_max - l_y) / l_y_max)^2)`,
//!   min-max normalized to `t_f = (T - t_min) / (t_max - t_min)` inside the
//!   gate `l_x <= l_x_max && l_y <= l_y_max`, and `0` outside it;
//! * from the segmented frame of size `(h, w)`, using the hazard pixel
//!   `(x, y)` (row, column) nearest to the bottom-center point `(h, w/2)`:
//!   `t_f = 1 - sqrt(((x - h)^2 + (y - w/2)^2) / (h^2 + (w/2)^2))`.
//!
//! The bottom-center reference is the point `(h, w/2)` itself, one row below
//! the last pixel row. The last row's center pixel therefore scores slightly
//! below 1, and the top-left pixel `(0, 0)` scores exactly 0.
//!
//! Fusion blends the camera frame toward the segmented frame:
//! `I = (1 - t_f) * I_original + t_f * I_segmented`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{ImageError, ImageTensor, PixelRange};
use crate::world::RadarReading;
use crate::vision::SegmentedImage;

#[derive(Debug, Error, PartialEq)]
pub enum ThreatError {
    #[error("distances must be non-negative, got l_x = {l_x}, l_y = {l_y}")]
    NegativeDistance { l_x: f64, l_y: f64 },
    #[error("invalid threat config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreatSource {
    RadarProcedure,
    PixelProcedure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreatScore {
    pub t_f: f64,
    pub source: ThreatSource,
    pub hazard_id: Option<usize>,
}

impl ThreatScore {
    pub fn none(source: ThreatSource) -> Self {
        Self {
            t_f: 0.0,
            source,
            hazard_id: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThreatConfig {
    pub l_x_max_cm: f64,
    pub l_y_max_cm: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for ThreatConfig {
    /// `t_min = 0` and `t_max = sqrt(2)` are the extremes of `T` over the gate.
    fn default() -> Self {
        Self {
            l_x_max_cm: 6000.0,
            l_y_max_cm: 370.0,
            t_min: 0.0,
            t_max: std::f64::consts::SQRT_2,
        }
    }
}

impl ThreatConfig {
    pub fn validate(&self) -> Result<(), ThreatError> {
        let mut bad = Vec::new();
        if !(self.l_x_max_cm > 0.0) {
            bad.push("l_x_max_cm must be > 0");
        }
        if !(self.l_y_max_cm > 0.0) {
            bad.push("l_y_max_cm must be > 0");
        }
        if !(self.t_max > self.t_min) {
            bad.push("t_max must exceed t_min");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ThreatError::InvalidConfig(bad.join("; ")))
        }
    }
}

/// Range-sensor threat for one hazard.
pub fn threat_radar(l_x: f64, l_y: f64, cfg: &ThreatConfig) -> Result<ThreatScore, ThreatError> {
    if !(l_x >= 0.0) || !(l_y >= 0.0) {
        return Err(ThreatError::NegativeDistance { l_x, l_y });
    }
    Ok(ThreatScore {
        t_f: radar_value(l_x, l_y, cfg),
        source: ThreatSource::RadarProcedure,
        hazard_id: None,
    })
}

fn radar_value(l_x: f64, l_y: f64, cfg: &ThreatConfig) -> f64 {
    if l_x > cfg.l_x_max_cm || l_y > cfg.l_y_max_cm {
        return 0.0;
    }
    let a = (cfg.l_x_max_cm - l_x) / cfg.l_x_max_cm;
    let b = (cfg.l_y_max_cm - l_y) / cfg.l_y_max_cm;
    let t = a.hypot(b);
    ((t - cfg.t_min) / (cfg.t_max - cfg.t_min)).clamp(0.0, 1.0)
}

/// Most threatening detection in a reading; zero when nothing is detected.
pub fn threat_from_reading(reading: &RadarReading, cfg: &ThreatConfig) -> ThreatScore {
    let mut best = ThreatScore::none(ThreatSource::RadarProcedure);
    for d in &reading.detections {
        let t_f = radar_value(d.l_x.max(0.0), d.l_y.max(0.0), cfg);
        if t_f > best.t_f {
            best = ThreatScore {
                t_f,
                source: ThreatSource::RadarProcedure,
                hazard_id: Some(d.hazard_id),
            };
        }
    }
    best
}

/// Pixel-procedure value at continuous image coordinates `(x, y)` = (row, column).
pub fn pixel_threat_at(x: f64, y: f64, h: usize, w: usize) -> f64 {
    let (h, half_w) = (h as f64, w as f64 / 2.0);
    let dist2 = (x - h).powi(2) + (y - half_w).powi(2);
    let norm2 = h * h + half_w * half_w;
    (1.0 - (dist2 / norm2).sqrt()).clamp(0.0, 1.0)
}

/// Pixel-procedure threat from the hazard pixel nearest the bottom center.
pub fn threat_pixel(seg: &SegmentedImage) -> ThreatScore {
    let (h, w) = (seg.height(), seg.width());
    let (hf, half_w) = (h as f64, w as f64 / 2.0);
    let mut nearest: Option<(f64, usize, usize)> = None;
    // Rows are scanned bottom-up, so once a full row lies farther than the best
    // hit, no higher row can win.
    for row in (0..h).rev() {
        let dr = (row as f64 - hf).powi(2);
        if nearest.is_some_and(|(d, _, _)| dr > d) {
            break;
        }
        for col in 0..w {
            if seg.is_hazard(row, col) {
                let d = dr + (col as f64 - half_w).powi(2);
                if nearest.is_none_or(|(best, _, _)| d < best) {
                    nearest = Some((d, row, col));
                }
            }
        }
    }
    match nearest {
        None => ThreatScore::none(ThreatSource::PixelProcedure),
        Some((_, row, col)) => ThreatScore {
            t_f: pixel_threat_at(row as f64, col as f64, h, w),
            source: ThreatSource::PixelProcedure,
            hazard_id: None,
        },
    }
}

/// Per-pixel, per-channel convex blend of `original` toward `segmented`.
pub fn fuse(
    original: &ImageTensor,
    segmented: &SegmentedImage,
    t: &ThreatScore,
) -> Result<ImageTensor, ThreatError> {
    fuse_images(original, segmented.image(), t.t_f)
}

/// [`fuse`] over plain rasters. Blending runs in `f64` with one rounding to storage.
pub fn fuse_images(
    original: &ImageTensor,
    segmented: &ImageTensor,
    t_f: f64,
) -> Result<ImageTensor, ThreatError> {
    original.check_same_dims(segmented)?;
    if original.range() != segmented.range() {
        return Err(ImageError::WrongRange {
            expected: original.range(),
            got: segmented.range(),
        }
        .into());
    }
    let t = t_f.clamp(0.0, 1.0);
    let data = original
        .data()
        .iter()
        .zip(segmented.data())
        .map(|(&o, &s)| ((1.0 - t) * o as f64 + t * s as f64) as f32)
        .collect();
    Ok(ImageTensor::new(
        original.height(),
        original.width(),
        original.range(),
        data,
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "procedure", rename_all = "snake_case")]
pub enum HeatmapProcedure {
    Radar,
    Pixel { height: usize, width: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub procedure: HeatmapProcedure,
    pub rows: usize,
    pub cols: usize,
    /// Row-major `(coord1, coord2, t_f)`.
    pub cells: Vec<(f64, f64, f64)>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if i + 1 == n && n > 1 { hi } else { lo + step * i as f64 })
}

/// Threat value over a regular grid.
///
/// Radar: `coord1 = l_x` over `[0, l_x_max]`, `coord2 = l_y` over `[0, l_y_max]`.
/// Pixel: `coord1 = x` (row) over `[0, h]`, `coord2 = y` (column) over
/// `[w/2, w]`; the other half of the frame is the mirror image.
pub fn threat_heatmap(
    procedure: HeatmapProcedure,
    rows: usize,
    cols: usize,
    cfg: &ThreatConfig,
) -> Heatmap {
    let mut cells = Vec::with_capacity(rows * cols);
    match procedure {
        HeatmapProcedure::Radar => {
            for lx in linspace(0.0, cfg.l_x_max_cm, rows) {
                for ly in linspace(0.0, cfg.l_y_max_cm, cols) {
                    cells.push((lx, ly, radar_value(lx, ly, cfg)));
                }
            }
        }
        HeatmapProcedure::Pixel { height, width } => {
            for x in linspace(0.0, height as f64, rows) {
                for y in linspace(width as f64 / 2.0, width as f64, cols) {
                    cells.push((x, y, pixel_threat_at(x, y, height, width)));
                }
            }
        }
    }
    Heatmap {
        procedure,
        rows,
        cols,
        cells,
    }
}

impl Heatmap {
    pub fn at(&self, row: usize, col: usize) -> (f64, f64, f64) {
        self.cells[row * self.cols + col]
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, crate::table::TableError> {
        crate::table::csv_bytes(
            &["coord1", "coord2", "t_f"],
            self.cells.iter().map(|&(a, b, t)| [a, b, t]),
        )
    }
}

/// Raw-range check shared by fusion callers.
pub fn ensure_raw(img: &ImageTensor) -> Result<(), ThreatError> {
    if img.range() == PixelRange::Raw {
        Ok(())
    } else {
        Err(ImageError::WrongRange {
            expected: PixelRange::Raw,
            got: img.range(),
        }
        .into())
    }
}
