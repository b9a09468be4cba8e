//! Scene classes and their colors in camera frames and in segmented frames.

use crate::image::{ImageError, ImageTensor, PixelRange};
use crate::world::HazardKind;

/// What a camera ray hits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelClass {
    Sky,
    OffRoad,
    Road,
    LaneMarking,
    Hazard(HazardKind),
}

/// Segmentation classes. Sky is folded into off-road.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegClass {
    Road,
    LaneMarking,
    OffRoad,
    Hazard(HazardKind),
}

impl From<PixelClass> for SegClass {
    fn from(c: PixelClass) -> Self {
        match c {
            PixelClass::Sky | PixelClass::OffRoad => SegClass::OffRoad,
            PixelClass::Road => SegClass::Road,
            PixelClass::LaneMarking => SegClass::LaneMarking,
            PixelClass::Hazard(k) => SegClass::Hazard(k),
        }
    }
}

/// Flat-shaded camera colors.
pub fn camera_color(c: PixelClass) -> [u8; 3] {
    match c {
        PixelClass::Sky => [150, 190, 230],
        PixelClass::OffRoad => [72, 104, 52],
        PixelClass::Road => [92, 92, 96],
        PixelClass::LaneMarking => [225, 225, 215],
        PixelClass::Hazard(k) => match k {
            HazardKind::Rock => [120, 112, 104],
            HazardKind::WoodenBox => [139, 101, 62],
            HazardKind::OilBarrel => [52, 70, 112],
            HazardKind::WoodenPallet => [168, 138, 96],
            HazardKind::PipeSection => [110, 110, 118],
        },
    }
}

/// Segmentation palette. Hazard entries are indexed by [`HazardKind::color_id`].
pub const SEG_ROAD: [u8; 3] = [128, 64, 128];
pub const SEG_LANE_MARKING: [u8; 3] = [255, 255, 255];
pub const SEG_OFF_ROAD: [u8; 3] = [0, 0, 0];
pub const SEG_HAZARD: [[u8; 3]; 5] = [
    [255, 0, 0],
    [255, 160, 0],
    [255, 0, 255],
    [255, 255, 0],
    [0, 255, 255],
];

pub fn seg_color(c: SegClass) -> [u8; 3] {
    match c {
        SegClass::Road => SEG_ROAD,
        SegClass::LaneMarking => SEG_LANE_MARKING,
        SegClass::OffRoad => SEG_OFF_ROAD,
        SegClass::Hazard(k) => SEG_HAZARD[k.color_id()],
    }
}

pub fn seg_class_of(rgb: [f32; 3]) -> Option<SegClass> {
    let eq = |c: [u8; 3]| c.iter().zip(rgb).all(|(&a, b)| a as f32 == b);
    if eq(SEG_ROAD) {
        return Some(SegClass::Road);
    }
    if eq(SEG_LANE_MARKING) {
        return Some(SegClass::LaneMarking);
    }
    if eq(SEG_OFF_ROAD) {
        return Some(SegClass::OffRoad);
    }
    SEG_HAZARD
        .iter()
        .position(|&c| eq(c))
        .and_then(HazardKind::from_color_id)
        .map(SegClass::Hazard)
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SegmentationError {
    #[error("pixel ({row}, {col}) is not a palette color")]
    NotPalette { row: usize, col: usize },
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Raster whose every pixel is exactly one palette entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedImage(ImageTensor);

impl SegmentedImage {
    pub fn new(img: ImageTensor) -> Result<Self, SegmentationError> {
        if img.range() != PixelRange::Raw {
            return Err(ImageError::WrongRange {
                expected: PixelRange::Raw,
                got: img.range(),
            }
            .into());
        }
        for row in 0..img.height() {
            for col in 0..img.width() {
                if seg_class_of(img.pixel(row, col)).is_none() {
                    return Err(SegmentationError::NotPalette { row, col });
                }
            }
        }
        Ok(Self(img))
    }

    pub fn from_classes(height: usize, width: usize, classes: &[SegClass]) -> Self {
        assert_eq!(classes.len(), height * width);
        Self(ImageTensor::from_rgb_fn(height, width, |r, c| {
            seg_color(classes[r * width + c])
        }))
    }

    pub fn image(&self) -> &ImageTensor {
        &self.0
    }

    pub fn into_image(self) -> ImageTensor {
        self.0
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn class_at(&self, row: usize, col: usize) -> SegClass {
        seg_class_of(self.0.pixel(row, col)).expect("validated palette image")
    }

    pub fn is_hazard(&self, row: usize, col: usize) -> bool {
        matches!(self.class_at(row, col), SegClass::Hazard(_))
    }

    /// Row-major flags marking hazard pixels.
    pub fn hazard_mask(&self) -> Vec<bool> {
        let (h, w) = (self.height(), self.width());
        (0..h * w).map(|i| self.is_hazard(i / w, i % w)).collect()
    }

    pub fn hazard_pixel_count(&self) -> usize {
        self.hazard_mask().iter().filter(|&&m| m).count()
    }

    pub fn flip_horizontal(&self) -> Self {
        Self(self.0.flip_horizontal())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn palette_entries_are_distinct() {
        let mut all = vec![SEG_ROAD, SEG_LANE_MARKING, SEG_OFF_ROAD];
        all.extend(SEG_HAZARD);
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }
    }

    #[test]
    fn camera_hazard_colors_differ_from_background() {
        let background = [
            PixelClass::Sky,
            PixelClass::OffRoad,
            PixelClass::Road,
            PixelClass::LaneMarking,
        ]
        .map(camera_color);
        for k in HazardKind::ALL {
            assert!(!background.contains(&camera_color(PixelClass::Hazard(k))));
        }
    }

    #[test]
    fn non_palette_pixels_are_rejected() {
        let img = ImageTensor::from_rgb_fn(1, 2, |_, c| if c == 0 { SEG_ROAD } else { [1, 2, 3] });
        assert_eq!(
            SegmentedImage::new(img),
            Err(SegmentationError::NotPalette { row: 0, col: 1 })
        );
    }
}
