use serde::{Deserialize, Serialize};

/// Debris classes placed on the roadway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardKind {
    Rock,
    WoodenBox,
    OilBarrel,
    WoodenPallet,
    PipeSection,
}

impl HazardKind {
    pub const ALL: [HazardKind; 5] = [
        HazardKind::Rock,
        HazardKind::WoodenBox,
        HazardKind::OilBarrel,
        HazardKind::WoodenPallet,
        HazardKind::PipeSection,
    ];

    /// Index into the hazard part of the class palette.
    pub fn color_id(self) -> usize {
        self as usize
    }

    pub fn from_color_id(id: usize) -> Option<HazardKind> {
        Self::ALL.get(id).copied()
    }

    /// Half-length, half-width and height in meters.
    pub fn default_size(self) -> (f64, f64, f64) {
        match self {
            HazardKind::Rock => (0.55, 0.50, 0.60),
            HazardKind::WoodenBox => (0.50, 0.50, 0.80),
            HazardKind::OilBarrel => (0.35, 0.35, 0.90),
            HazardKind::WoodenPallet => (0.60, 0.50, 0.25),
            HazardKind::PipeSection => (1.00, 0.30, 0.60),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardObject {
    pub id: usize,
    pub kind: HazardKind,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
    pub height: f64,
    /// Frenet position of the hazard center.
    pub station: f64,
    pub lateral: f64,
}

impl HazardObject {
    pub fn color_id(&self) -> usize {
        self.kind.color_id()
    }

    /// Transforms a world point into the hazard's body frame.
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (c, s) = (self.heading.cos(), self.heading.sin());
        let (dx, dy) = (x - self.x, y - self.y);
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Whether a disc of `radius` around `(x, y)` touches the footprint.
    pub fn overlaps_disc(&self, x: f64, y: f64, radius: f64) -> bool {
        let (lx, ly) = self.to_local(x, y);
        let qx = (lx.abs() - self.half_length).max(0.0);
        let qy = (ly.abs() - self.half_width).max(0.0);
        qx.hypot(qy) <= radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn color_ids_are_a_bijection() {
        for (i, k) in HazardKind::ALL.iter().enumerate() {
            assert_eq!(k.color_id(), i);
            assert_eq!(HazardKind::from_color_id(i), Some(*k));
        }
        assert_eq!(HazardKind::from_color_id(5), None);
    }

    #[test]
    fn footprints_are_positive() {
        for k in HazardKind::ALL {
            let (l, w, h) = k.default_size();
            assert!(l > 0.0 && w > 0.0 && h > 0.0);
        }
    }
}
