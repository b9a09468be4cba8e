//! Forward range sensor in medium-range mode.

use serde::{Deserialize, Serialize};

use super::{HazardObject, VehicleState};

pub const MAX_RANGE_CM: f64 = 6000.0;
pub const HALF_FOV_DEG: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarDetection {
    pub hazard_id: usize,
    /// Longitudinal distance, cm.
    pub l_x: f64,
    /// Absolute lateral distance, cm.
    pub l_y: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RadarReading {
    pub detections: Vec<RadarDetection>,
}

impl RadarReading {
    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// Detection of one hazard in the vehicle frame, gated by range and field of view.
pub fn detect(v: &VehicleState, h: &HazardObject) -> Option<RadarDetection> {
    let (fwd, left) = v.to_body(h.x, h.y);
    let l_x = fwd * 100.0;
    let l_y = left.abs() * 100.0;
    let bearing = left.atan2(fwd).to_degrees();
    (fwd >= 0.0 && l_x <= MAX_RANGE_CM && bearing.abs() <= HALF_FOV_DEG).then_some(RadarDetection {
        hazard_id: h.id,
        l_x,
        l_y,
    })
}

pub fn scan(v: &VehicleState, hazards: &[HazardObject]) -> RadarReading {
    RadarReading {
        detections: hazards.iter().filter_map(|h| detect(v, h)).collect(),
    }
}
