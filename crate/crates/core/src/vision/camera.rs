use serde::{Deserialize, Serialize};

use crate::world::VehicleState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraId {
    Left,
    Center,
    Right,
}

impl CameraId {
    pub const ALL: [CameraId; 3] = [CameraId::Left, CameraId::Center, CameraId::Right];
}

/// Three forward cameras on a common mount. The center camera sits on the
/// vehicle axis; the side cameras are offset symmetrically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraRig {
    pub height_px: usize,
    pub width_px: usize,
    pub hfov_deg: f64,
    pub mount_height_m: f64,
    /// Lateral offset of the left camera; the right one mirrors it.
    pub side_offset_m: f64,
    /// Yaw of the left camera (positive = toward the left); the right one mirrors it.
    pub side_yaw_deg: f64,
    /// Ground beyond this distance is drawn as off-road.
    pub max_range_m: f64,
}

impl Default for CameraRig {
    fn default() -> Self {
        Self {
            height_px: 100,
            width_px: 150,
            hfov_deg: 50.0,
            mount_height_m: 1.5,
            side_offset_m: 0.6,
            side_yaw_deg: 0.0,
            max_range_m: 150.0,
        }
    }
}

/// World-space camera: optical center and yaw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl CameraRig {
    pub fn with_frame(mut self, height_px: usize, width_px: usize) -> Self {
        self.height_px = height_px;
        self.width_px = width_px;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut bad = Vec::new();
        if self.height_px < 2 || self.width_px < 1 {
            bad.push("frame must be at least 2x1 pixels".to_string());
        }
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            bad.push(format!("hfov_deg {} must lie in (0, 180)", self.hfov_deg));
        }
        if !(self.mount_height_m > 0.0) {
            bad.push("mount_height_m must be > 0".to_string());
        }
        if !(self.max_range_m > 0.0) {
            bad.push("max_range_m must be > 0".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad.join("; "))
        }
    }

    /// Focal length in pixels.
    pub fn focal_px(&self) -> f64 {
        0.5 * self.width_px as f64 / (0.5 * self.hfov_deg.to_radians()).tan()
    }

    /// `(lateral offset, yaw offset)` of a camera relative to the vehicle.
    pub fn mount(&self, cam: CameraId) -> (f64, f64) {
        let yaw = self.side_yaw_deg.to_radians();
        match cam {
            CameraId::Left => (self.side_offset_m, yaw),
            CameraId::Center => (0.0, 0.0),
            CameraId::Right => (-self.side_offset_m, -yaw),
        }
    }

    pub fn pose(&self, v: &VehicleState, cam: CameraId) -> CameraPose {
        let (lat, yaw) = self.mount(cam);
        CameraPose {
            x: v.x - lat * v.heading.sin(),
            y: v.y + lat * v.heading.cos(),
            z: self.mount_height_m,
            yaw: v.heading + yaw,
        }
    }

    /// Camera-frame ray `(forward, left, up)` through the center of pixel `(row, col)`.
    /// The horizon falls on the boundary between rows `h/2 - 1` and `h/2`.
    pub fn ray(&self, row: usize, col: usize) -> (f64, f64, f64) {
        let f = self.focal_px();
        let left = -(col as f64 + 0.5 - 0.5 * self.width_px as f64) / f;
        let up = -(row as f64 + 0.5 - 0.5 * self.height_px as f64) / f;
        (1.0, left, up)
    }
}
