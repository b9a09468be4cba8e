use serde::{Deserialize, Serialize};

use crate::steering::SteeringAngle;

/// Kinematic bicycle state. `heading` is counter-clockwise from the world x axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub wheelbase: f64,
    pub steering: SteeringAngle,
}

impl VehicleState {
    pub fn with_steering(mut self, steering: SteeringAngle) -> Self {
        self.steering = steering;
        self
    }

    /// World point to vehicle frame: `(forward, left)`.
    pub fn to_body(&self, x: f64, y: f64) -> (f64, f64) {
        let (c, s) = (self.heading.cos(), self.heading.sin());
        let (dx, dy) = (x - self.x, y - self.y);
        (c * dx + s * dy, -s * dx + c * dy)
    }
}

/// One forward-Euler step of the kinematic bicycle.
///
/// Position advances `speed * dt` along the current heading; the heading then
/// changes by `(speed * dt / wheelbase) * tan(delta)` where `delta` is the
/// driving direction of the steering command. Positive steering turns right,
/// which is clockwise, so the heading decreases.
pub fn step_vehicle(v: &VehicleState, dt: f64) -> VehicleState {
    debug_assert!(dt > 0.0);
    let ds = v.speed * dt;
    let delta = v.steering.direction().radians();
    VehicleState {
        x: v.x + ds * v.heading.cos(),
        y: v.y + ds * v.heading.sin(),
        heading: v.heading - ds / v.wheelbase * delta.tan(),
        ..*v
    }
}
