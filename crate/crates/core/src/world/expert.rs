use serde::{Deserialize, Serialize};

use super::{PolicyError, SteeringPolicy, WorldState};
use crate::steering::SteeringAngle;

/// Scripted driver that produces the ground-truth steering.
///
/// Pure pursuit toward a look-ahead point on the driving-lane centerline. While
/// a hazard sits in the driving lane between `engage_ahead_m` ahead and
/// `release_behind_m` behind the vehicle, the look-ahead point is shifted
/// left by up to `bypass_lanes` lane widths. The shift ramps linearly over
/// `ramp_m` of travel at both ends; a zero ramp gives a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpertPolicy {
    pub lookahead_m: f64,
    pub bypass_lanes: f64,
    pub engage_ahead_m: f64,
    pub release_behind_m: f64,
    pub ramp_m: f64,
}

impl Default for ExpertPolicy {
    fn default() -> Self {
        Self {
            lookahead_m: 10.0,
            bypass_lanes: 1.5,
            engage_ahead_m: 40.0,
            release_behind_m: 8.0,
            ramp_m: 15.0,
        }
    }
}

impl ExpertPolicy {
    /// Target lateral offset for a vehicle at `station`.
    pub fn target_lateral(&self, world: &WorldState, station: f64) -> f64 {
        let w = world.road.lane_width();
        let level = world
            .hazards
            .iter()
            .filter(|h| h.lateral.abs() < 0.5 * w)
            .map(|h| self.bypass_level(h.station - station))
            .fold(0.0, f64::max);
        level * self.bypass_lanes * w
    }

    /// Fraction of the full bypass offset for a hazard `ahead` metres away.
    pub fn bypass_level(&self, ahead: f64) -> f64 {
        if ahead > self.engage_ahead_m || ahead < -self.release_behind_m - self.ramp_m {
            return 0.0;
        }
        if self.ramp_m <= 0.0 {
            return if ahead >= -self.release_behind_m { 1.0 } else { 0.0 };
        }
        let engage = (self.engage_ahead_m - ahead) / self.ramp_m;
        let release = (ahead + self.release_behind_m + self.ramp_m) / self.ramp_m;
        engage.min(release).clamp(0.0, 1.0)
    }

    pub fn command(&self, world: &WorldState) -> SteeringAngle {
        let v = &world.vehicle;
        let station = world.vehicle_frenet().station;
        let lateral = self.target_lateral(world, station);
        let (tx, ty) = world.road.point_at(station + self.lookahead_m, lateral);
        let (fwd, left) = v.to_body(tx, ty);
        let dist = fwd.hypot(left).max(1e-6);
        let alpha = left.atan2(fwd);
        // Left-positive wheel angle; steering commands are right-positive.
        let wheel = (2.0 * v.wheelbase * alpha.sin() / dist).atan();
        SteeringAngle::from_direction_degrees(-wheel.to_degrees())
    }
}

impl SteeringPolicy for ExpertPolicy {
    fn steer(&mut self, world: &WorldState) -> Result<SteeringAngle, PolicyError> {
        Ok(self.command(world))
    }
}
