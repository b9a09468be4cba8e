//! Deterministic 2D driving world: road, hazards, vehicle kinematics, range
//! sensing and closed-loop rollout.

mod expert;
mod hazard;
pub mod radar;
mod road;
mod rollout;
mod vehicle;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expert::ExpertPolicy;
pub use hazard::{HazardKind, HazardObject};
pub use radar::{RadarDetection, RadarReading};
pub use road::{Frenet, Pose2, Road, RoadSpec, SegmentSpec, WindingRoad};
pub use rollout::{
    rollout, PolicyError, RolloutOutcome, SteeringPolicy, Termination, Trajectory,
    TrajectorySample,
};
pub use vehicle::{step_vehicle, VehicleState};

use crate::rng::Rng;
use crate::steering::SteeringAngle;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("invalid road: {0}")]
    InvalidRoad(String),
    #[error(
        "cannot place {count} hazards {spacing_m} m apart on {usable_m:.1} m of usable road \
         (needs {required_m:.1} m)"
    )]
    InfeasiblePlacement {
        count: usize,
        spacing_m: f64,
        usable_m: f64,
        required_m: f64,
    },
    #[error("invalid vehicle: {0}")]
    InvalidVehicle(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardPlacement {
    /// Uniformly chosen lane of the travel direction, with lateral jitter.
    RandomLane,
    /// Centered in the driving lane (lane 0).
    DrivingLaneCenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HazardConfig {
    pub count: usize,
    pub min_spacing_m: f64,
    pub placement: HazardPlacement,
    pub lateral_jitter_m: f64,
    /// Hazard-free road at the start, so the vehicle begins on a clear lane.
    pub start_clearance_m: f64,
    pub end_clearance_m: f64,
}

impl Default for HazardConfig {
    fn default() -> Self {
        Self {
            count: 12,
            min_spacing_m: 30.0,
            placement: HazardPlacement::RandomLane,
            lateral_jitter_m: 0.4,
            start_clearance_m: 60.0,
            end_clearance_m: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleConfig {
    pub speed_mps: f64,
    pub wheelbase_m: f64,
    pub start_station_m: f64,
    pub start_lateral_m: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self {
            speed_mps: 10.0,
            wheelbase_m: 2.5,
            start_station_m: 5.0,
            start_lateral_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub road: RoadSpec,
    pub hazards: HazardConfig,
    pub vehicle: VehicleConfig,
    pub dt_ms: u64,
    /// Seed used by [`WorldConfig::build`]; experiment runs derive their own.
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            road: RoadSpec::default(),
            hazards: HazardConfig::default(),
            vehicle: VehicleConfig::default(),
            dt_ms: 50,
            seed: 42,
        }
    }
}

impl WorldConfig {
    pub fn build(&self) -> Result<WorldState, WorldError> {
        build_world(Rng::new(self.seed), self)
    }
}

/// Road, hazards and vehicle. Road and hazards are shared between the states
/// of one rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub road: Arc<Road>,
    pub hazards: Arc<Vec<HazardObject>>,
    pub vehicle: VehicleState,
}

/// Serializable view of a world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub road: RoadSpec,
    pub hazards: Vec<HazardObject>,
    pub vehicle: VehicleState,
}

impl WorldState {
    pub fn with_vehicle(&self, vehicle: VehicleState) -> Self {
        Self {
            road: Arc::clone(&self.road),
            hazards: Arc::clone(&self.hazards),
            vehicle,
        }
    }

    pub fn vehicle_frenet(&self) -> Frenet {
        self.road.project(self.vehicle.x, self.vehicle.y)
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        WorldSnapshot {
            road: self.road.spec().clone(),
            hazards: self.hazards.as_ref().clone(),
            vehicle: self.vehicle,
        }
    }

    pub fn from_snapshot(s: WorldSnapshot) -> Result<Self, WorldError> {
        Ok(Self {
            road: Arc::new(Road::new(s.road)?),
            hazards: Arc::new(s.hazards),
            vehicle: s.vehicle,
        })
    }

    /// Vehicle placed at Frenet `(station, lateral)`, aligned with the road.
    pub fn vehicle_at(&self, station: f64, lateral: f64) -> VehicleState {
        let pose = self.road.pose_at(station);
        let (x, y) = self.road.point_at(station, lateral);
        VehicleState {
            x,
            y,
            heading: pose.heading,
            ..self.vehicle
        }
    }

    /// Hazard with an explicit Frenet pose, for hand-built scenes.
    pub fn hazard_at(&self, id: usize, kind: HazardKind, station: f64, lateral: f64) -> HazardObject {
        let (half_length, half_width, height) = kind.default_size();
        let (x, y) = self.road.point_at(station, lateral);
        HazardObject {
            id,
            kind,
            x,
            y,
            heading: self.road.pose_at(station).heading,
            half_length,
            half_width,
            height,
            station,
            lateral,
        }
    }

    pub fn with_hazards(&self, hazards: Vec<HazardObject>) -> Self {
        Self {
            road: Arc::clone(&self.road),
            hazards: Arc::new(hazards),
            vehicle: self.vehicle,
        }
    }
}

/// Builds the world. A pure function of `(rng, cfg)`.
///
/// Hazard stations are drawn without rejection: `n` uniforms on the usable
/// length minus the `(n - 1)` mandatory gaps, sorted, then spread by the gap.
pub fn build_world(mut rng: Rng, cfg: &WorldConfig) -> Result<WorldState, WorldError> {
    let road = Road::new(cfg.road.clone())?;
    let v = &cfg.vehicle;
    if !(v.speed_mps >= 0.0) || !(v.wheelbase_m > 0.0) {
        return Err(WorldError::InvalidVehicle(
            "speed must be >= 0 and wheelbase > 0".into(),
        ));
    }
    let h = &cfg.hazards;
    let usable_lo = h.start_clearance_m;
    let usable = road.total_length() - h.end_clearance_m - usable_lo;
    let n = h.count;
    let mut hazards = Vec::with_capacity(n);
    if n > 0 {
        let required = (n - 1) as f64 * h.min_spacing_m;
        if usable < required || usable < 0.0 {
            return Err(WorldError::InfeasiblePlacement {
                count: n,
                spacing_m: h.min_spacing_m,
                usable_m: usable.max(0.0),
                required_m: required,
            });
        }
        let slack = usable - required;
        let mut offsets: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, slack)).collect();
        offsets.sort_by(f64::total_cmp);
        for (i, off) in offsets.into_iter().enumerate() {
            let station = usable_lo + off + i as f64 * h.min_spacing_m;
            let kind = HazardKind::ALL[rng.below(HazardKind::ALL.len())];
            let lateral = match h.placement {
                HazardPlacement::DrivingLaneCenter => 0.0,
                HazardPlacement::RandomLane => {
                    let lane = rng.below(road.lanes_per_direction());
                    road.lane_center(lane) + rng.uniform(-h.lateral_jitter_m, h.lateral_jitter_m)
                }
            };
            let yaw = rng.uniform(0.0, std::f64::consts::PI);
            let (half_length, half_width, height) = kind.default_size();
            let (x, y) = road.point_at(station, lateral);
            hazards.push(HazardObject {
                id: i,
                kind,
                x,
                y,
                heading: road.pose_at(station).heading + yaw,
                half_length,
                half_width,
                height,
                station,
                lateral,
            });
        }
    }
    let pose = road.pose_at(v.start_station_m);
    let (x, y) = road.point_at(v.start_station_m, v.start_lateral_m);
    let vehicle = VehicleState {
        x,
        y,
        heading: pose.heading,
        speed: v.speed_mps,
        wheelbase: v.wheelbase_m,
        steering: SteeringAngle::ZERO,
    };
    Ok(WorldState {
        road: Arc::new(road),
        hazards: Arc::new(hazards),
        vehicle,
    })
}

/// Range-sensor reading from the world's current vehicle pose.
pub fn radar_scan(w: &WorldState) -> RadarReading {
    radar::scan(&w.vehicle, &w.hazards)
}
