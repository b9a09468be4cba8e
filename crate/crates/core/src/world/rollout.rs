use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{step_vehicle, HazardObject, VehicleState, WorldState};
use crate::steering::SteeringAngle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("policy failed: {0}")]
    Failed(String),
    #[error("rollout timing invalid: {0}")]
    Timing(String),
}

/// Anything that maps the current world to a steering command.
pub trait SteeringPolicy {
    fn steer(&mut self, world: &WorldState) -> Result<SteeringAngle, PolicyError>;
}

impl<F> SteeringPolicy for F
where
    F: FnMut(&WorldState) -> SteeringAngle,
{
    fn steer(&mut self, world: &WorldState) -> Result<SteeringAngle, PolicyError> {
        Ok(self(world))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t_ms: u64,
    pub lateral_m: f64,
    pub station_m: f64,
    pub direction_deg: f64,
}

/// Fixed-step samples of lateral offset, station and driving direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt_ms: u64,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn is_uniform(&self) -> bool {
        self.samples
            .windows(2)
            .all(|w| w[1].t_ms == w[0].t_ms + self.dt_ms)
    }

    pub fn start_ms(&self) -> Option<u64> {
        self.samples.first().map(|s| s.t_ms)
    }

    pub fn end_ms(&self) -> Option<u64> {
        self.samples.last().map(|s| s.t_ms)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, crate::table::TableError> {
        crate::table::csv_bytes(
            &["t_ms", "lateral_m", "station_m", "direction_deg"],
            self.samples.iter().map(|s| {
                [
                    s.t_ms.to_string(),
                    s.lateral_m.to_string(),
                    s.station_m.to_string(),
                    s.direction_deg.to_string(),
                ]
            }),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    OffRoad { t_ms: u64 },
    EndOfRoad { t_ms: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutOutcome {
    pub trajectory: Trajectory,
    /// Vehicle state at each trajectory sample, carrying the steering applied from it.
    pub states: Vec<VehicleState>,
    pub termination: Termination,
    /// `(hazard id, t_ms)` of the first contact with each hazard.
    pub collisions: Vec<(usize, u64)>,
}

impl RolloutOutcome {
    pub fn terminated_early(&self) -> bool {
        !matches!(self.termination, Termination::Completed)
    }
}

/// Vehicle footprint approximated as a disc for contact detection.
const VEHICLE_RADIUS_M: f64 = 1.2;

/// Closed-loop drive: at each step the policy sees the world, its command is
/// recorded, then the vehicle advances by `dt_ms`.
pub fn rollout(
    world: &WorldState,
    policy: &mut dyn SteeringPolicy,
    duration_ms: u64,
    dt_ms: u64,
) -> Result<RolloutOutcome, PolicyError> {
    if dt_ms == 0 || duration_ms % dt_ms != 0 {
        return Err(PolicyError::Timing(format!(
            "dt {dt_ms} ms must be positive and divide duration {duration_ms} ms"
        )));
    }
    let steps = duration_ms / dt_ms;
    let dt = dt_ms as f64 / 1000.0;
    let road = &world.road;
    let mut state = world.clone();
    let mut samples = Vec::with_capacity(steps as usize);
    let mut states = Vec::with_capacity(steps as usize);
    let mut collisions: Vec<(usize, u64)> = Vec::new();
    let mut station_hint = state.vehicle_frenet().station;
    let mut termination = Termination::Completed;

    for k in 0..steps {
        let t_ms = k * dt_ms;
        let frenet = road.project_between(
            state.vehicle.x,
            state.vehicle.y,
            station_hint - 20.0,
            station_hint + 20.0,
        );
        station_hint = frenet.station;
        if frenet.lateral < road.right_edge() || frenet.lateral > road.left_edge() {
            termination = Termination::OffRoad { t_ms };
            break;
        }
        if frenet.station >= road.total_length() {
            termination = Termination::EndOfRoad { t_ms };
            break;
        }
        record_collisions(&state.vehicle, &world.hazards, t_ms, &mut collisions);

        let steering = policy.steer(&state)?;
        let vehicle = state.vehicle.with_steering(steering);
        samples.push(TrajectorySample {
            t_ms,
            lateral_m: frenet.lateral,
            station_m: frenet.station,
            direction_deg: steering.direction().degrees,
        });
        states.push(vehicle);
        state = state.with_vehicle(step_vehicle(&vehicle, dt));
    }

    Ok(RolloutOutcome {
        trajectory: Trajectory { dt_ms, samples },
        states,
        termination,
        collisions,
    })
}

fn record_collisions(
    v: &VehicleState,
    hazards: &[HazardObject],
    t_ms: u64,
    out: &mut Vec<(usize, u64)>,
) {
    for h in hazards {
        if h.overlaps_disc(v.x, v.y, VEHICLE_RADIUS_M) && !out.iter().any(|(id, _)| *id == h.id) {
            out.push((h.id, t_ms));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{HazardConfig, HazardKind, VehicleConfig, WindingRoad, WorldConfig};

    fn straight(len: f64) -> WorldState {
        WorldConfig {
            road: WindingRoad::straight(len),
            hazards: HazardConfig {
                count: 0,
                ..Default::default()
            },
            vehicle: VehicleConfig {
                start_station_m: 0.0,
                ..Default::default()
            },
            ..Default::default()
        }
        .build()
        .unwrap()
    }

    #[test]
    fn zero_policy_on_straight_keeps_lateral() {
        let w = straight(500.0);
        let mut zero = |_: &WorldState| SteeringAngle::ZERO;
        let out = rollout(&w, &mut zero, 10_000, 50).unwrap();
        assert_eq!(out.trajectory.samples.len(), 200);
        assert!(out.trajectory.is_uniform());
        assert!(out.trajectory.samples.iter().all(|s| s.lateral_m.abs() < 1e-12));
        assert_eq!(out.termination, Termination::Completed);
    }

    #[test]
    fn rollout_is_deterministic() {
        let w = WorldConfig::default().build().unwrap();
        let mut a = crate::world::ExpertPolicy::default();
        let mut b = crate::world::ExpertPolicy::default();
        let ra = rollout(&w, &mut a, 20_000, 50).unwrap();
        let rb = rollout(&w, &mut b, 20_000, 50).unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn leaving_the_road_terminates_early() {
        let w = straight(500.0);
        let mut hard_right = |_: &WorldState| SteeringAngle::new(0.5);
        let out = rollout(&w, &mut hard_right, 20_000, 50).unwrap();
        assert!(matches!(out.termination, Termination::OffRoad { .. }));
        assert!(out.terminated_early());
        assert!(out.trajectory.samples.len() < 400);
    }

    #[test]
    fn driving_through_a_hazard_is_flagged() {
        let w = straight(200.0);
        let w = w.with_hazards(vec![w.hazard_at(3, HazardKind::WoodenBox, 40.0, 0.0)]);
        let mut zero = |_: &WorldState| SteeringAngle::ZERO;
        let out = rollout(&w, &mut zero, 10_000, 50).unwrap();
        assert_eq!(out.collisions.len(), 1);
        assert_eq!(out.collisions[0].0, 3);
    }

    #[test]
    fn timing_must_divide() {
        let w = straight(100.0);
        let mut zero = |_: &WorldState| SteeringAngle::ZERO;
        assert!(matches!(rollout(&w, &mut zero, 1000, 30), Err(PolicyError::Timing(_))));
        assert!(matches!(rollout(&w, &mut zero, 1000, 0), Err(PolicyError::Timing(_))));
    }
}
