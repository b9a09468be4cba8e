//! Steering command and driving-direction types.
//!
//! Sign convention used everywhere in the crate: positive steering turns the
//! vehicle to the right, negative to the left.

use serde::{Deserialize, Serialize};

pub const STEERING_LIMIT: f64 = 0.5;
/// Driving-direction degrees per unit of normalized steering.
pub const DEGREES_PER_UNIT: f64 = 50.0;

/// Normalized steering command, always in `[-0.5, +0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringAngle {
    normalized: f64,
    /// Raw steering-wheel angle in radians when the value came from the vehicle.
    raw: Option<f64>,
}

impl SteeringAngle {
    pub const ZERO: SteeringAngle = SteeringAngle {
        normalized: 0.0,
        raw: None,
    };

    /// Clamps into `[-0.5, +0.5]`. NaN maps to zero.
    pub fn new(normalized: f64) -> Self {
        let normalized = if normalized.is_nan() {
            0.0
        } else {
            normalized.clamp(-STEERING_LIMIT, STEERING_LIMIT)
        };
        Self {
            normalized,
            raw: None,
        }
    }

    /// Min-max normalization of a raw wheel angle:
    /// `-0.5 + max(0, min(1, (raw - min) / (max - min)))`.
    pub fn from_raw(raw: f64, raw_min: f64, raw_max: f64) -> Self {
        debug_assert!(raw_max > raw_min);
        let unit = ((raw - raw_min) / (raw_max - raw_min)).clamp(0.0, 1.0);
        Self {
            normalized: -STEERING_LIMIT + unit,
            raw: Some(raw),
        }
    }

    /// Inverse of [`steering_to_direction`], clamped.
    pub fn from_direction_degrees(degrees: f64) -> Self {
        Self::new(degrees / DEGREES_PER_UNIT)
    }

    pub fn normalized(self) -> f64 {
        self.normalized
    }

    pub fn raw(self) -> Option<f64> {
        self.raw
    }

    pub fn negated(self) -> Self {
        Self {
            normalized: -self.normalized,
            raw: self.raw.map(|r| -r),
        }
    }

    pub fn direction(self) -> DrivingDirection {
        steering_to_direction(self)
    }
}

/// Road-plane driving direction in degrees, `[-25, +25]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivingDirection {
    pub degrees: f64,
}

impl DrivingDirection {
    pub fn radians(self) -> f64 {
        self.degrees.to_radians()
    }
}

pub fn steering_to_direction(s: SteeringAngle) -> DrivingDirection {
    DrivingDirection {
        degrees: DEGREES_PER_UNIT * s.normalized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn direction_examples() {
        assert_eq!(steering_to_direction(SteeringAngle::new(0.5)).degrees, 25.0);
        assert_eq!(steering_to_direction(SteeringAngle::new(0.0)).degrees, 0.0);
        assert_eq!(steering_to_direction(SteeringAngle::new(-0.25)).degrees, -12.5);
    }

    #[test]
    fn construction_clamps() {
        assert_eq!(SteeringAngle::new(0.9).normalized(), 0.5);
        assert_eq!(SteeringAngle::new(-3.0).normalized(), -0.5);
        assert_eq!(SteeringAngle::new(f64::NAN).normalized(), 0.0);
    }

    #[test]
    fn raw_normalization_endpoints() {
        let (lo, hi) = (-0.4363, 0.4363);
        assert_eq!(SteeringAngle::from_raw(lo, lo, hi).normalized(), -0.5);
        assert_eq!(SteeringAngle::from_raw(hi, lo, hi).normalized(), 0.5);
        assert!(SteeringAngle::from_raw(0.0, lo, hi).normalized().abs() < 1e-15);
        assert_eq!(SteeringAngle::from_raw(2.0, lo, hi).normalized(), 0.5);
        assert_eq!(SteeringAngle::from_raw(2.0, lo, hi).raw(), Some(2.0));
    }

    proptest! {
        #[test]
        fn direction_map_is_odd(s in -0.5f64..=0.5) {
            let pos = steering_to_direction(SteeringAngle::new(s)).degrees;
            let neg = steering_to_direction(SteeringAngle::new(-s)).degrees;
            prop_assert_eq!(neg, -pos);
            prop_assert!(pos.abs() <= 25.0);
        }
    }
}
