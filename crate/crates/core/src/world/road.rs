//! Road centerline built from tangent-continuous line and arc segments.
//!
//! The centerline is the center of the vehicle's driving lane (lane 0). Lateral
//! offsets are positive to the left. Lanes of the travel direction sit at
//! `k * lane_width` for `k < lanes_per_direction`; the opposite-direction lanes
//! continue further left.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::WorldError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentSpec {
    Line { length_m: f64 },
    /// Positive `turn_deg` turns left.
    Arc { radius_m: f64, turn_deg: f64 },
}

impl SegmentSpec {
    pub fn length(&self) -> f64 {
        match *self {
            SegmentSpec::Line { length_m } => length_m,
            SegmentSpec::Arc { radius_m, turn_deg } => radius_m * turn_deg.abs().to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoadSpec {
    pub segments: Vec<SegmentSpec>,
    pub lane_width_m: f64,
    pub lanes_per_direction: usize,
}

impl Default for RoadSpec {
    fn default() -> Self {
        WindingRoad::default().spec()
    }
}

/// Generator for a road of alternating straights and curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindingRoad {
    pub total_length_m: f64,
    pub curves: usize,
    pub curve_radius_m: f64,
    /// Turn angles cycled over the curves; directions alternate left/right.
    pub turn_angles_deg: Vec<f64>,
    pub lane_width_m: f64,
    pub lanes_per_direction: usize,
}

impl Default for WindingRoad {
    fn default() -> Self {
        Self {
            total_length_m: 1663.0,
            curves: 16,
            curve_radius_m: 40.0,
            turn_angles_deg: vec![45.0, 60.0, 75.0, 90.0],
            lane_width_m: 3.70,
            lanes_per_direction: 2,
        }
    }
}

impl WindingRoad {
    /// Straight road of the given length.
    pub fn straight(length_m: f64) -> RoadSpec {
        RoadSpec {
            segments: vec![SegmentSpec::Line { length_m }],
            ..RoadSpec::with_segments(vec![])
        }
    }

    /// `curves + 1` equal straights interleaved with the curves. Falls back to
    /// a single straight when the curves alone exceed the total length.
    pub fn spec(&self) -> RoadSpec {
        let arcs: Vec<SegmentSpec> = (0..self.curves)
            .map(|i| {
                let angle = self.turn_angles_deg[i % self.turn_angles_deg.len().max(1)];
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                SegmentSpec::Arc {
                    radius_m: self.curve_radius_m,
                    turn_deg: sign * angle,
                }
            })
            .collect();
        let arc_total: f64 = arcs.iter().map(SegmentSpec::length).sum();
        let straight_total = self.total_length_m - arc_total;
        let mut segments = Vec::with_capacity(2 * self.curves + 1);
        if straight_total <= 0.0 || self.curves == 0 {
            segments.push(SegmentSpec::Line {
                length_m: self.total_length_m,
            });
        } else {
            let each = straight_total / (self.curves + 1) as f64;
            for arc in arcs {
                segments.push(SegmentSpec::Line { length_m: each });
                segments.push(arc);
            }
            segments.push(SegmentSpec::Line { length_m: each });
        }
        RoadSpec {
            segments,
            lane_width_m: self.lane_width_m,
            lanes_per_direction: self.lanes_per_direction,
        }
    }
}

impl RoadSpec {
    pub fn with_segments(segments: Vec<SegmentSpec>) -> Self {
        Self {
            segments,
            lane_width_m: 3.70,
            lanes_per_direction: 2,
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if self.segments.is_empty() {
            return Err(WorldError::InvalidRoad("road has no segments".into()));
        }
        if !(self.lane_width_m > 0.0) {
            return Err(WorldError::InvalidRoad("lane_width_m must be positive".into()));
        }
        if self.lanes_per_direction == 0 {
            return Err(WorldError::InvalidRoad(
                "lanes_per_direction must be at least 1".into(),
            ));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            match *seg {
                SegmentSpec::Line { length_m } if !(length_m > 0.0) => {
                    return Err(WorldError::InvalidRoad(format!(
                        "segment {i}: line length must be positive"
                    )))
                }
                SegmentSpec::Arc { radius_m, turn_deg }
                    if !(radius_m > 0.0) || turn_deg == 0.0 || turn_deg.abs() > 180.0 || !turn_deg.is_finite() =>
                {
                    return Err(WorldError::InvalidRoad(format!(
                        "segment {i}: arc needs radius > 0 and 0 < |turn| <= 180 degrees"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Line,
    /// Signed curvature, positive for left turns.
    Arc { curvature: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    start: Pose2,
    start_station: f64,
    length: f64,
    shape: Shape,
}

impl Segment {
    fn pose_at(&self, u: f64) -> Pose2 {
        let Pose2 { x, y, heading } = self.start;
        match self.shape {
            Shape::Line => Pose2 {
                x: x + u * heading.cos(),
                y: y + u * heading.sin(),
                heading,
            },
            Shape::Arc { curvature: k } => {
                let h = heading + k * u;
                Pose2 {
                    x: x + (h.sin() - heading.sin()) / k,
                    y: y - (h.cos() - heading.cos()) / k,
                    heading: h,
                }
            }
        }
    }

    /// Parameter of the closest point on the segment and the distance to it.
    fn closest(&self, px: f64, py: f64) -> (f64, f64) {
        let u = match self.shape {
            Shape::Line => {
                let (dx, dy) = (px - self.start.x, py - self.start.y);
                dx * self.start.heading.cos() + dy * self.start.heading.sin()
            }
            Shape::Arc { curvature: k } => {
                let r = 1.0 / k;
                let (nx, ny) = (-self.start.heading.sin(), self.start.heading.cos());
                let (cx, cy) = (self.start.x + r * nx, self.start.y + r * ny);
                let (ax, ay) = (self.start.x - cx, self.start.y - cy);
                let (vx, vy) = (px - cx, py - cy);
                let delta = (ax * vy - ay * vx).atan2(ax * vx + ay * vy);
                let mut u = delta / k;
                // Points behind the arc start wrap to the far side of the sweep.
                if u < -PI * r.abs() + 0.5 * self.length {
                    u += 2.0 * PI * r.abs();
                }
                u
            }
        };
        let uc = u.clamp(0.0, self.length);
        let p = self.pose_at(uc);
        (uc, (px - p.x).hypot(py - p.y))
    }
}

/// Frenet coordinates relative to the centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frenet {
    pub station: f64,
    pub lateral: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Road {
    spec: RoadSpec,
    segments: Vec<Segment>,
    total_length: f64,
}

impl Road {
    pub fn new(spec: RoadSpec) -> Result<Self, WorldError> {
        spec.validate()?;
        let mut segments = Vec::with_capacity(spec.segments.len());
        let mut pose = Pose2 {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        };
        let mut station = 0.0;
        for s in &spec.segments {
            let shape = match *s {
                SegmentSpec::Line { .. } => Shape::Line,
                SegmentSpec::Arc { radius_m, turn_deg } => Shape::Arc {
                    curvature: turn_deg.signum() / radius_m,
                },
            };
            let seg = Segment {
                start: pose,
                start_station: station,
                length: s.length(),
                shape,
            };
            pose = seg.pose_at(seg.length);
            station += seg.length;
            segments.push(seg);
        }
        Ok(Self {
            spec,
            segments,
            total_length: station,
        })
    }

    pub fn spec(&self) -> &RoadSpec {
        &self.spec
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn lane_width(&self) -> f64 {
        self.spec.lane_width_m
    }

    pub fn lanes_per_direction(&self) -> usize {
        self.spec.lanes_per_direction
    }

    /// Lateral offset of the right road edge.
    pub fn right_edge(&self) -> f64 {
        -0.5 * self.spec.lane_width_m
    }

    /// Lateral offset of the left road edge (far side of the opposite lanes).
    pub fn left_edge(&self) -> f64 {
        (2.0 * self.spec.lanes_per_direction as f64 - 0.5) * self.spec.lane_width_m
    }

    /// Lateral offsets of every painted lane boundary, right to left.
    pub fn lane_boundaries(&self) -> impl Iterator<Item = f64> + '_ {
        let w = self.spec.lane_width_m;
        (0..=2 * self.spec.lanes_per_direction).map(move |j| -0.5 * w + j as f64 * w)
    }

    pub fn lane_center(&self, lane: usize) -> f64 {
        lane as f64 * self.spec.lane_width_m
    }

    fn segment_index(&self, station: f64) -> usize {
        let i = self
            .segments
            .partition_point(|s| s.start_station <= station);
        i.saturating_sub(1)
    }

    /// Centerline pose at `station`. Stations beyond either end extrapolate
    /// along the end tangent.
    pub fn pose_at(&self, station: f64) -> Pose2 {
        let seg = &self.segments[self.segment_index(station)];
        let u = station - seg.start_station;
        if u < 0.0 || u > seg.length {
            let end = seg.pose_at(u.clamp(0.0, seg.length));
            let extra = u - u.clamp(0.0, seg.length);
            return Pose2 {
                x: end.x + extra * end.heading.cos(),
                y: end.y + extra * end.heading.sin(),
                heading: end.heading,
            };
        }
        seg.pose_at(u)
    }

    /// World point at Frenet coordinates.
    pub fn point_at(&self, station: f64, lateral: f64) -> (f64, f64) {
        let p = self.pose_at(station);
        (
            p.x - lateral * p.heading.sin(),
            p.y + lateral * p.heading.cos(),
        )
    }

    pub fn project(&self, x: f64, y: f64) -> Frenet {
        self.project_between(x, y, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Projection restricted to segments overlapping `[station_lo, station_hi]`.
    pub fn project_between(&self, x: f64, y: f64, station_lo: f64, station_hi: f64) -> Frenet {
        let lo = self.segment_index(station_lo);
        let hi = self.segment_index(station_hi);
        let mut best: Option<(f64, usize, f64)> = None;
        for i in lo..=hi {
            let (u, d) = self.segments[i].closest(x, y);
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, i, u));
            }
        }
        let (_, i, u) = best.expect("road has at least one segment");
        let seg = &self.segments[i];
        let p = seg.pose_at(u);
        let (dx, dy) = (x - p.x, y - p.y);
        let (tx, ty) = (p.heading.cos(), p.heading.sin());
        let along = dx * tx + dy * ty;
        let lateral = -dx * ty + dy * tx;
        // Off the ends of the road the along-track residual extends the station.
        let first_or_last = (i == 0 && u == 0.0) || (i + 1 == self.segments.len() && u == seg.length);
        let station = seg.start_station + u + if first_or_last { along } else { 0.0 };
        Frenet { station, lateral }
    }

    /// Signed road curvature at `station` (positive = left).
    pub fn curvature_at(&self, station: f64) -> f64 {
        match self.segments[self.segment_index(station)].shape {
            Shape::Line => 0.0,
            Shape::Arc { curvature } => curvature,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn default_road_is_1663m_with_16_curves() {
        let spec = RoadSpec::default();
        let arcs = spec
            .segments
            .iter()
            .filter(|s| matches!(s, SegmentSpec::Arc { .. }))
            .count();
        assert_eq!(arcs, 16);
        let road = Road::new(spec).unwrap();
        assert!(approx(road.total_length(), 1663.0, 1e-9));
    }

    #[test]
    fn segments_are_tangent_continuous() {
        let road = Road::new(RoadSpec::default()).unwrap();
        for w in road.segments.windows(2) {
            let end = w[0].pose_at(w[0].length);
            assert!(approx(end.x, w[1].start.x, 1e-9));
            assert!(approx(end.y, w[1].start.y, 1e-9));
            assert!(approx(end.heading, w[1].start.heading, 1e-12));
        }
    }

    #[test]
    fn quarter_arc_geometry() {
        let road = Road::new(RoadSpec::with_segments(vec![SegmentSpec::Arc {
            radius_m: 10.0,
            turn_deg: 90.0,
        }]))
        .unwrap();
        let end = road.pose_at(road.total_length());
        assert!(approx(end.x, 10.0, 1e-9) && approx(end.y, 10.0, 1e-9));
        assert!(approx(end.heading, PI / 2.0, 1e-12));
    }

    #[test]
    fn projection_inverts_point_at() {
        let road = Road::new(RoadSpec::default()).unwrap();
        for &(s, d) in &[(3.0, 0.0), (120.0, 1.5), (400.0, -1.0), (900.0, 7.0), (1600.0, 2.0)] {
            let (x, y) = road.point_at(s, d);
            let f = road.project(x, y);
            assert!(approx(f.station, s, 1e-6), "station {} vs {s}", f.station);
            assert!(approx(f.lateral, d, 1e-6), "lateral {} vs {d}", f.lateral);
        }
    }

    #[test]
    fn right_turn_projection() {
        let road = Road::new(RoadSpec::with_segments(vec![
            SegmentSpec::Line { length_m: 20.0 },
            SegmentSpec::Arc {
                radius_m: 30.0,
                turn_deg: -70.0,
            },
            SegmentSpec::Line { length_m: 20.0 },
        ]))
        .unwrap();
        for &(s, d) in &[(25.0, 2.0), (40.0, -1.5), (55.0, 5.0)] {
            let (x, y) = road.point_at(s, d);
            let f = road.project(x, y);
            assert!(approx(f.station, s, 1e-6) && approx(f.lateral, d, 1e-6));
        }
    }

    #[test]
    fn stations_extend_past_the_ends() {
        let road = Road::new(WindingRoad::straight(100.0)).unwrap();
        let f = road.project(-5.0, 1.0);
        assert!(approx(f.station, -5.0, 1e-12) && approx(f.lateral, 1.0, 1e-12));
        let f = road.project(110.0, -1.0);
        assert!(approx(f.station, 110.0, 1e-12));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(Road::new(RoadSpec::with_segments(vec![])).is_err());
        assert!(Road::new(RoadSpec::with_segments(vec![SegmentSpec::Line { length_m: 0.0 }])).is_err());
        let mut spec = WindingRoad::straight(10.0);
        spec.lane_width_m = 0.0;
        assert!(Road::new(spec).is_err());
    }
}
