//! Flat-shaded ray-cast rendering of the world.
//!
//! Each pixel casts one ray through its center. A ray that meets a hazard box
//! takes that hazard's class; otherwise rays below the horizon hit the ground
//! plane and are classified from the Frenet offset of the hit point.

use super::camera::{CameraId, CameraPose, CameraRig};
use super::palette::{camera_color, PixelClass, SegClass, SegmentedImage};
use crate::image::ImageTensor;
use crate::world::{HazardObject, WorldState};

/// Half width of a painted lane line in meters.
const MARKING_HALF_WIDTH_M: f64 = 0.1;

/// Row-major class map seen by one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    pub height: usize,
    pub width: usize,
    pub classes: Vec<PixelClass>,
}

impl ClassMap {
    pub fn at(&self, row: usize, col: usize) -> PixelClass {
        self.classes[row * self.width + col]
    }

    pub fn to_camera_image(&self) -> ImageTensor {
        ImageTensor::from_rgb_fn(self.height, self.width, |r, c| camera_color(self.at(r, c)))
    }

    pub fn to_segmented(&self) -> SegmentedImage {
        let seg: Vec<SegClass> = self.classes.iter().map(|&c| c.into()).collect();
        SegmentedImage::from_classes(self.height, self.width, &seg)
    }

    pub fn hazard_mask(&self) -> Vec<bool> {
        self.classes
            .iter()
            .map(|c| matches!(c, PixelClass::Hazard(_)))
            .collect()
    }
}

/// Entry distance of the ray `o + t d` into a hazard box, if it hits.
fn ray_box(h: &HazardObject, o: (f64, f64, f64), d: (f64, f64, f64)) -> Option<f64> {
    let (lox, loy) = h.to_local(o.0, o.1);
    let (c, s) = (h.heading.cos(), h.heading.sin());
    let ldx = c * d.0 + s * d.1;
    let ldy = -s * d.0 + c * d.1;
    let slabs = [
        (lox, ldx, -h.half_length, h.half_length),
        (loy, ldy, -h.half_width, h.half_width),
        (o.2, d.2, 0.0, h.height),
    ];
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for (p, v, lo, hi) in slabs {
        if v.abs() < 1e-15 {
            if p < lo || p > hi {
                return None;
            }
            continue;
        }
        let (a, b) = ((lo - p) / v, (hi - p) / v);
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        t0 = t0.max(a);
        t1 = t1.min(b);
        if t0 > t1 {
            return None;
        }
    }
    Some(t0)
}

fn classify_ground(world: &WorldState, station: f64, lateral: f64) -> PixelClass {
    let road = &world.road;
    if station < 0.0 || station > road.total_length() {
        return PixelClass::OffRoad;
    }
    if lateral < road.right_edge() - MARKING_HALF_WIDTH_M
        || lateral > road.left_edge() + MARKING_HALF_WIDTH_M
    {
        return PixelClass::OffRoad;
    }
    if road
        .lane_boundaries()
        .any(|b| (lateral - b).abs() <= MARKING_HALF_WIDTH_M)
    {
        return PixelClass::LaneMarking;
    }
    PixelClass::Road
}

/// Classes seen through one camera of the rig.
pub fn class_map(world: &WorldState, rig: &CameraRig, cam: CameraId) -> ClassMap {
    let (h, w) = (rig.height_px, rig.width_px);
    let pose: CameraPose = rig.pose(&world.vehicle, cam);
    let (cy, sy) = (pose.yaw.cos(), pose.yaw.sin());
    let origin = (pose.x, pose.y, pose.z);
    let cam_station = world
        .road
        .project_between(
            pose.x,
            pose.y,
            world.vehicle_frenet().station - 30.0,
            world.vehicle_frenet().station + 30.0,
        )
        .station;

    let visible: Vec<&HazardObject> = world
        .hazards
        .iter()
        .filter(|hz| {
            let (dx, dy) = (hz.x - pose.x, hz.y - pose.y);
            let fwd = cy * dx + sy * dy;
            let reach = hz.half_length.hypot(hz.half_width);
            fwd + reach > 0.0 && dx.hypot(dy) - reach < rig.max_range_m
        })
        .collect();

    let mut classes = Vec::with_capacity(h * w);
    for row in 0..h {
        for col in 0..w {
            let (f, l, u) = rig.ray(row, col);
            let d = (cy * f - sy * l, sy * f + cy * l, u);
            let mut hit: Option<(f64, &HazardObject)> = None;
            for hz in &visible {
                if let Some(t) = ray_box(hz, origin, d) {
                    if hit.is_none_or(|(bt, _)| t < bt) {
                        hit = Some((t, hz));
                    }
                }
            }
            let class = if let Some((_, hz)) = hit {
                PixelClass::Hazard(hz.kind)
            } else if u >= 0.0 {
                PixelClass::Sky
            } else {
                let t = pose.z / -u;
                let dist = t * f.hypot(l);
                if dist > rig.max_range_m {
                    PixelClass::OffRoad
                } else {
                    let (gx, gy) = (origin.0 + t * d.0, origin.1 + t * d.1);
                    let fr = world.road.project_between(
                        gx,
                        gy,
                        cam_station - 10.0 - dist,
                        cam_station + 2.0 * dist + 10.0,
                    );
                    classify_ground(world, fr.station, fr.lateral)
                }
            };
            classes.push(class);
        }
    }
    ClassMap {
        height: h,
        width: w,
        classes,
    }
}

/// Camera frame in the raw `[0, 255]` range.
pub fn render(world: &WorldState, rig: &CameraRig, cam: CameraId) -> ImageTensor {
    class_map(world, rig, cam).to_camera_image()
}

/// Ground-truth segmentation of the center camera.
pub fn segment_oracle(world: &WorldState, rig: &CameraRig) -> SegmentedImage {
    class_map(world, rig, CameraId::Center).to_segmented()
}

/// Center frame and its segmentation from a single ray cast.
pub fn render_center_with_segmentation(
    world: &WorldState,
    rig: &CameraRig,
) -> (ImageTensor, SegmentedImage) {
    let map = class_map(world, rig, CameraId::Center);
    (map.to_camera_image(), map.to_segmented())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vision::palette::camera_color;
    use crate::world::{HazardConfig, HazardKind, VehicleConfig, WindingRoad, WorldConfig};

    fn straight() -> WorldState {
        WorldConfig {
            road: WindingRoad::straight(300.0),
            hazards: HazardConfig {
                count: 0,
                ..Default::default()
            },
            vehicle: VehicleConfig {
                start_station_m: 10.0,
                ..Default::default()
            },
            ..Default::default()
        }
        .build()
        .unwrap()
    }

    fn hazard_colors() -> Vec<[f32; 3]> {
        HazardKind::ALL
            .iter()
            .map(|&k| camera_color(PixelClass::Hazard(k)).map(f32::from))
            .collect()
    }

    fn count_hazard_colored(img: &ImageTensor) -> usize {
        let colors = hazard_colors();
        (0..img.height())
            .flat_map(|r| (0..img.width()).map(move |c| (r, c)))
            .filter(|&(r, c)| colors.contains(&img.pixel(r, c)))
            .count()
    }

    #[test]
    fn empty_road_has_no_hazard_pixels() {
        let w = straight();
        let rig = CameraRig::default();
        assert_eq!(count_hazard_colored(&render(&w, &rig, CameraId::Center)), 0);
        assert_eq!(segment_oracle(&w, &rig).hazard_pixel_count(), 0);
    }

    #[test]
    fn top_half_is_sky_and_road_is_below() {
        let w = straight();
        let rig = CameraRig::default();
        let map = class_map(&w, &rig, CameraId::Center);
        assert!((0..50).all(|r| (0..150).all(|c| map.at(r, c) == PixelClass::Sky)));
        assert_eq!(map.at(99, 75), PixelClass::Road);
    }

    #[test]
    fn hazard_dead_ahead_is_centered() {
        let base = straight();
        let s = base.vehicle_frenet().station;
        let w = base.with_hazards(vec![base.hazard_at(0, HazardKind::WoodenBox, s + 20.0, 0.0)]);
        let rig = CameraRig::default();
        let seg = segment_oracle(&w, &rig);
        let mask = seg.hazard_mask();
        let cols: Vec<f64> = mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| (i % rig.width_px) as f64)
            .collect();
        assert!(!cols.is_empty());
        let centroid = cols.iter().sum::<f64>() / cols.len() as f64;
        assert!((centroid - 75.0).abs() <= 2.0, "centroid {centroid}");
    }

    #[test]
    fn render_and_oracle_share_the_hazard_mask() {
        let base = straight();
        let s = base.vehicle_frenet().station;
        let w = base.with_hazards(vec![
            base.hazard_at(0, HazardKind::Rock, s + 15.0, 1.0),
            base.hazard_at(1, HazardKind::PipeSection, s + 35.0, -0.5),
        ]);
        let rig = CameraRig::default();
        let img = render(&w, &rig, CameraId::Center);
        let seg = segment_oracle(&w, &rig);
        let colors = hazard_colors();
        let from_render: Vec<bool> = (0..img.height() * img.width())
            .map(|i| colors.contains(&img.pixel(i / img.width(), i % img.width())))
            .collect();
        assert_eq!(from_render, seg.hazard_mask());
        assert!(seg.hazard_pixel_count() > 0);
        assert_eq!(seg.hazard_pixel_count(), count_hazard_colored(&img));
    }

    #[test]
    fn hazard_behind_is_culled() {
        let base = straight();
        let s = base.vehicle_frenet().station;
        let w = base.with_hazards(vec![base.hazard_at(0, HazardKind::OilBarrel, s - 6.0, 0.0)]);
        assert_eq!(segment_oracle(&w, &CameraRig::default()).hazard_pixel_count(), 0);
    }

    #[test]
    fn side_cameras_see_shifted_views() {
        let w = straight();
        let rig = CameraRig::default();
        let left = render(&w, &rig, CameraId::Left);
        let right = render(&w, &rig, CameraId::Right);
        assert_ne!(left, right);
        let s = w.vehicle_frenet().station;
        let moved = w.with_vehicle(w.vehicle_at(s, 0.6));
        assert_eq!(left, render(&moved, &rig, CameraId::Center));
        let moved = w.with_vehicle(w.vehicle_at(s, -0.6));
        assert_eq!(right, render(&moved, &rig, CameraId::Center));
    }

    #[test]
    fn mirrored_scene_gives_mirrored_frame() {
        // Road and hazard mirror about the vehicle when the vehicle sits midway
        // between the road edges.
        let base = straight();
        let road = &base.road;
        let mid = 0.5 * (road.left_edge() + road.right_edge());
        let mid = (mid / 0.05).round() * 0.05;
        let s = base.vehicle_frenet().station;
        let centered = base.with_vehicle(base.vehicle_at(s, mid));
        let rig = CameraRig::default();
        let map = class_map(&centered, &rig, CameraId::Center);
        let mut asym = 0;
        for r in 50..100 {
            for c in 0..150 {
                if map.at(r, c) != map.at(r, 149 - c) {
                    asym += 1;
                }
            }
        }
        assert!(asym < 150, "{asym} asymmetric pixels");
    }

    #[test]
    fn full_size_frame_round_trips_through_pnm() {
        let base = straight();
        let s = base.vehicle_frenet().station;
        let w = base.with_hazards(vec![base.hazard_at(0, HazardKind::WoodenPallet, s + 12.0, 0.3)]);
        let rig = CameraRig::default().with_frame(400, 600);
        let img = render(&w, &rig, CameraId::Center);
        let bytes = crate::pnm::encode(&img).unwrap();
        let back = crate::pnm::decode(&bytes).unwrap();
        assert_eq!(back, img);
        assert_eq!(crate::pnm::encode(&back).unwrap(), bytes);
    }
}
