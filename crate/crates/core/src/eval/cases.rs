use std::fmt;

use serde::{Deserialize, Serialize};

use crate::controller::ControllerNet;
use crate::image::{ImageError, ImageTensor};
use crate::steering::SteeringAngle;
use crate::threat::{fuse, threat_from_reading, threat_pixel, ThreatConfig, ThreatError, ThreatScore};
use crate::vision::{normalize_image, render_center_with_segmentation, CameraRig, SegmentedImage};
use crate::world::{radar_scan, PolicyError, RadarReading, SteeringPolicy, WorldState};

/// Input wiring of a controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    /// Raw frames.
    Case1,
    /// Frames fused with the segmentation, weighted by the radar threat.
    Case2,
    /// Frames fused with the segmentation, weighted by the pixel threat.
    Case3,
}

impl CaseId {
    pub const ALL: [CaseId; 3] = [CaseId::Case1, CaseId::Case2, CaseId::Case3];

    pub fn number(self) -> u8 {
        match self {
            CaseId::Case1 => 1,
            CaseId::Case2 => 2,
            CaseId::Case3 => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<CaseId> {
        CaseId::ALL.into_iter().find(|c| c.number() == n)
    }

    pub fn label(self) -> &'static str {
        match self {
            CaseId::Case1 => "case1",
            CaseId::Case2 => "case2",
            CaseId::Case3 => "case3",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error(transparent)]
    Threat(#[from] ThreatError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Threat value that weights the fusion, or `None` for raw frames.
pub fn case_threat(
    case: CaseId,
    segmented: &SegmentedImage,
    radar: &RadarReading,
    cfg: &ThreatConfig,
) -> Option<ThreatScore> {
    match case {
        CaseId::Case1 => None,
        CaseId::Case2 => Some(threat_from_reading(radar, cfg)),
        CaseId::Case3 => Some(threat_pixel(segmented)),
    }
}

/// Network input for one frame: the (possibly fused) frame, cropped and normalized.
pub fn case_input(
    case: CaseId,
    frame: &ImageTensor,
    segmented: &SegmentedImage,
    radar: &RadarReading,
    cfg: &ThreatConfig,
) -> Result<ImageTensor, CaseError> {
    let fused = match case_threat(case, segmented, radar, cfg) {
        None => frame.clone(),
        Some(t) => fuse(frame, segmented, &t)?,
    };
    Ok(normalize_image(&fused)?)
}

/// Closed-loop driver backed by a trained controller.
#[derive(Debug, Clone)]
pub struct CnnPolicy {
    pub net: ControllerNet,
    pub case: CaseId,
    pub rig: CameraRig,
    pub threat: ThreatConfig,
}

impl CnnPolicy {
    pub fn input(&self, world: &WorldState) -> Result<ImageTensor, CaseError> {
        let (frame, seg) = render_center_with_segmentation(world, &self.rig);
        case_input(self.case, &frame, &seg, &radar_scan(world), &self.threat)
    }
}

impl SteeringPolicy for CnnPolicy {
    fn steer(&mut self, world: &WorldState) -> Result<SteeringAngle, PolicyError> {
        let x = self
            .input(world)
            .map_err(|e| PolicyError::Failed(e.to_string()))?;
        let y = self
            .net
            .predict(&[x.data()])
            .map_err(|e| PolicyError::Failed(e.to_string()))?;
        Ok(SteeringAngle::new(y[0]))
    }
}
