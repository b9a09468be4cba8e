//! Expert-driven data collection, augmentation and splitting.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::camera::{CameraId, CameraRig};
use super::palette::SegmentedImage;
use super::pipeline::{adjust_brightness, rotate_bilinear, rotate_nearest, AugmentConfig, Augmentation};
use super::render::class_map;
use crate::image::ImageTensor;
use crate::rng::Rng;
use crate::steering::SteeringAngle;
use crate::world::{radar_scan, rollout, PolicyError, RadarReading, RolloutOutcome, SteeringPolicy, WorldState};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("world {world} produced no samples")]
    EmptyRollout { world: usize },
    #[error("only {got} of {wanted} {what} samples available in the worlds")]
    Insufficient {
        what: &'static str,
        wanted: usize,
        got: usize,
    },
    #[error("no worlds to collect from")]
    NoWorlds,
    #[error("invalid dataset config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Pnm(#[from] crate::pnm::PnmError),
    #[error(transparent)]
    Table(#[from] crate::table::TableError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// A side-camera frame with the segmentation seen from the same camera.
#[derive(Debug, Clone, PartialEq)]
pub struct SideView {
    pub image: ImageTensor,
    pub segmented: SegmentedImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub center: ImageTensor,
    pub left: Option<SideView>,
    pub right: Option<SideView>,
    pub segmented: SegmentedImage,
    /// Steering commanded by the expert at capture time.
    pub steering: SteeringAngle,
    pub radar: RadarReading,
    pub timestamp_ms: u64,
    pub world: usize,
    /// Set on augmented copies.
    pub augmentation: Option<Augmentation>,
}

impl Sample {
    pub fn hazard_pixels(&self) -> usize {
        self.segmented.hazard_pixel_count()
    }
}

fn map_side(v: &Option<SideView>, f: impl Fn(&SideView) -> SideView) -> Option<SideView> {
    v.as_ref().map(f)
}

/// Applies one augmentation. Rotation and brightness keep the label; a flip
/// mirrors every frame, swaps the side cameras and negates the label.
pub fn augment(s: &Sample, aug: Augmentation) -> Sample {
    let mut out = match aug {
        Augmentation::Rotate { degrees } => {
            let rot = |v: &SideView| SideView {
                image: rotate_bilinear(&v.image, degrees),
                segmented: rotate_nearest(&v.segmented, degrees),
            };
            Sample {
                center: rotate_bilinear(&s.center, degrees),
                left: map_side(&s.left, rot),
                right: map_side(&s.right, rot),
                segmented: rotate_nearest(&s.segmented, degrees),
                ..s.clone()
            }
        }
        Augmentation::Brightness { factor } => {
            let bright = |v: &SideView| SideView {
                image: adjust_brightness(&v.image, factor),
                segmented: v.segmented.clone(),
            };
            Sample {
                center: adjust_brightness(&s.center, factor),
                left: map_side(&s.left, bright),
                right: map_side(&s.right, bright),
                ..s.clone()
            }
        }
        Augmentation::Flip => {
            let flip = |v: &SideView| SideView {
                image: v.image.flip_horizontal(),
                segmented: v.segmented.flip_horizontal(),
            };
            Sample {
                center: s.center.flip_horizontal(),
                left: map_side(&s.right, flip),
                right: map_side(&s.left, flip),
                segmented: s.segmented.flip_horizontal(),
                steering: s.steering.negated(),
                ..s.clone()
            }
        }
    };
    out.augmentation = Some(aug);
    out
}

/// Draws an augmentation from `cfg` and applies it.
pub fn augment_random(s: &Sample, cfg: &AugmentConfig, rng: &mut Rng) -> Sample {
    augment(s, cfg.draw(rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    /// Frames collected for the train/validation pool before augmentation.
    pub collect: usize,
    /// Hazard frames collected for the test split before augmentation.
    pub test_collect: usize,
    pub sample_period_ms: u64,
    /// Longest drive per world.
    pub episode_ms: u64,
    pub train_fraction: f64,
    pub augment: AugmentConfig,
    /// Augment the test split as well.
    pub augment_test: bool,
    /// Record left and right camera frames.
    pub side_frames: bool,
    /// Standard deviation of the correlated noise added to the executed
    /// steering while collecting. Labels stay the clean policy command.
    pub steering_noise: f64,
    pub noise_correlation_ms: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            collect: 1390,
            test_collect: 52,
            sample_period_ms: 200,
            episode_ms: 200_000,
            train_fraction: 0.8,
            augment: AugmentConfig::default(),
            augment_test: true,
            side_frames: true,
            steering_noise: 0.03,
            noise_correlation_ms: 1000,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self, dt_ms: u64) -> Result<(), String> {
        let mut bad = Vec::new();
        if self.collect == 0 {
            bad.push("dataset.collect must be > 0".to_string());
        }
        if dt_ms == 0 || self.sample_period_ms == 0 || self.sample_period_ms % dt_ms != 0 {
            bad.push(format!(
                "dataset.sample_period_ms {} must be a positive multiple of dt_ms {dt_ms}",
                self.sample_period_ms
            ));
        }
        if dt_ms == 0 || self.episode_ms == 0 || self.episode_ms % dt_ms != 0 {
            bad.push(format!(
                "dataset.episode_ms {} must be a positive multiple of dt_ms {dt_ms}",
                self.episode_ms
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bad.push("dataset.train_fraction must lie in (0, 1)".to_string());
        }
        if !(self.steering_noise >= 0.0 && self.steering_noise <= 0.5) {
            bad.push("dataset.steering_noise must lie in [0, 0.5]".to_string());
        }
        if self.noise_correlation_ms == 0 {
            bad.push("dataset.noise_correlation_ms must be > 0".to_string());
        }
        if let Err(e) = self.augment.validate() {
            bad.push(format!("dataset.augment: {e}"));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad.join("; "))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub splits: Vec<Split>,
    /// For augmented samples, the index of the sample they were derived from.
    pub sources: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    /// Train plus validation.
    pub total: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    pub fn counts(&self) -> SplitCounts {
        let n = |s| self.splits.iter().filter(|&&x| x == s).count();
        let (train, validation, test) = (n(Split::Train), n(Split::Validation), n(Split::Test));
        SplitCounts {
            total: train + validation,
            train,
            validation,
            test,
        }
    }
}

/// Number of training rows for a pool of `pool` samples.
pub fn train_count(pool: usize, fraction: f64) -> usize {
    (fraction * pool as f64).round() as usize
}

fn render_sample(
    world: &WorldState,
    rig: &CameraRig,
    side_frames: bool,
    steering: SteeringAngle,
    timestamp_ms: u64,
    world_index: usize,
) -> Sample {
    let center = class_map(world, rig, CameraId::Center);
    let side = |cam| {
        side_frames.then(|| {
            let m = class_map(world, rig, cam);
            SideView {
                image: m.to_camera_image(),
                segmented: m.to_segmented(),
            }
        })
    };
    Sample {
        center: center.to_camera_image(),
        left: side(CameraId::Left),
        right: side(CameraId::Right),
        segmented: center.to_segmented(),
        steering,
        radar: radar_scan(world),
        timestamp_ms,
        world: world_index,
        augmentation: None,
    }
}

/// Executes `policy` plus first-order autoregressive steering noise and
/// returns the rollout with the clean policy command at every visited state.
fn drive(
    world: &WorldState,
    policy: &mut dyn SteeringPolicy,
    cfg: &DatasetConfig,
    dt_ms: u64,
    rng: Rng,
) -> Result<(RolloutOutcome, Vec<SteeringAngle>), DatasetError> {
    let run = if cfg.steering_noise > 0.0 {
        let a = (-(dt_ms as f64) / cfg.noise_correlation_ms as f64).exp();
        let b = cfg.steering_noise * (3.0 * (1.0 - a * a)).sqrt();
        let mut noisy = NoisyDriver {
            inner: &mut *policy,
            rng,
            a,
            b,
            noise: 0.0,
        };
        rollout(world, &mut noisy, cfg.episode_ms, dt_ms)?
    } else {
        rollout(world, policy, cfg.episode_ms, dt_ms)?
    };
    let labels = if cfg.steering_noise > 0.0 {
        run.states
            .iter()
            .map(|&v| policy.steer(&world.with_vehicle(v)))
            .collect::<Result<_, _>>()?
    } else {
        run.states.iter().map(|v| v.steering).collect()
    };
    Ok((run, labels))
}

struct NoisyDriver<'a> {
    inner: &'a mut dyn SteeringPolicy,
    rng: Rng,
    a: f64,
    b: f64,
    noise: f64,
}

impl SteeringPolicy for NoisyDriver<'_> {
    fn steer(&mut self, world: &WorldState) -> Result<SteeringAngle, PolicyError> {
        let clean = self.inner.steer(world)?;
        self.noise = self.a * self.noise + self.b * self.rng.uniform(-1.0, 1.0);
        Ok(SteeringAngle::new(clean.normalized() + self.noise))
    }
}

/// Drives `policy` through every world and keeps `count` of the frames taken
/// every `sample_period_ms`, at even spacing over all drives in order. With
/// `hazard_only`, only frames that show a hazard are candidates.
pub fn collect_samples(
    worlds: &[WorldState],
    policy: &mut dyn SteeringPolicy,
    rig: &CameraRig,
    cfg: &DatasetConfig,
    dt_ms: u64,
    count: usize,
    hazard_only: bool,
    rng: &Rng,
) -> Result<Vec<Sample>, DatasetError> {
    if worlds.is_empty() {
        return Err(DatasetError::NoWorlds);
    }
    let stride = (cfg.sample_period_ms / dt_ms).max(1) as usize;
    let mut runs = Vec::with_capacity(worlds.len());
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for (wi, world) in worlds.iter().enumerate() {
        let (run, labels) = drive(world, policy, cfg, dt_ms, rng.fork(&format!("drive/{wi}")))?;
        if run.states.is_empty() {
            return Err(DatasetError::EmptyRollout { world: wi });
        }
        let ks: Vec<usize> = (0..run.states.len()).step_by(stride).collect();
        let seen: Vec<bool> = if hazard_only {
            ks.par_iter()
                .map(|&k| {
                    class_map(&world.with_vehicle(run.states[k]), rig, CameraId::Center)
                        .hazard_mask()
                        .contains(&true)
                })
                .collect()
        } else {
            vec![true; ks.len()]
        };
        candidates.extend(ks.iter().zip(seen).filter(|(_, s)| *s).map(|(&k, _)| (wi, k)));
        runs.push((run, labels));
    }
    if candidates.len() < count {
        return Err(DatasetError::Insufficient {
            what: if hazard_only { "hazard" } else { "pool" },
            wanted: count,
            got: candidates.len(),
        });
    }
    let picks: Vec<(usize, usize)> = (0..count).map(|i| candidates[i * candidates.len() / count]).collect();
    Ok(picks
        .par_iter()
        .map(|&(wi, k)| {
            let (run, labels) = &runs[wi];
            let t_ms = run.trajectory.samples[k].t_ms;
            render_sample(&worlds[wi].with_vehicle(run.states[k]), rig, cfg.side_frames, labels[k], t_ms, wi)
        })
        .collect())
}

/// Originals followed by their augmented copies, as `(sample, source)` pairs.
fn with_augmented(
    originals: Vec<Sample>,
    cfg: &AugmentConfig,
    rng: &Rng,
    label: &str,
) -> Vec<Vec<(Sample, Option<usize>)>> {
    let augmented: Vec<Option<Sample>> = originals
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            cfg.enabled.then(|| {
                let mut r = rng.fork(&format!("{label}/{i}"));
                augment_random(s, cfg, &mut r)
            })
        })
        .collect();
    originals
        .into_iter()
        .zip(augmented)
        .map(|(s, a)| {
            let mut group = vec![(s, None)];
            if let Some(a) = a {
                group.push((a, Some(0)));
            }
            group
        })
        .collect()
}

/// Collects the pool and the hazard-only test split, augments, and splits.
///
/// The pool is split by whole groups (an original and its augmented copy) in
/// shuffled order, so a frame and its copy land on the same side whenever the
/// train size allows it. The test split comes from `test_worlds`, spread
/// over their whole drives.
pub fn build_dataset(
    worlds: &[WorldState],
    test_worlds: &[WorldState],
    policy: &mut dyn SteeringPolicy,
    rig: &CameraRig,
    cfg: &DatasetConfig,
    dt_ms: u64,
    rng: &Rng,
) -> Result<Dataset, DatasetError> {
    cfg.validate(dt_ms).map_err(DatasetError::InvalidConfig)?;
    let pool = collect_samples(worlds, policy, rig, cfg, dt_ms, cfg.collect, false, &rng.fork("pool"))?;
    let test = if cfg.test_collect > 0 {
        collect_samples(test_worlds, policy, rig, cfg, dt_ms, cfg.test_collect, true, &rng.fork("test"))?
    } else {
        Vec::new()
    };

    let groups = with_augmented(pool, &cfg.augment, rng, "augment");
    let pool_size: usize = groups.iter().map(Vec::len).sum();
    let want_train = train_count(pool_size, cfg.train_fraction);
    let mut order: Vec<usize> = (0..groups.len()).collect();
    rng.fork("split").shuffle(&mut order);
    let mut group_splits: Vec<Vec<Split>> = groups.iter().map(|g| vec![Split::Validation; g.len()]).collect();
    let mut assigned = 0;
    for &g in &order {
        for slot in group_splits[g].iter_mut() {
            if assigned < want_train {
                *slot = Split::Train;
                assigned += 1;
            }
        }
        if assigned >= want_train {
            break;
        }
    }

    let test_cfg = AugmentConfig {
        enabled: cfg.augment.enabled && cfg.augment_test,
        ..cfg.augment.clone()
    };
    let test_groups = with_augmented(test, &test_cfg, rng, "augment-test");

    let mut ds = Dataset {
        samples: Vec::with_capacity(pool_size + 2 * cfg.test_collect),
        splits: Vec::new(),
        sources: Vec::new(),
    };
    let mut push_groups = |groups: Vec<Vec<(Sample, Option<usize>)>>, splits: Vec<Vec<Split>>| {
        for (group, split) in groups.into_iter().zip(splits) {
            let base = ds.samples.len();
            for ((s, src), sp) in group.into_iter().zip(split) {
                ds.samples.push(s);
                ds.splits.push(sp);
                ds.sources.push(src.map(|o| base + o));
            }
        }
    };
    push_groups(groups, group_splits);
    let test_splits = test_groups.iter().map(|g| vec![Split::Test; g.len()]).collect();
    push_groups(test_groups, test_splits);
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub split: Split,
    pub world: usize,
    pub timestamp_ms: u64,
    pub steering: f64,
    pub direction_deg: f64,
    pub hazard_pixels: usize,
    pub source: Option<usize>,
    pub augmentation: Option<Augmentation>,
    pub center: String,
    pub segmented: String,
    pub left: Option<String>,
    pub right: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub counts: SplitCounts,
    /// Original frames only, before augmentation.
    pub collected: SplitCounts,
    pub train_with_hazard: usize,
    pub samples: Vec<ManifestEntry>,
}

impl Dataset {
    pub fn manifest(&self) -> Manifest {
        let originals = |s| {
            (0..self.len())
                .filter(|&i| self.splits[i] == s && self.sources[i].is_none())
                .count()
        };
        let (tr, va, te) = (
            originals(Split::Train),
            originals(Split::Validation),
            originals(Split::Test),
        );
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let frame = |tag: &str| format!("frames/{i:05}_{tag}.ppm");
                ManifestEntry {
                    index: i,
                    split: self.splits[i],
                    world: s.world,
                    timestamp_ms: s.timestamp_ms,
                    steering: s.steering.normalized(),
                    direction_deg: s.steering.direction().degrees,
                    hazard_pixels: s.hazard_pixels(),
                    source: self.sources[i],
                    augmentation: s.augmentation,
                    center: frame("center"),
                    segmented: frame("seg"),
                    left: s.left.as_ref().map(|_| frame("left")),
                    right: s.right.as_ref().map(|_| frame("right")),
                }
            })
            .collect();
        Manifest {
            counts: self.counts(),
            collected: SplitCounts {
                total: tr + va,
                train: tr,
                validation: va,
                test: te,
            },
            train_with_hazard: self
                .indices(Split::Train)
                .iter()
                .filter(|&&i| self.samples[i].hazard_pixels() > 0)
                .count(),
            samples,
        }
    }

    /// Writes `manifest.json`, `labels.csv` and, when `frames` is set, every
    /// frame as a pixmap under `frames/`.
    pub fn write(&self, dir: &Path, frames: bool) -> Result<Manifest, DatasetError> {
        std::fs::create_dir_all(dir)?;
        let manifest = self.manifest();
        if frames {
            std::fs::create_dir_all(dir.join("frames"))?;
            for (s, e) in self.samples.iter().zip(&manifest.samples) {
                let path = |p: &str| -> PathBuf { dir.join(p) };
                crate::pnm::write(path(&e.center), &s.center)?;
                crate::pnm::write(path(&e.segmented), s.segmented.image())?;
                if let (Some(v), Some(p)) = (&s.left, &e.left) {
                    crate::pnm::write(path(p), &v.image)?;
                }
                if let (Some(v), Some(p)) = (&s.right, &e.right) {
                    crate::pnm::write(path(p), &v.image)?;
                }
            }
        }
        crate::table::write_json(dir.join("manifest.json"), &manifest)?;
        crate::table::write_csv(
            dir.join("labels.csv"),
            &["index", "split", "timestamp_ms", "steering", "direction_deg", "hazard_pixels", "source"],
            manifest.samples.iter().map(|e| {
                [
                    e.index.to_string(),
                    serde_json::to_value(e.split)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default(),
                    e.timestamp_ms.to_string(),
                    e.steering.to_string(),
                    e.direction_deg.to_string(),
                    e.hazard_pixels.to_string(),
                    e.source.map(|s| s.to_string()).unwrap_or_default(),
                ]
            }),
        )?;
        Ok(manifest)
    }
}
