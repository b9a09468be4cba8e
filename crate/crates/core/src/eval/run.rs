use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cases::{case_input, CaseId, CnnPolicy};
use super::metrics::{improvement, lateral_at, mae, paired_t_test, rmse, trajectory_rmse, TTest};
use crate::config::ExperimentConfig;
use crate::controller::{train, ControllerNet, History};
use crate::steering::SteeringAngle;
use crate::vision::{build_dataset, Dataset, Split, SplitCounts};
use crate::world::{rollout, RolloutOutcome, Termination, Trajectory, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    World,
    Dataset,
    Inputs(CaseId),
    Train(CaseId),
    OpenLoop(CaseId),
    GroundTruth,
    ClosedLoop(CaseId),
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Config => f.write_str("config"),
            Stage::World => f.write_str("world"),
            Stage::Dataset => f.write_str("dataset"),
            Stage::Inputs(c) => write!(f, "inputs/{c}"),
            Stage::Train(c) => write!(f, "train/{c}"),
            Stage::OpenLoop(c) => write!(f, "open-loop/{c}"),
            Stage::GroundTruth => f.write_str("ground-truth"),
            Stage::ClosedLoop(c) => write!(f, "closed-loop/{c}"),
            Stage::Report => f.write_str("report"),
        }
    }
}

#[derive(Debug, Error)]
#[error("[{stage}] {source}")]
pub struct EvalError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl EvalError {
    pub fn new(stage: Stage, source: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        Self {
            stage,
            source: source.into(),
        }
    }
}

fn at<E: Into<Box<dyn std::error::Error + Send + Sync>>>(stage: Stage) -> impl FnOnce(E) -> EvalError {
    move |e| EvalError::new(stage, e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: CaseId,
    /// Open-loop steering errors on the test split.
    pub rmse: f64,
    pub mae: f64,
    /// `|rmse - rmse_case1| / rmse_case1 * 100`; `None` when the baseline is zero.
    pub improvement_pct: Option<f64>,
    /// Whether the RMSE is below the Case 1 RMSE.
    pub improved: bool,
    /// Lateral-offset RMSE against the ground truth inside the comparison window.
    pub trajectory_rmse: f64,
    pub t_test: Option<TTest>,
    pub t_test_error: Option<String>,
    pub epochs: usize,
    pub best_epoch: Option<usize>,
    pub best_val_loss: Option<f64>,
    pub termination: Termination,
    pub collisions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub frame_height: usize,
    pub frame_width: usize,
    pub dataset: SplitCounts,
    /// Closed-loop comparison windows, `[start_ms, end_ms]`.
    pub window_ms: Vec<[u64; 2]>,
    pub window_samples: usize,
    pub ground_truth_termination: Termination,
    pub ground_truth_collisions: usize,
    pub cases: Vec<CaseReport>,
}

impl EvalReport {
    pub fn case(&self, case: CaseId) -> Option<&CaseReport> {
        self.cases.iter().find(|c| c.case == case)
    }

    pub fn to_json(&self) -> Result<Vec<u8>, serde_json::Error> {
        let mut out = serde_json::to_vec_pretty(self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed {}  frames {}x{}", self.seed, self.frame_height, self.frame_width);
        let d = &self.dataset;
        let _ = writeln!(
            s,
            "dataset: {} train+validation ({} train, {} validation), {} test",
            d.total, d.train, d.validation, d.test
        );
        let windows: Vec<String> = self.window_ms.iter().map(|[a, b]| format!("{a}-{b}")).collect();
        let _ = writeln!(s, "closed-loop window (ms): {}", windows.join(", "));
        let _ = writeln!(
            s,
            "{:<6} {:>9} {:>9} {:>9} {:>10} {:>9} {:>10} {:>7}",
            "case", "rmse", "mae", "impr%", "traj_rmse", "t", "p", "reject"
        );
        for c in &self.cases {
            let (t, p, rej) = match &c.t_test {
                Some(tt) => (format!("{:.3}", tt.t), format!("{:.3e}", tt.p), tt.reject.to_string()),
                None => ("-".into(), "-".into(), "-".into()),
            };
            let impr = c.improvement_pct.map_or("-".into(), |v| {
                format!("{}{v:.1}", if c.improved || c.case == CaseId::Case1 { "" } else { "-" })
            });
            let _ = writeln!(
                s,
                "{:<6} {:>9.5} {:>9.5} {:>9} {:>10.4} {:>9} {:>10} {:>7}",
                c.case.label(),
                c.rmse,
                c.mae,
                impr,
                c.trajectory_rmse,
                t,
                p,
                rej
            );
        }
        s
    }
}

/// Everything a run produces, for writing artifacts.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: EvalReport,
    pub ground_truth: RolloutOutcome,
    pub cases: Vec<CaseRun>,
}

#[derive(Debug, Clone)]
pub struct CaseRun {
    pub case: CaseId,
    pub net: ControllerNet,
    pub history: History,
    pub rollout: RolloutOutcome,
}

impl Experiment {
    fn trace_csv(&self, value: impl Fn(&crate::world::TrajectorySample) -> f64) -> Result<Vec<u8>, crate::table::TableError> {
        let mut header = vec!["t_ms", "ground_truth"];
        header.extend(self.cases.iter().map(|c| c.case.label()));
        let rows = self.ground_truth.trajectory.samples.iter().enumerate().map(|(k, g)| {
            let mut row = vec![g.t_ms.to_string(), value(g).to_string()];
            row.extend(
                self.cases
                    .iter()
                    .map(|c| c.rollout.trajectory.samples.get(k).map_or(String::new(), |s| value(s).to_string())),
            );
            row
        });
        crate::table::csv_bytes(&header, rows)
    }

    /// Per-timestep driving direction in degrees; blank after a rollout ends.
    pub fn direction_csv(&self) -> Result<Vec<u8>, crate::table::TableError> {
        self.trace_csv(|s| s.direction_deg)
    }

    /// Per-timestep lateral offset in metres; blank after a rollout ends.
    pub fn lateral_csv(&self) -> Result<Vec<u8>, crate::table::TableError> {
        self.trace_csv(|s| s.lateral_m)
    }
}

pub type Rows = Vec<(Vec<f32>, f64)>;

/// Builds the worlds and the dataset of a run.
pub fn experiment_dataset(cfg: &ExperimentConfig) -> Result<Dataset, EvalError> {
    cfg.validate().map_err(at(Stage::Config))?;
    let (train_cfgs, test_cfg, _) = cfg.worlds();
    let worlds = train_cfgs
        .iter()
        .map(|w| w.build())
        .collect::<Result<Vec<_>, _>>()
        .map_err(at(Stage::World))?;
    let test = test_cfg.build().map_err(at(Stage::World))?;
    build_dataset(
        &worlds,
        &[test],
        &mut cfg.expert.clone(),
        &cfg.camera,
        &cfg.dataset,
        cfg.world.dt_ms,
        &cfg.rng_for("dataset"),
    )
    .map_err(at(Stage::Dataset))
}

/// Network inputs and steering labels of one split under a case wiring.
pub fn case_rows(cfg: &ExperimentConfig, ds: &Dataset, case: CaseId, split: Split) -> Result<Rows, EvalError> {
    let stage = Stage::Inputs(case);
    let idx = ds.indices(split);
    let per_sample: Vec<Rows> = idx
        .par_iter()
        .map(|&i| {
            let s = &ds.samples[i];
            let label = s.steering.normalized();
            let mut rows = vec![(
                case_input(case, &s.center, &s.segmented, &s.radar, &cfg.threat)?.into_data(),
                label,
            )];
            if cfg.side_rows && split != Split::Test {
                for (view, shift) in [(&s.left, cfg.side_correction), (&s.right, -cfg.side_correction)] {
                    if let Some(v) = view {
                        let x = case_input(case, &v.image, &v.segmented, &s.radar, &cfg.threat)?;
                        rows.push((x.into_data(), SteeringAngle::new(label + shift).normalized()));
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<_, super::cases::CaseError>>()
        .map_err(at(stage))?;
    Ok(per_sample.into_iter().flatten().collect())
}

fn borrow(rows: &Rows) -> Vec<(&[f32], f64)> {
    rows.iter().map(|(x, y)| (x.as_slice(), *y)).collect()
}

/// Initializes and trains the controller of one case.
pub fn train_case(cfg: &ExperimentConfig, ds: &Dataset, case: CaseId) -> Result<(ControllerNet, History), EvalError> {
    let train_rows = case_rows(cfg, ds, case, Split::Train)?;
    let val_rows = case_rows(cfg, ds, case, Split::Validation)?;
    let stage = Stage::Train(case);
    let mut net = ControllerNet::init(cfg.effective_schedule(), &mut cfg.rng_for(&format!("init/{case}")))
        .map_err(at(stage))?;
    let history = train(
        &mut net,
        &borrow(&train_rows),
        &borrow(&val_rows),
        &cfg.train,
        &cfg.rng_for(&format!("train/{case}")),
    )
    .map_err(at(stage))?;
    Ok((net, history))
}

/// Clamped open-loop predictions and labels on the test split.
pub fn open_loop(cfg: &ExperimentConfig, ds: &Dataset, case: CaseId, net: &ControllerNet) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    let rows = case_rows(cfg, ds, case, Split::Test)?;
    let inputs: Vec<&[f32]> = rows.iter().map(|r| r.0.as_slice()).collect();
    let pred = net
        .predict(&inputs)
        .map_err(at(Stage::OpenLoop(case)))?
        .into_iter()
        .map(|p| SteeringAngle::new(p).normalized())
        .collect();
    Ok((rows.iter().map(|r| r.1).collect(), pred))
}

/// Union of `[t - before, t + after]` around the ground-truth nearest approach
/// to every hazard passed during the rollout, merged and clipped to it. Falls
/// back to the whole rollout when no hazard is passed.
pub fn comparison_windows(world: &WorldState, ground: &RolloutOutcome, before_ms: u64, after_ms: u64) -> Vec<[u64; 2]> {
    let samples = &ground.trajectory.samples;
    let (Some(start), Some(end)) = (ground.trajectory.start_ms(), ground.trajectory.end_ms()) else {
        return Vec::new();
    };
    let mut spans: Vec<[u64; 2]> = world
        .hazards
        .iter()
        .filter_map(|h| {
            let (k, _) = ground
                .states
                .iter()
                .map(|v| (v.x - h.x).hypot(v.y - h.y))
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))?;
            if k == 0 || k + 1 == samples.len() {
                return None;
            }
            let t = samples[k].t_ms;
            Some([t.saturating_sub(before_ms).max(start), (t + after_ms).min(end)])
        })
        .collect();
    if spans.is_empty() {
        return vec![[start, end]];
    }
    spans.sort_unstable();
    let mut merged: Vec<[u64; 2]> = Vec::new();
    for s in spans {
        match merged.last_mut() {
            Some(m) if s[0] <= m[1] => m[1] = m[1].max(s[1]),
            _ => merged.push(s),
        }
    }
    merged
}

fn in_windows(t: u64, windows: &[[u64; 2]]) -> bool {
    windows.iter().any(|&[a, b]| a <= t && t <= b)
}

/// `test` on the ground grid inside `windows`. A rollout that ended early is
/// held at its last lateral offset.
pub fn windowed_pair(ground: &Trajectory, test: &Trajectory, windows: &[[u64; 2]]) -> (Trajectory, Trajectory) {
    let last = test.samples.last().map(|s| (s.t_ms, s.lateral_m));
    let mut g = Trajectory {
        dt_ms: ground.dt_ms,
        samples: Vec::new(),
    };
    let mut c = g.clone();
    for s in ground.samples.iter().filter(|s| in_windows(s.t_ms, windows)) {
        let lateral = match (lateral_at(test, s.t_ms as f64), last) {
            (Some(v), _) => v,
            (None, Some((t_end, v))) if s.t_ms > t_end => v,
            _ => continue,
        };
        g.samples.push(*s);
        c.samples.push(crate::world::TrajectorySample { lateral_m: lateral, ..*s });
    }
    (g, c)
}

/// Full protocol: dataset, three trainings, open-loop test errors, and
/// closed-loop drives compared against the scripted driver.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment, EvalError> {
    let ds = experiment_dataset(cfg)?;
    let (_, _, eval_cfg) = cfg.worlds();
    let eval_world = eval_cfg.build().map_err(at(Stage::World))?;
    let dt = cfg.world.dt_ms;

    struct Trained {
        case: CaseId,
        net: ControllerNet,
        history: History,
        labels: Vec<f64>,
        pred: Vec<f64>,
    }
    let trained: Vec<Trained> = CaseId::ALL
        .par_iter()
        .map(|&case| {
            let (net, history) = train_case(cfg, &ds, case)?;
            let (labels, pred) = open_loop(cfg, &ds, case, &net)?;
            Ok(Trained {
                case,
                net,
                history,
                labels,
                pred,
            })
        })
        .collect::<Result<_, EvalError>>()?;
    let counts = ds.counts();
    drop(ds);

    let ground = rollout(&eval_world, &mut cfg.expert.clone(), cfg.eval.rollout_ms, dt).map_err(at(Stage::GroundTruth))?;
    let windows = comparison_windows(&eval_world, &ground, cfg.eval.window_before_ms, cfg.eval.window_after_ms);
    let runs: Vec<RolloutOutcome> = trained
        .par_iter()
        .map(|t| {
            let mut policy = CnnPolicy {
                net: t.net.clone(),
                case: t.case,
                rig: cfg.camera.clone(),
                threat: cfg.threat,
            };
            rollout(&eval_world, &mut policy, cfg.eval.rollout_ms, dt).map_err(at(Stage::ClosedLoop(t.case)))
        })
        .collect::<Result<_, _>>()?;

    let open: Vec<(f64, f64)> = trained
        .iter()
        .map(|t| {
            let stage = Stage::OpenLoop(t.case);
            Ok((rmse(&t.labels, &t.pred).map_err(at(stage))?, mae(&t.labels, &t.pred).map_err(at(stage))?))
        })
        .collect::<Result<_, EvalError>>()?;
    let baseline = open[0].0;
    let mut window_samples = 0;
    let mut reports = Vec::new();
    for ((t, run), &(r, m)) in trained.iter().zip(&runs).zip(&open) {
        let stage = Stage::ClosedLoop(t.case);
        let (gw, cw) = windowed_pair(&ground.trajectory, &run.trajectory, &windows);
        window_samples = gw.samples.len();
        let traj = trajectory_rmse(&gw, &cw).map_err(at(stage))?;
        let g: Vec<f64> = gw.samples.iter().map(|s| s.lateral_m).collect();
        let c: Vec<f64> = cw.samples.iter().map(|s| s.lateral_m).collect();
        let (t_test, t_test_error) = match paired_t_test(&g, &c, cfg.eval.alpha) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        reports.push(CaseReport {
            case: t.case,
            rmse: r,
            mae: m,
            improvement_pct: improvement(r, baseline).ok(),
            improved: r < baseline,
            trajectory_rmse: traj,
            t_test,
            t_test_error,
            epochs: t.history.epochs.len(),
            best_epoch: t.history.best_epoch,
            best_val_loss: t.history.best_val_loss(),
            termination: run.termination,
            collisions: run.collisions.len(),
        });
    }

    let report = EvalReport {
        seed: cfg.seed,
        frame_height: cfg.camera.height_px,
        frame_width: cfg.camera.width_px,
        dataset: counts,
        window_ms: windows,
        window_samples,
        ground_truth_termination: ground.termination,
        ground_truth_collisions: ground.collisions.len(),
        cases: reports,
    };
    let cases = trained
        .into_iter()
        .zip(runs)
        .map(|(t, rollout)| CaseRun {
            case: t.case,
            net: t.net,
            history: t.history,
            rollout,
        })
        .collect();
    Ok(Experiment {
        report,
        ground_truth: ground,
        cases,
    })
}

/// Runs the protocol and returns only the report.
pub fn run_cases(cfg: &ExperimentConfig) -> Result<EvalReport, EvalError> {
    Ok(run_experiment(cfg)?.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::TrajectorySample;

    fn traj(lat: &[f64]) -> Trajectory {
        Trajectory {
            dt_ms: 100,
            samples: lat
                .iter()
                .enumerate()
                .map(|(i, &l)| TrajectorySample {
                    t_ms: i as u64 * 100,
                    lateral_m: l,
                    station_m: i as f64,
                    direction_deg: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn windowed_pair_keeps_window_samples() {
        let g = traj(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let c = traj(&[0.5, 1.5, 2.5, 3.5, 4.5, 5.5]);
        let (wg, wc) = windowed_pair(&g, &c, &[[100, 200], [400, 400]]);
        let lat = |t: &Trajectory| t.samples.iter().map(|s| s.lateral_m).collect::<Vec<_>>();
        assert_eq!(lat(&wg), vec![1.0, 2.0, 4.0]);
        assert_eq!(lat(&wc), vec![1.5, 2.5, 4.5]);
    }

    #[test]
    fn early_end_holds_last_offset() {
        let g = traj(&[0.0, 0.0, 0.0, 0.0, 0.0]);
        let c = traj(&[0.0, 1.0, 7.0]);
        let (wg, wc) = windowed_pair(&g, &c, &[[0, 400]]);
        assert_eq!(wg.samples.len(), 5);
        let lat: Vec<f64> = wc.samples.iter().map(|s| s.lateral_m).collect();
        assert_eq!(lat, vec![0.0, 1.0, 7.0, 7.0, 7.0]);
    }
}
