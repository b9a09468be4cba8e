//! Commands behind the `haznav` binary. Each writes its artifacts under `out`
//! together with `config.json`, the effective configuration of the run.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::controller::{save_weights, WeightsError};
use crate::eval::{experiment_dataset, run_experiment, train_case, CaseId, EvalError, EvalReport};
use crate::table::{write_json, TableError};
use crate::threat::{threat_heatmap, HeatmapProcedure};
use crate::vision::{class_map, CameraId, DatasetError, Manifest};
use crate::world::WorldError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("[config] cannot read {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("[config] cannot parse {path}: {source}")]
    ParseConfig {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("[config] {0}")]
    Invalid(#[from] ConfigError),
    #[error("[config] {0}")]
    Flag(String),
    #[error("[world] {0}")]
    World(#[from] WorldError),
    #[error("[dataset] {0}")]
    Dataset(#[from] DatasetError),
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("[output] {0}")]
    Table(#[from] TableError),
    #[error("[output] {0}")]
    Pnm(#[from] crate::pnm::PnmError),
    #[error("[output] {0}")]
    Weights(#[from] WeightsError),
    #[error("[output] {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read(path).map_err(|source| CliError::ReadConfig {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&text).map_err(|source| CliError::ParseConfig {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses `HxW`, e.g. `100x150`.
pub fn parse_frames(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("frames must look like HxW, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("bad frame size {v:?}: {e}"));
    Ok((parse(h)?, parse(w)?))
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })
}

fn prepare(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    write_json(out.join("config.json"), cfg)?;
    Ok(())
}

/// Builds the first training world and writes its snapshot plus a preview
/// of every camera at the start pose.
pub fn cmd_world(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    prepare(cfg, out)?;
    let (train, _, _) = cfg.worlds();
    let world = train[0].build()?;
    write_json(out.join("world.json"), &world.snapshot())?;
    for (cam, name) in [
        (CameraId::Left, "left"),
        (CameraId::Center, "center"),
        (CameraId::Right, "right"),
    ] {
        let map = class_map(&world, &cfg.camera, cam);
        crate::pnm::write(out.join(format!("preview_{name}.ppm")), &map.to_camera_image())?;
        if cam == CameraId::Center {
            crate::pnm::write(out.join("preview_seg.ppm"), map.to_segmented().image())?;
        }
    }
    Ok(())
}

pub fn cmd_dataset(cfg: &ExperimentConfig, out: &Path, frames: bool) -> Result<Manifest, CliError> {
    prepare(cfg, out)?;
    let ds = experiment_dataset(cfg)?;
    Ok(ds.write(out, frames)?)
}

/// Trains one case and writes `weights_<case>.json` and `history_<case>.csv`.
pub fn cmd_train(cfg: &ExperimentConfig, case: CaseId, out: &Path) -> Result<(), CliError> {
    prepare(cfg, out)?;
    let ds = experiment_dataset(cfg)?;
    let (net, history) = train_case(cfg, &ds, case)?;
    save_weights(&net, out.join(format!("weights_{case}.json")))?;
    write(out.join(format!("history_{case}.csv")), &history.to_csv()?)?;
    Ok(())
}

/// Full protocol. Writes `report.json`, `summary.txt`, `direction.csv`,
/// `lateral.csv`, `ground_truth.csv`, and per-case weights and histories.
pub fn cmd_eval(cfg: &ExperimentConfig, out: &Path) -> Result<EvalReport, CliError> {
    prepare(cfg, out)?;
    let exp = run_experiment(cfg)?;
    let json = exp.report.to_json().map_err(TableError::from)?;
    write(out.join("report.json"), &json)?;
    write(out.join("summary.txt"), exp.report.summary().as_bytes())?;
    write(out.join("direction.csv"), &exp.direction_csv()?)?;
    write(out.join("lateral.csv"), &exp.lateral_csv()?)?;
    write(out.join("ground_truth.csv"), &exp.ground_truth.trajectory.to_csv()?)?;
    for run in &exp.cases {
        save_weights(&run.net, out.join(format!("weights_{}.json", run.case)))?;
        write(out.join(format!("history_{}.csv", run.case)), &run.history.to_csv()?)?;
        write(out.join(format!("trajectory_{}.csv", run.case)), &run.rollout.trajectory.to_csv()?)?;
    }
    Ok(exp.report)
}

/// Writes `heatmap_<procedure>.csv` on a `rows x cols` grid. The pixel grid
/// uses the configured frame size.
pub fn cmd_heatmap(
    cfg: &ExperimentConfig,
    procedure: HeatmapProcedure,
    rows: usize,
    cols: usize,
    out: &Path,
) -> Result<PathBuf, CliError> {
    if rows < 2 || cols < 2 {
        return Err(CliError::Flag("heatmap grid needs at least 2 rows and 2 columns".into()));
    }
    prepare(cfg, out)?;
    let name = match procedure {
        HeatmapProcedure::Radar => "radar",
        HeatmapProcedure::Pixel { .. } => "pixel",
    };
    let path = out.join(format!("heatmap_{name}.csv"));
    write(path.clone(), &threat_heatmap(procedure, rows, cols, &cfg.threat).to_csv()?)?;
    Ok(path)
}
