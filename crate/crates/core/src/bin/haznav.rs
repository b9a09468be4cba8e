use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use haznav::cli::{cmd_dataset, cmd_eval, cmd_heatmap, cmd_train, cmd_world, load_config, parse_frames, CliError};
use haznav::config::ExperimentConfig;
use haznav::eval::CaseId;
use haznav::threat::HeatmapProcedure;

/// Hazard-aware steering experiments. Flags override the config file, which
/// overrides built-in defaults. HAZNAV_THREADS caps worker threads.
#[derive(Debug, Parser)]
#[command(name = "haznav", version)]
struct Args {
    /// JSON experiment config; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Camera frame size, HxW.
    #[arg(long, global = true, value_parser = parse_frames)]
    frames: Option<(usize, usize)>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Procedure {
    Radar,
    Pixel,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a world and write its snapshot with camera previews.
    World,
    /// Collect, augment and split a dataset.
    Dataset {
        /// Write only the manifest and labels.
        #[arg(long)]
        no_frames: bool,
    },
    /// Train one case.
    Train {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        case: u8,
    },
    /// Train all cases and evaluate them open- and closed-loop.
    Eval,
    /// Threat value over a grid.
    Heatmap {
        #[arg(long, value_enum, default_value = "radar")]
        procedure: Procedure,
        #[arg(long, default_value_t = 50)]
        rows: usize,
        #[arg(long, default_value_t = 50)]
        cols: usize,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("HAZNAV_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Flag(format!("HAZNAV_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Flag(e.to_string()))
}

fn run(args: Args) -> Result<(), CliError> {
    init_threads()?;
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some((h, w)) = args.frames {
        cfg = cfg.with_frames(h, w);
    }
    if let Some(out) = &args.out {
        cfg.out_dir = Some(out.clone());
    }
    let out = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    match args.command {
        Command::World => cmd_world(&cfg, &out)?,
        Command::Dataset { no_frames } => {
            let m = cmd_dataset(&cfg, &out, !no_frames)?;
            println!(
                "{} train+validation ({} train, {} validation), {} test",
                m.counts.total, m.counts.train, m.counts.validation, m.counts.test
            );
        }
        Command::Train { case } => {
            let case = CaseId::from_number(case).expect("range checked by clap");
            cmd_train(&cfg, case, &out)?;
        }
        Command::Eval => print!("{}", cmd_eval(&cfg, &out)?.summary()),
        Command::Heatmap { procedure, rows, cols } => {
            let procedure = match procedure {
                Procedure::Radar => HeatmapProcedure::Radar,
                Procedure::Pixel => HeatmapProcedure::Pixel {
                    height: cfg.camera.height_px,
                    width: cfg.camera.width_px,
                },
            };
            let path = cmd_heatmap(&cfg, procedure, rows, cols, &out)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("haznav: {e}");
            ExitCode::FAILURE
        }
    }
}
