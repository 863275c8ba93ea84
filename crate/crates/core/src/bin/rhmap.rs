use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rhmap::harness::synth::presets;
use rhmap::harness::{
    run_frames, run_pipeline, synthetic_frames, write_outputs, write_scene, Dataset, GroundTruth,
    PipelineConfig, RunOptions, SceneSpec,
};
use rhmap::io::{default_moving_classes, read_map_ply};
use rhmap::map::global_index;
use rhmap::fresher::transform_scan;
use rhmap::Error;

#[derive(Parser, Debug)]
#[command(name = "rhmap", version, about = "Static map building with online dynamic object removal")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Debug, Default)]
struct Common {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set delta1=0.25`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Front-end only.
    #[arg(long)]
    no_backend: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build a map from a dataset or a synthetic scene.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scans: Option<PathBuf>,
        #[arg(long)]
        poses: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Scene spec (JSON) to render instead of reading a dataset.
        #[arg(long)]
        synthetic: Option<PathBuf>,
        /// Output map (PLY).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output report (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Count ground cubes lost between frames.
        #[arg(long)]
        audit_ground: bool,
    },
    /// Score an exported map against a labelled sequence.
    Eval {
        #[arg(long)]
        map: PathBuf,
        /// Directory with `velodyne/`, `labels/` and `poses.txt`.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        cube_size: f64,
    },
    /// Render a synthetic scene to a KITTI-style directory.
    Synth {
        #[arg(long, conflicts_with = "preset")]
        spec: Option<PathBuf>,
        /// Built-in scene: `street`, `dense-street` or `follower`.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 200)]
        frames: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time the pipeline on a synthetic scene (dense street by default).
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        frames: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Usage(e.to_string()),
            e => Failure::Data(e),
        }
    }
}

fn load_config(c: &Common) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    for kv in &c.set {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(Failure::Usage(format!("--set expects KEY=VALUE, got `{kv}`")));
        };
        cfg.set(k, v)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if c.no_backend {
        cfg.backend_enabled = false;
    }
    Ok(cfg)
}

fn preset(name: &str, frames: usize) -> Result<SceneSpec, Failure> {
    match name {
        "street" => Ok(presets::street(frames)),
        "dense-street" | "dense_street" => Ok(presets::dense_street(frames)),
        "follower" => Ok(presets::follower(frames)),
        _ => Err(Failure::Usage(format!("unknown preset `{name}`"))),
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).map_err(Error::from)?;
    println!("{text}");
    Ok(())
}

fn eval_map(map: &Path, truth: &Path, cube_size: f64) -> Result<(), Failure> {
    if !(cube_size > 0.0) {
        return Err(Failure::Usage("--cube-size must be positive".into()));
    }
    let occupied: HashSet<_> = read_map_ply(map)?
        .iter()
        .map(|p| global_index(&p.position, cube_size))
        .collect::<Result<_, _>>()?;
    let ds = Dataset::open_dir(truth)?;
    if ds.labels.is_none() {
        return Err(Failure::Usage(format!("{}: no labels/ directory", truth.display())));
    }
    let moving = default_moving_classes();
    let mut gt = GroundTruth::new(cube_size);
    for f in ds.frames(0.1) {
        let f = f?;
        let labels = f.labels.unwrap_or_default();
        let dynamic: Vec<bool> = labels.iter().map(|&c| moving.contains(&(c as u32))).collect();
        gt.extend(&transform_scan(&f.scan, &f.pose), &dynamic)?;
    }
    print_json(&gt.evaluate_with(|i| occupied.contains(&i)))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Run {
            common,
            scans,
            poses,
            labels,
            synthetic,
            out,
            report,
            audit_ground,
        } => {
            let mut cfg = load_config(&common)?;
            cfg.scans = scans.or(cfg.scans);
            cfg.poses = poses.or(cfg.poses);
            cfg.labels = labels.or(cfg.labels);
            cfg.synthetic = synthetic.or(cfg.synthetic);
            cfg.out = out.or(cfg.out);
            cfg.report = report.or(cfg.report);
            let output = run_pipeline(&cfg, RunOptions { audit_ground })?;
            write_outputs(&cfg, &output)?;
            let r = output.report();
            eprintln!(
                "{} frames, {} occupied cubes, {} keyframes",
                r.frames.len(),
                r.occupied_cubes,
                r.keyframes
            );
            if let Some(t) = r.timing {
                eprintln!("mean {:.2} ms/frame ({:.1} Hz)", t.mean_ms, t.hz);
            }
            if let Some(v) = output.ground_violations {
                eprintln!("ground cubes lost: {v}");
            }
            if let Some(e) = r.eval {
                print_json(&e)?;
            }
            Ok(())
        }
        Cmd::Eval { map, truth, cube_size } => eval_map(&map, &truth, cube_size),
        Cmd::Synth {
            spec,
            preset: name,
            frames,
            out,
            seed,
        } => {
            let spec = match (spec, name) {
                (Some(p), _) => SceneSpec::load(p)?,
                (None, Some(n)) => preset(&n, frames)?,
                (None, None) => return Err(Failure::Usage("need --spec or --preset".into())),
            };
            let n = write_scene(&spec, seed, &out)?;
            eprintln!("wrote {n} frames to {}", out.display());
            Ok(())
        }
        Cmd::Bench {
            common,
            spec,
            frames,
            report,
        } => {
            let cfg = load_config(&common)?;
            let spec = match spec {
                Some(p) => SceneSpec::load(p)?,
                None => presets::dense_street(frames),
            };
            let output = run_frames(&cfg, synthetic_frames(&spec, cfg.seed), RunOptions::default())?;
            let r = output.report();
            if let Some(p) = report {
                r.write(p)?;
            }
            let points: usize = r.frames.iter().map(|f| f.points).sum();
            if let Some(t) = r.timing {
                println!(
                    "{} frames, {:.0} points/frame, mean {:.2} ms/frame, {:.1} Hz",
                    t.frames,
                    points as f64 / t.frames as f64,
                    t.mean_ms,
                    t.hz
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
