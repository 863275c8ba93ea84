//! Frame loop: front-end, keyframe selection and back-end removal.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::backend::{backend_step, information_content, Keyframe, KeyframeQueue};
use crate::error::{Error, Result};
use crate::fresher::{process_scan, transform_scan, Pose, RemovalReport, Scan};
use crate::io::{default_moving_classes, read_kitti_scan, read_label_ids, read_poses, write_map_ply};
use crate::map::{GlobalIndex, RhMap};

use super::config::PipelineConfig;
use super::eval::{evaluate, timing_report, EvalResult, GroundTruth, TimingReport};
use super::synth::{synth_frame, SceneSpec};

/// One posed scan with optional per-point class ids.
#[derive(Debug, Clone)]
pub struct Frame {
    pub scan: Scan,
    pub pose: Pose,
    pub labels: Option<Vec<u16>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FrameReport {
    pub frame: usize,
    pub points: usize,
    pub keyframe: bool,
    pub ground_elected: usize,
    pub ground_fitted: usize,
    pub front: RemovalReport,
    pub backend_replays: usize,
    pub backend_cubes_removed: usize,
    /// Wall time of the mapping work for this frame, excluding I/O.
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// After every frame, check that no cube that was ground before the
    /// frame lost its ground flag or was deleted.
    pub audit_ground: bool,
}

pub struct PipelineOutput {
    pub map: RhMap,
    pub frames: Vec<FrameReport>,
    pub truth: Option<GroundTruth>,
    pub keyframes: usize,
    pub keyframes_evicted: usize,
    /// Ground cubes lost, when audited.
    pub ground_violations: Option<usize>,
}

impl PipelineOutput {
    pub fn timing(&self) -> Option<TimingReport> {
        let ms: Vec<f64> = self.frames.iter().map(|f| f.elapsed_ms).collect();
        timing_report(&ms)
    }

    pub fn evaluate(&self) -> Option<EvalResult> {
        self.truth
            .as_ref()
            .map(|t| evaluate(&self.map, t).with_timing(self.timing()))
    }

    pub fn report(&self) -> RunReport {
        RunReport {
            eval: self.evaluate(),
            timing: self.timing(),
            keyframes: self.keyframes,
            keyframes_evicted: self.keyframes_evicted,
            occupied_cubes: self.map.occupied_count(),
            frames: self.frames.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub eval: Option<EvalResult>,
    pub timing: Option<TimingReport>,
    pub keyframes: usize,
    pub keyframes_evicted: usize,
    pub occupied_cubes: usize,
    pub frames: Vec<FrameReport>,
}

impl RunReport {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

fn ground_cubes(map: &RhMap) -> Vec<GlobalIndex> {
    map.occupied_cubes()
        .filter(|(_, c)| c.is_ground)
        .map(|(i, _)| i)
        .collect()
}

/// Run the mapping pipeline over `frames`. Stops at the first error, which
/// is tagged with its frame number.
pub fn run_frames(
    cfg: &PipelineConfig,
    frames: impl IntoIterator<Item = Result<Frame>>,
    opts: RunOptions,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let mut map = RhMap::new(cfg.map)?;
    let mut queue = KeyframeQueue::new(cfg.backend.queue_capacity);
    let moving = default_moving_classes();
    let mut truth: Option<GroundTruth> = None;
    let mut reports = Vec::new();
    let mut keyframes = 0;
    let mut ground_prev: Vec<GlobalIndex> = Vec::new();
    let mut violations = 0;

    for (n, frame) in frames.into_iter().enumerate() {
        let tag = |e: Error| Error::Frame {
            frame: n,
            source: Box::new(e),
        };
        let frame = frame.map_err(tag)?;
        if let Some(labels) = &frame.labels {
            if labels.len() != frame.scan.len() {
                return Err(tag(Error::Scene(format!(
                    "{} labels for {} points",
                    labels.len(),
                    frame.scan.len()
                ))));
            }
            let gt = truth.get_or_insert_with(|| GroundTruth::new(cfg.map.cube_size));
            let world = transform_scan(&frame.scan, &frame.pose);
            let dynamic: Vec<bool> = labels.iter().map(|&c| moving.contains(&(c as u32))).collect();
            gt.extend(&world, &dynamic).map_err(tag)?;
        }

        let start = Instant::now();
        let out = process_scan(&mut map, &frame.scan, &frame.pose, &cfg.fresher).map_err(tag)?;
        let mut report = FrameReport {
            frame: n,
            points: frame.scan.len(),
            ground_elected: out.ground.elected,
            ground_fitted: out.ground.fitted,
            front: out.removal,
            ..Default::default()
        };
        if cfg.backend_enabled {
            let kf = Keyframe {
                info_content: information_content(&out.image, cfg.backend.r_max),
                timestamp: frame.scan.timestamp,
                scan: frame.scan,
                pose: frame.pose,
            };
            report.keyframe = queue.offer(kf, &cfg.backend);
            keyframes += usize::from(report.keyframe);
            let replays = backend_step(&mut map, &mut queue, &frame.pose, &cfg.backend, &cfg.fresher);
            report.backend_replays = replays.len();
            report.backend_cubes_removed = replays.iter().map(|r| r.cubes_removed).sum();
        }
        report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        reports.push(report);

        if opts.audit_ground {
            violations += ground_prev
                .iter()
                .filter(|&&i| !map.cube(i).is_some_and(|c| c.is_ground))
                .count();
            ground_prev = ground_cubes(&map);
        }
    }

    Ok(PipelineOutput {
        map,
        frames: reports,
        truth,
        keyframes,
        keyframes_evicted: queue.evicted(),
        ground_violations: opts.audit_ground.then_some(violations),
    })
}

/// Frames rendered from a synthetic scene, one at a time.
pub fn synthetic_frames(spec: &SceneSpec, seed: u64) -> impl Iterator<Item = Result<Frame>> + '_ {
    (0..spec.frames).map(move |i| {
        synth_frame(spec, seed, i).map(|f| Frame {
            scan: f.scan,
            pose: f.pose,
            labels: Some(f.labels),
        })
    })
}

/// A KITTI-style sequence on disk.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub scans: Vec<PathBuf>,
    pub poses: Vec<Pose>,
    pub labels: Option<PathBuf>,
}

impl Dataset {
    /// `scans` holds `*.bin` files (sorted by name); `labels`, when given,
    /// holds a `.label` file per scan with the same stem.
    pub fn open(scans: &Path, poses: &Path, labels: Option<&Path>) -> Result<Self> {
        let mut files: Vec<PathBuf> = fs::read_dir(scans)
            .map_err(|e| Error::io(scans, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "bin"))
            .collect();
        files.sort();
        let poses_v = read_poses(poses)?;
        if poses_v.len() < files.len() {
            return Err(Error::PoseFormat {
                path: poses.to_path_buf(),
                line: poses_v.len() + 1,
                message: format!("{} poses for {} scans", poses_v.len(), files.len()),
            });
        }
        Ok(Self {
            scans: files,
            poses: poses_v,
            labels: labels.map(Path::to_path_buf),
        })
    }

    /// Open `dir/velodyne`, `dir/poses.txt` and, if present, `dir/labels`.
    pub fn open_dir(dir: &Path) -> Result<Self> {
        let labels = dir.join("labels");
        Self::open(
            &dir.join("velodyne"),
            &dir.join("poses.txt"),
            labels.is_dir().then_some(labels.as_path()),
        )
    }

    pub fn len(&self) -> usize {
        self.scans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scans.is_empty()
    }

    pub fn frame(&self, i: usize, period: f64) -> Result<Frame> {
        let path = &self.scans[i];
        let mut scan = read_kitti_scan(path)?;
        scan.timestamp = i as f64 * period;
        let labels = match &self.labels {
            Some(dir) => {
                let stem = path.file_stem().unwrap_or_default();
                let lp = dir.join(stem).with_extension("label");
                let ids = read_label_ids(&lp)?;
                if ids.len() != scan.len() {
                    return Err(Error::LabelFormat {
                        path: lp,
                        message: format!("{} labels for a scan of {} points", ids.len(), scan.len()),
                    });
                }
                Some(ids)
            }
            None => None,
        };
        Ok(Frame {
            scan,
            pose: self.poses[i],
            labels,
        })
    }

    pub fn frames(&self, period: f64) -> impl Iterator<Item = Result<Frame>> + '_ {
        (0..self.len()).map(move |i| self.frame(i, period))
    }
}

/// Resolve the frame source named by `cfg` (synthetic spec, or scans and
/// poses) and run it.
pub fn run_pipeline(cfg: &PipelineConfig, opts: RunOptions) -> Result<PipelineOutput> {
    if let Some(spec_path) = &cfg.synthetic {
        let spec = SceneSpec::load(spec_path)?;
        return run_frames(cfg, synthetic_frames(&spec, cfg.seed), opts);
    }
    let (Some(scans), Some(poses)) = (&cfg.scans, &cfg.poses) else {
        return Err(Error::config("scans", "need `scans` and `poses`, or `synthetic`"));
    };
    let ds = Dataset::open(scans, poses, cfg.labels.as_deref())?;
    run_frames(cfg, ds.frames(cfg.frame_period), opts)
}

/// Write the map PLY and report JSON to the paths named in `cfg`.
pub fn write_outputs(cfg: &PipelineConfig, out: &PipelineOutput) -> Result<()> {
    if let Some(p) = &cfg.out {
        write_map_ply(&out.map, p)?;
    }
    if let Some(p) = &cfg.report {
        out.report().write(p)?;
    }
    Ok(())
}
