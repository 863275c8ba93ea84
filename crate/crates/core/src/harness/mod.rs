//! Configuration, synthetic scenes, the frame loop and evaluation.

mod config;
mod eval;
mod pipeline;
pub mod synth;

pub use config::{PipelineConfig, CONFIG_KEYS};
pub use eval::{evaluate, evaluate_points, f1_score, timing_report, EvalResult, GroundTruth, TimingReport};
pub use pipeline::{
    run_frames, run_pipeline, synthetic_frames, write_outputs, Dataset, Frame, FrameReport,
    PipelineOutput, RunOptions, RunReport,
};
pub use synth::{synth_frame, synth_scene, write_scene, SceneSpec, SynthFrame};
