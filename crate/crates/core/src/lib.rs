//! Online removal of dynamic-object traces from LiDAR occupancy maps using
//! a two-layer region-wise hash map.

pub mod backend;
pub mod error;
pub mod fresher;
pub mod harness;
pub mod io;
pub mod map;

pub use backend::{backend_step, BackendConfig, Keyframe, KeyframeQueue};
pub use error::{Error, PlaneFitError, Result};
pub use fresher::{process_scan, FresherConfig, Pose, Scan};
pub use map::{MapConfig, RhMap};
