//! Dataset readers and map export.

mod kitti;
mod ply;

pub use kitti::{
    default_moving_classes, format_pose_line, parse_kitti_scan, parse_pose_line, read_kitti_scan,
    read_label_ids, read_labels, read_pose_records, read_poses, write_kitti_scan, write_labels,
    write_poses, PoseRecord, DEFAULT_MOVING_CLASSES,
};
pub use ply::{format_ply, read_map_ply, write_map_ply};

use crate::fresher::Pose;
use nalgebra::Point3;

/// World-frame points with per-point class ids and dynamic flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledCloud {
    pub points: Vec<Point3<f64>>,
    pub labels: Vec<u16>,
    pub dynamic_mask: Vec<bool>,
}

impl LabeledCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Append a sensor-frame scan transformed by `pose`.
    pub fn extend_scan(&mut self, points: &[Point3<f64>], pose: &Pose, labels: &[u16], moving: &[u32]) {
        debug_assert_eq!(points.len(), labels.len());
        self.points.extend(points.iter().map(|p| pose.apply(p)));
        self.labels.extend_from_slice(labels);
        self.dynamic_mask
            .extend(labels.iter().map(|&c| moving.contains(&(c as u32))));
    }
}
