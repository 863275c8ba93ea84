use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{Error, Result};

/// One LiDAR sweep in the sensor frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scan {
    pub points: Vec<Point3<f64>>,
    /// Optional beam (ring) id per point, 0 = lowest beam.
    pub rings: Option<Vec<u16>>,
    pub timestamp: f64,
}

impl Scan {
    pub fn new(points: Vec<Point3<f64>>, timestamp: f64) -> Self {
        Self {
            points,
            rings: None,
            timestamp,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ring(&self, id: usize) -> Option<u16> {
        self.rings.as_ref().and_then(|r| r.get(id).copied())
    }
}

/// Sensor-to-world rigid transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

const ORTHO_TOL: f64 = 1e-6;

impl Pose {
    /// Builds a pose, rejecting rotations that are not orthonormal with
    /// determinant +1 (within 1e-6).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPose("non-finite entry".into()));
        }
        let drift = (rotation * rotation.transpose() - Matrix3::identity()).abs().max();
        if drift > ORTHO_TOL {
            return Err(Error::InvalidPose(format!("R R^T deviates from I by {drift:e}")));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ORTHO_TOL {
            return Err(Error::InvalidPose(format!("det(R) = {det}")));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation about +z by `yaw` radians, then translation.
    pub fn from_yaw(yaw: f64, t: Vector3<f64>) -> Self {
        let (s, c) = yaw.sin_cos();
        Self {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: t,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn position(&self) -> Point3<f64> {
        Point3::from(self.translation)
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        (self.translation - other.translation).norm()
    }
}

/// `p_W = R p_B + t` for every point.
pub fn transform_scan(scan: &Scan, pose: &Pose) -> Vec<Point3<f64>> {
    scan.points.iter().map(|p| pose.apply(p)).collect()
}
