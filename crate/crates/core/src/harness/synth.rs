//! Synthetic scenes: a ground plane, static and moving boxes and a moving
//! spinning LiDAR, rendered by analytic ray casting.

use std::fs;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fresher::{Pose, Scan};
use crate::io::{write_kitti_scan, write_labels, write_poses};

pub const LABEL_GROUND: u16 = 40;
pub const LABEL_STATIC: u16 = 50;
pub const LABEL_MOVING: u16 = 252;

/// `z = height + slope_x * x + slope_y * y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GroundSpec {
    #[serde(default)]
    pub height: f64,
    #[serde(default)]
    pub slope_x: f64,
    #[serde(default)]
    pub slope_y: f64,
}

impl GroundSpec {
    pub fn z_at(&self, x: f64, y: f64) -> f64 {
        self.height + self.slope_x * x + self.slope_y * y
    }
}

/// Axis-aligned box; moving boxes translate by `velocity * t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
}

impl BoxSpec {
    pub fn at(&self, t: f64) -> ([f64; 3], [f64; 3]) {
        let mut lo = self.min;
        let mut hi = self.max;
        for k in 0..3 {
            lo[k] += self.velocity[k] * t;
            hi[k] += self.velocity[k] * t;
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub start: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    #[serde(default)]
    pub yaw: f64,
    #[serde(default)]
    pub yaw_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    pub rows: usize,
    pub cols: usize,
    pub fov_up_deg: f64,
    pub fov_down_deg: f64,
    pub max_range: f64,
    #[serde(default)]
    pub min_range: f64,
    /// Standard deviation of Gaussian range noise (m).
    #[serde(default)]
    pub noise: f64,
}

impl Default for BeamSpec {
    fn default() -> Self {
        Self {
            rows: 64,
            cols: 1800,
            fov_up_deg: 2.0,
            fov_down_deg: -24.8,
            max_range: 80.0,
            min_range: 0.5,
            noise: 0.0,
        }
    }
}

impl BeamSpec {
    /// Elevation of beam `row`, evenly spaced from `fov_down` (row 0) to `fov_up`.
    pub fn elevation(&self, row: usize) -> f64 {
        let (lo, hi) = (self.fov_down_deg.to_radians(), self.fov_up_deg.to_radians());
        if self.rows <= 1 {
            return 0.5 * (lo + hi);
        }
        lo + (hi - lo) * row as f64 / (self.rows - 1) as f64
    }

    pub fn azimuth(&self, col: usize) -> f64 {
        (col as f64 + 0.5) / self.cols as f64 * std::f64::consts::TAU
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub frames: usize,
    #[serde(default = "default_period")]
    pub frame_period: f64,
    #[serde(default)]
    pub ground: Option<GroundSpec>,
    #[serde(default)]
    pub static_boxes: Vec<BoxSpec>,
    #[serde(default)]
    pub moving_boxes: Vec<BoxSpec>,
    pub sensor: SensorSpec,
    #[serde(default)]
    pub beams: BeamSpec,
}

fn default_period() -> f64 {
    0.1
}

impl SceneSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.beams;
        if b.rows == 0 || b.cols == 0 {
            return Err(Error::Scene("beam grid must have at least one row and column".into()));
        }
        if !(b.max_range > b.min_range && b.min_range >= 0.0) {
            return Err(Error::Scene("need 0 <= min_range < max_range".into()));
        }
        if !(b.noise >= 0.0 && b.noise.is_finite()) {
            return Err(Error::Scene("noise must be finite and non-negative".into()));
        }
        if !(self.frame_period > 0.0) {
            return Err(Error::Scene("frame_period must be positive".into()));
        }
        for (i, bx) in self.static_boxes.iter().chain(&self.moving_boxes).enumerate() {
            if (0..3).any(|k| !(bx.max[k] > bx.min[k])) {
                return Err(Error::Scene(format!("box {i} has non-positive extent")));
            }
        }
        Ok(())
    }

    pub fn time(&self, frame: usize) -> f64 {
        frame as f64 * self.frame_period
    }

    pub fn pose(&self, frame: usize) -> Pose {
        let t = self.time(frame);
        let s = &self.sensor;
        let pos = Vector3::from(s.start) + Vector3::from(s.velocity) * t;
        Pose::from_yaw(s.yaw + s.yaw_rate * t, pos)
    }
}

/// One rendered frame. `scan` is in the sensor frame, with ring ids.
#[derive(Debug, Clone)]
pub struct SynthFrame {
    pub scan: Scan,
    pub pose: Pose,
    pub labels: Vec<u16>,
}

impl SynthFrame {
    pub fn dynamic_mask(&self) -> Vec<bool> {
        self.labels.iter().map(|&l| l == LABEL_MOVING).collect()
    }
}

/// Entry/exit distances of a ray against a box, if it is hit ahead.
fn ray_box(o: &Point3<f64>, d: &Vector3<f64>, lo: &[f64; 3], hi: &[f64; 3]) -> Option<f64> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for k in 0..3 {
        if d[k].abs() < 1e-15 {
            if o[k] < lo[k] || o[k] > hi[k] {
                return None;
            }
            continue;
        }
        let a = (lo[k] - o[k]) / d[k];
        let b = (hi[k] - o[k]) / d[k];
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (t0 <= t1 && t0 > 0.0).then_some(t0)
}

fn inside(p: &Point3<f64>, lo: &[f64; 3], hi: &[f64; 3]) -> bool {
    (0..3).all(|k| p[k] >= lo[k] && p[k] <= hi[k])
}

fn ray_ground(o: &Point3<f64>, d: &Vector3<f64>, g: &GroundSpec) -> Option<f64> {
    // Plane n . p = h with n = (-sx, -sy, 1).
    let n = Vector3::new(-g.slope_x, -g.slope_y, 1.0);
    let denom = n.dot(d);
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = (g.height - n.dot(&o.coords)) / denom;
    (t > 0.0).then_some(t)
}

/// Render frame `frame` of `spec`. Noise is drawn from a generator seeded by
/// `(seed, frame)`, so frames can be produced independently.
pub fn synth_frame(spec: &SceneSpec, seed: u64, frame: usize) -> Result<SynthFrame> {
    let t = spec.time(frame);
    let pose = spec.pose(frame);
    let origin = pose.position();
    let moving: Vec<([f64; 3], [f64; 3])> = spec.moving_boxes.iter().map(|b| b.at(t)).collect();
    let statics: Vec<([f64; 3], [f64; 3])> = spec.static_boxes.iter().map(|b| b.at(0.0)).collect();
    for (lo, hi) in statics.iter().chain(&moving) {
        if inside(&origin, lo, hi) {
            return Err(Error::Scene(format!(
                "sensor at ({:.3}, {:.3}, {:.3}) is inside a box at frame {frame}",
                origin.x, origin.y, origin.z
            )));
        }
    }
    if let Some(g) = &spec.ground {
        if origin.z <= g.z_at(origin.x, origin.y) {
            return Err(Error::Scene(format!("sensor is below the ground at frame {frame}")));
        }
    }

    let b = &spec.beams;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (frame as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let noise = (b.noise > 0.0).then(|| Normal::new(0.0, b.noise).unwrap());
    let rot = *pose.rotation();
    let trig: Vec<(f64, f64)> = (0..b.cols).map(|c| b.azimuth(c).sin_cos()).collect();

    let mut points = Vec::new();
    let mut rings = Vec::new();
    let mut labels = Vec::new();
    for row in 0..b.rows {
        let (se, ce) = b.elevation(row).sin_cos();
        for &(sa, ca) in &trig {
            let local = Vector3::new(ce * ca, ce * sa, se);
            let d = rot * local;
            let mut best: Option<(f64, u16)> = None;
            let mut offer = |hit: Option<f64>, label: u16| {
                if let Some(h) = hit {
                    if best.is_none_or(|(bt, _)| h < bt) {
                        best = Some((h, label));
                    }
                }
            };
            if let Some(g) = &spec.ground {
                offer(ray_ground(&origin, &d, g), LABEL_GROUND);
            }
            for (lo, hi) in &statics {
                offer(ray_box(&origin, &d, lo, hi), LABEL_STATIC);
            }
            for (lo, hi) in &moving {
                offer(ray_box(&origin, &d, lo, hi), LABEL_MOVING);
            }
            let Some((mut range, label)) = best else {
                continue;
            };
            if let Some(n) = &noise {
                range += n.sample(&mut rng);
            }
            if range < b.min_range || range > b.max_range {
                continue;
            }
            points.push(Point3::from(local * range));
            rings.push(row as u16);
            labels.push(label);
        }
    }
    Ok(SynthFrame {
        scan: Scan {
            points,
            rings: Some(rings),
            timestamp: t,
        },
        pose,
        labels,
    })
}

pub fn synth_scene(spec: &SceneSpec, seed: u64) -> Result<Vec<SynthFrame>> {
    (0..spec.frames).map(|i| synth_frame(spec, seed, i)).collect()
}

/// Write a scene as a KITTI-style directory: `velodyne/NNNNNN.bin`,
/// `labels/NNNNNN.label` and `poses.txt`.
pub fn write_scene(spec: &SceneSpec, seed: u64, dir: impl AsRef<Path>) -> Result<usize> {
    let dir = dir.as_ref();
    let velo = dir.join("velodyne");
    let labels = dir.join("labels");
    for d in [&velo, &labels] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let mut poses = Vec::with_capacity(spec.frames);
    for i in 0..spec.frames {
        let f = synth_frame(spec, seed, i)?;
        write_kitti_scan(velo.join(format!("{i:06}.bin")), &f.scan.points)?;
        let raw: Vec<u32> = f.labels.iter().map(|&l| l as u32).collect();
        write_labels(labels.join(format!("{i:06}.label")), &raw)?;
        poses.push(f.pose);
    }
    write_poses(dir.join("poses.txt"), &poses)?;
    Ok(spec.frames)
}

/// Built-in scenes used by the benchmarks.
pub mod presets {
    use super::*;

    fn boxed(min: [f64; 3], max: [f64; 3], velocity: [f64; 3]) -> BoxSpec {
        BoxSpec { min, max, velocity }
    }

    /// Street scene: the sensor drives down +x past four static buildings
    /// while one car overtakes in the next lane and another drives towards
    /// it in the opposite lane.
    pub fn street(frames: usize) -> SceneSpec {
        SceneSpec {
            frames,
            frame_period: 0.1,
            ground: Some(GroundSpec::default()),
            static_boxes: vec![
                boxed([6.0, 7.0, 0.0], [14.0, 12.0, 6.0], [0.0; 3]),
                boxed([20.0, -13.0, 0.0], [27.0, -7.5, 4.0], [0.0; 3]),
                boxed([-4.0, -12.0, 0.0], [2.0, -8.0, 3.0], [0.0; 3]),
                boxed([28.0, 8.0, 0.0], [34.0, 13.0, 5.0], [0.0; 3]),
            ],
            moving_boxes: vec![
                boxed([-6.0, -3.0, 0.3], [-1.5, -1.2, 1.8], [3.0, 0.0, 0.0]),
                boxed([40.0, 1.5, 0.3], [44.5, 3.3, 1.8], [-4.0, 0.0, 0.0]),
            ],
            sensor: SensorSpec {
                start: [0.0, 0.0, 1.73],
                velocity: [1.5, 0.0, 0.0],
                yaw: 0.0,
                yaw_rate: 0.0,
            },
            beams: BeamSpec {
                rows: 64,
                cols: 1024,
                noise: 0.01,
                ..Default::default()
            },
        }
    }

    /// Open road: the sensor pulls away at 5 m/s from a 2 m/s car in the
    /// next lane behind it. The car hides its own trail from later scans, so
    /// the front-end alone leaves most of it in the map.
    pub fn follower(frames: usize) -> SceneSpec {
        SceneSpec {
            frames,
            frame_period: 0.1,
            ground: Some(GroundSpec::default()),
            static_boxes: vec![],
            moving_boxes: vec![boxed([-15.0, 2.5, 0.3], [-10.5, 4.3, 1.8], [2.0, 0.0, 0.0])],
            sensor: SensorSpec {
                start: [0.0, 0.0, 1.73],
                velocity: [5.0, 0.0, 0.0],
                yaw: 0.0,
                yaw_rate: 0.0,
            },
            beams: BeamSpec {
                rows: 64,
                cols: 1024,
                noise: 0.01,
                ..Default::default()
            },
        }
    }

    /// Same layout at full 64 x 1800 resolution, about 100k returns per scan.
    pub fn dense_street(frames: usize) -> SceneSpec {
        let mut s = street(frames);
        s.beams.cols = 1800;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SceneSpec {
        SceneSpec {
            frames: 1,
            frame_period: 0.1,
            ground: None,
            static_boxes: vec![],
            moving_boxes: vec![],
            sensor: SensorSpec {
                start: [0.0, 0.0, 1.0],
                velocity: [0.0; 3],
                yaw: 0.0,
                yaw_rate: 0.0,
            },
            beams: BeamSpec {
                rows: 8,
                cols: 36,
                ..Default::default()
            },
        }
    }

    #[test]
    fn empty_scene_is_empty() {
        let f = synth_frame(&spec(), 0, 0).unwrap();
        assert!(f.scan.is_empty());
    }

    #[test]
    fn slab_test() {
        let o = Point3::new(0.0, 0.0, 0.0);
        let hit = ray_box(&o, &Vector3::new(1.0, 0.0, 0.0), &[2.0, -1.0, -1.0], &[3.0, 1.0, 1.0]);
        assert_eq!(hit, Some(2.0));
        assert_eq!(ray_box(&o, &Vector3::new(-1.0, 0.0, 0.0), &[2.0, -1.0, -1.0], &[3.0, 1.0, 1.0]), None);
        assert_eq!(ray_box(&o, &Vector3::new(0.0, 1.0, 0.0), &[2.0, -1.0, -1.0], &[3.0, 1.0, 1.0]), None);
    }

    #[test]
    fn sensor_inside_box_is_rejected() {
        let mut s = spec();
        s.static_boxes.push(BoxSpec {
            min: [-1.0, -1.0, 0.0],
            max: [1.0, 1.0, 2.0],
            velocity: [0.0; 3],
        });
        assert!(matches!(synth_frame(&s, 0, 0), Err(Error::Scene(_))));
    }

    #[test]
    fn json_round_trip() {
        let s = spec();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(SceneSpec::from_json(&text).unwrap(), s);
        assert!(SceneSpec::from_json(r#"{"frames": 1, "sensor": {"start": [0,0,1]}, "bogus": 1}"#).is_err());
    }
}
