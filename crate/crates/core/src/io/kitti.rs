//! KITTI-style scans (`.bin`), pose files and SemanticKITTI `.label` files.
//! All binary formats are little-endian regardless of host.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{Error, Result};
use crate::fresher::{Pose, Scan};

/// SemanticKITTI "moving-*" classes.
pub const DEFAULT_MOVING_CLASSES: RangeInclusive<u32> = 252..=259;

/// Parse `(x, y, z, intensity)` float32 records; intensity is discarded.
pub fn parse_kitti_scan(bytes: &[u8]) -> std::result::Result<Vec<Point3<f64>>, u64> {
    if !bytes.len().is_multiple_of(16) {
        return Err((bytes.len() / 16 * 16) as u64);
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|rec| {
            let f = |k: usize| f32::from_le_bytes(rec[k * 4..k * 4 + 4].try_into().unwrap()) as f64;
            Point3::new(f(0), f(1), f(2))
        })
        .collect())
}

pub fn read_kitti_scan(path: impl AsRef<Path>) -> Result<Scan> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let points = parse_kitti_scan(&bytes).map_err(|offset| Error::TruncatedScan {
        path: path.to_path_buf(),
        len: bytes.len() as u64,
        offset,
    })?;
    Ok(Scan::new(points, 0.0))
}

/// Write points as float32 quadruples with zero intensity.
pub fn write_kitti_scan(path: impl AsRef<Path>, points: &[Point3<f64>]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(points.len() * 16);
    for p in points {
        for v in [p.x as f32, p.y as f32, p.z as f32, 0.0f32] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Nearest rotation via SVD (polar decomposition), with det fixed to +1.
fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut out = u * vt;
    if out.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        out = u * vt;
    }
    out
}

/// A pose and whether its rotation had to be re-orthonormalised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseRecord {
    pub pose: Pose,
    pub reorthonormalized: bool,
}

/// Parse one `r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2` line.
pub fn parse_pose_line(line: &str) -> std::result::Result<PoseRecord, String> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: `{t}`")))
        .collect::<std::result::Result<_, _>>()?;
    if vals.len() != 12 {
        return Err(format!("expected 12 values, found {}", vals.len()));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err("non-finite value".into());
    }
    let r = Matrix3::new(
        vals[0], vals[1], vals[2], vals[4], vals[5], vals[6], vals[8], vals[9], vals[10],
    );
    let t = Vector3::new(vals[3], vals[7], vals[11]);
    let drift = (r * r.transpose() - Matrix3::identity()).abs().max();
    let (r, fixed) = if drift > 1e-6 || (r.determinant() - 1.0).abs() > 1e-6 {
        (orthonormalize(&r), true)
    } else {
        (r, false)
    };
    let pose = Pose::new(r, t).map_err(|e| e.to_string())?;
    Ok(PoseRecord {
        pose,
        reorthonormalized: fixed,
    })
}

/// Read a pose file; blank lines are skipped.
pub fn read_pose_records(path: impl AsRef<Path>) -> Result<Vec<PoseRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_pose_line(&line).map_err(|message| Error::PoseFormat {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_poses(path: impl AsRef<Path>) -> Result<Vec<Pose>> {
    Ok(read_pose_records(path)?.into_iter().map(|r| r.pose).collect())
}

pub fn format_pose_line(pose: &Pose) -> String {
    let r = pose.rotation();
    let t = pose.translation();
    let vals = [
        r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x,
        r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y,
        r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z,
    ];
    vals.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")
}

pub fn write_poses(path: impl AsRef<Path>, poses: &[Pose]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in poses {
        writeln!(w, "{}", format_pose_line(p)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Class ids (low 16 bits) of a `.label` file.
pub fn read_label_ids(path: impl AsRef<Path>) -> Result<Vec<u16>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::LabelFormat {
            path: path.to_path_buf(),
            message: format!(
                "{} bytes is not a multiple of 4 (trailing data at byte offset {})",
                bytes.len(),
                bytes.len() / 4 * 4
            ),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| (u32::from_le_bytes(b.try_into().unwrap()) & 0xffff) as u16)
        .collect())
}

/// Per-point dynamic flags: class id in `moving`. When `expected` is given
/// the label count must match it.
pub fn read_labels(path: impl AsRef<Path>, moving: &[u32], expected: Option<usize>) -> Result<Vec<bool>> {
    let path = path.as_ref();
    let ids = read_label_ids(path)?;
    if let Some(n) = expected {
        if ids.len() != n {
            return Err(Error::LabelFormat {
                path: path.to_path_buf(),
                message: format!("{} labels for a scan of {n} points", ids.len()),
            });
        }
    }
    Ok(ids.iter().map(|&c| moving.contains(&(c as u32))).collect())
}

/// Write raw 32-bit labels (instance id in the high half, class id low).
pub fn write_labels(path: impl AsRef<Path>, labels: &[u32]) -> Result<()> {
    let path = path.as_ref();
    let buf: Vec<u8> = labels.iter().flat_map(|l| l.to_le_bytes()).collect();
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn default_moving_classes() -> Vec<u32> {
    DEFAULT_MOVING_CLASSES.collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_one_record() {
        let mut b = Vec::new();
        for v in [1.0f32, 2.0, 3.0, 0.5] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(parse_kitti_scan(&b).unwrap(), vec![Point3::new(1.0, 2.0, 3.0)]);
        assert!(parse_kitti_scan(&[]).unwrap().is_empty());
        assert_eq!(parse_kitti_scan(&b[..15]), Err(0));
        b.extend_from_slice(&[0u8; 5]);
        assert_eq!(parse_kitti_scan(&b), Err(16));
    }

    #[test]
    fn pose_lines() {
        let id = parse_pose_line("1 0 0 0 0 1 0 0 0 0 1 0").unwrap();
        assert_eq!(id.pose, Pose::identity());
        assert!(!id.reorthonormalized);
        let t = parse_pose_line("1 0 0 4.5 0 1 0 -2 0 0 1 0.25").unwrap();
        assert_eq!(*t.pose.translation(), Vector3::new(4.5, -2.0, 0.25));
        assert_eq!(*t.pose.rotation(), Matrix3::identity());
        assert!(parse_pose_line("1 0 0 0 0 1 0 0 0 0 1").is_err());
        assert!(parse_pose_line("1 0 0 0 0 1 0 0 0 0 1 x").is_err());
    }

    #[test]
    fn drifted_rotation_is_repaired() {
        let rec = parse_pose_line("1.00001 0 0 0 0 1 0 0 0 0 0.99999 0").unwrap();
        assert!(rec.reorthonormalized);
        let r = rec.pose.rotation();
        assert!((r * r.transpose() - Matrix3::identity()).abs().max() < 1e-12);
    }
}
