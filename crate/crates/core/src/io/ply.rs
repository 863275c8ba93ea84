//! ASCII PLY export of the occupied map.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::map::{MapPoint, RhMap};

pub fn format_ply(points: &[MapPoint]) -> String {
    let mut s = String::with_capacity(64 + points.len() * 32);
    s.push_str("ply\nformat ascii 1.0\n");
    s.push_str(&format!("element vertex {}\n", points.len()));
    s.push_str("property float x\nproperty float y\nproperty float z\nproperty uchar is_ground\nend_header\n");
    for p in points {
        s.push_str(&format!(
            "{:.4} {:.4} {:.4} {}\n",
            p.position.x,
            p.position.y,
            p.position.z,
            u8::from(p.is_ground)
        ));
    }
    s
}

/// Write every occupied cube center with its ground flag.
pub fn write_map_ply(map: &RhMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(format_ply(&map.export_occupied_points()).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Read back a PLY written by [`write_map_ply`].
pub fn read_map_ply(path: impl AsRef<Path>) -> Result<Vec<MapPoint>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, message: String| Error::Ply {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut count = None;
    let mut props = Vec::new();
    loop {
        let Some((n, line)) = lines.next() else {
            return Err(err(0, "missing end_header".into()));
        };
        let line = line.map_err(|e| Error::io(path, e))?;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["end_header"] => break,
            ["ply"] | ["comment", ..] => {}
            ["format", fmt, _] if *fmt != "ascii" => return Err(err(n + 1, format!("unsupported format {fmt}"))),
            ["format", ..] => {}
            ["element", "vertex", c] => {
                count = Some(c.parse::<usize>().map_err(|_| err(n + 1, format!("bad count `{c}`")))?)
            }
            ["property", _, name] => props.push(name.to_string()),
            _ => return Err(err(n + 1, format!("unexpected header line `{line}`"))),
        }
    }
    let count = count.ok_or_else(|| err(0, "no vertex element".into()))?;
    let col = |name: &str| props.iter().position(|p| p == name);
    let (Some(ix), Some(iy), Some(iz)) = (col("x"), col("y"), col("z")) else {
        return Err(err(0, "vertex needs x, y, z".into()));
    };
    let ig = col("is_ground");

    let mut out = Vec::with_capacity(count);
    for (n, line) in lines.by_ref().take(count) {
        let line = line.map_err(|e| Error::io(path, e))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(n + 1, format!("bad vertex `{line}`")))?;
        if vals.len() != props.len() {
            return Err(err(n + 1, format!("expected {} values", props.len())));
        }
        out.push(MapPoint {
            position: Point3::new(vals[ix], vals[iy], vals[iz]),
            is_ground: ig.is_some_and(|g| vals[g] != 0.0),
        });
    }
    if out.len() != count {
        return Err(err(0, format!("header declares {count} vertices, found {}", out.len())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_header() {
        let s = format_ply(&[]);
        assert!(s.contains("element vertex 0\n"));
        assert!(s.ends_with("end_header\n"));
    }
}
