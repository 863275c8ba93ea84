#![allow(dead_code)]

use nalgebra::{DMatrix, Vector3};
use rand::Rng;
use rhmap::map::GlobalIndex;

/// Total-least-squares normal of a point set: the right singular vector of
/// the centered coordinate matrix with the smallest singular value.
pub fn svd_normal(cubes: &[GlobalIndex]) -> Vector3<f64> {
    let n = cubes.len();
    let mut m = DMatrix::<f64>::zeros(n, 3);
    for (k, c) in cubes.iter().enumerate() {
        m[(k, 0)] = c.x as f64;
        m[(k, 1)] = c.y as f64;
        m[(k, 2)] = c.z as f64;
    }
    let mean = m.row_mean();
    for mut row in m.row_iter_mut() {
        row -= &mean;
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.unwrap();
    let k = svd.singular_values.imin();
    let mut v = Vector3::new(vt[(k, 0)], vt[(k, 1)], vt[(k, 2)]).normalize();
    if v.z < 0.0 {
        v = -v;
    }
    v
}

pub fn angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    // atan2 form stays accurate for nearly parallel vectors.
    a.cross(b).norm().atan2(a.dot(b))
}

/// A random plane of slope at most `max_slope` rasterised onto a
/// `side x side` patch of the cube lattice at a random (possibly negative)
/// offset. Returns the cubes and the true normal.
pub fn lattice_plane(rng: &mut impl Rng, side: i32, max_slope: f64) -> (Vec<GlobalIndex>, Vector3<f64>) {
    let slope = rng.random_range(0.0..=max_slope);
    let dir = rng.random_range(0.0..std::f64::consts::TAU);
    let (gx, gy) = (slope.tan() * dir.cos(), slope.tan() * dir.sin());
    let x0 = rng.random_range(-5000..5000);
    let y0 = rng.random_range(-5000..5000);
    let z0 = rng.random_range(-500.0..500.0);
    let mut cubes = Vec::with_capacity((side * side) as usize);
    for dx in 0..side {
        for dy in 0..side {
            let z = z0 + gx * dx as f64 + gy * dy as f64;
            cubes.push(GlobalIndex::new(x0 + dx, y0 + dy, z.round() as i32));
        }
    }
    (cubes, Vector3::new(-gx, -gy, 1.0).normalize())
}
