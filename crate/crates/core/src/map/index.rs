//! Global, region and cube indices.
//!
//! A point is quantised to a global cube index `I = floor(p / cube_size)`.
//! Masking each axis with `m = 2^b - 1` splits it into a region index
//! `I_r = I & !m` and an in-region cube index `I_c = I & m`, so that
//! `I == I_r | I_c`. Signed indices use two's-complement masking, which
//! groups `-1..=-8` (for `b = 3`) into the region starting at `-8`.

use nalgebra::Point3;

use crate::error::{Error, Result};

/// Global cube coordinates in cube units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalIndex {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

/// Region origin in global cube units (low `b` bits of each axis are zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionIndex {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

/// Offset of a cube inside its region, each axis in `0..=m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeIndex {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

/// 2D region column `O_r = (I_r.x, I_r.y)`.
pub type ColumnKey = [i32; 2];

/// 2D global column `O = (I.x, I.y)`.
pub type CellKey = [i32; 2];

impl GlobalIndex {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Self { x, y, z }
    }

    pub fn region(self, mask: i32) -> RegionIndex {
        RegionIndex {
            x: self.x & !mask,
            y: self.y & !mask,
            z: self.z & !mask,
        }
    }

    pub fn cube(self, mask: i32) -> CubeIndex {
        CubeIndex {
            x: self.x & mask,
            y: self.y & mask,
            z: self.z & mask,
        }
    }

    pub fn cell(self) -> CellKey {
        [self.x, self.y]
    }

    /// Center of the cube in meters.
    pub fn center(self, cube_size: f64) -> Point3<f64> {
        Point3::new(
            (self.x as f64 + 0.5) * cube_size,
            (self.y as f64 + 0.5) * cube_size,
            (self.z as f64 + 0.5) * cube_size,
        )
    }

    pub fn as_array(self) -> [i32; 3] {
        [self.x, self.y, self.z]
    }
}

impl RegionIndex {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Self { x, y, z }
    }

    pub fn column(self) -> ColumnKey {
        [self.x, self.y]
    }

    /// Recombine with a cube offset: `I = I_r | I_c`.
    pub fn join(self, cube: CubeIndex) -> GlobalIndex {
        GlobalIndex {
            x: self.x | cube.x,
            y: self.y | cube.y,
            z: self.z | cube.z,
        }
    }

    /// Region coordinates in region units (`I_r >> b`).
    pub fn coarse(self, mask_bits: u32) -> [i32; 3] {
        [
            self.x >> mask_bits,
            self.y >> mask_bits,
            self.z >> mask_bits,
        ]
    }
}

impl CubeIndex {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Self { x, y, z }
    }

    /// Packed linear offset `x | y << b | z << 2b`.
    pub fn local(self, mask_bits: u32) -> u32 {
        (self.x as u32) | ((self.y as u32) << mask_bits) | ((self.z as u32) << (2 * mask_bits))
    }

    pub fn from_local(local: u32, mask_bits: u32) -> Self {
        let m = (1u32 << mask_bits) - 1;
        Self {
            x: (local & m) as i32,
            y: ((local >> mask_bits) & m) as i32,
            z: ((local >> (2 * mask_bits)) & m) as i32,
        }
    }
}

// `floor` without the libm call: truncate, then step down for negative
// non-integers. Same range checks as flooring first.
fn quantize(v: f64, cube_size: f64) -> Result<i32> {
    let q = v / cube_size;
    if !(q >= i32::MIN as f64 && q < i32::MAX as f64 + 1.0) {
        return Err(Error::IndexOverflow(v));
    }
    let t = q as i32;
    Ok(if (t as f64) > q { t - 1 } else { t })
}

/// Global cube index of a point.
pub fn global_index(p: &Point3<f64>, cube_size: f64) -> Result<GlobalIndex> {
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return Err(Error::NonFinitePoint(p.x, p.y, p.z));
    }
    Ok(GlobalIndex {
        x: quantize(p.x, cube_size)?,
        y: quantize(p.y, cube_size)?,
        z: quantize(p.z, cube_size)?,
    })
}
