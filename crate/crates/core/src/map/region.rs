use nalgebra::Vector3;

use super::index::CubeIndex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube {
    pub log_odds: f64,
    pub is_ground: bool,
}

impl Default for Cube {
    fn default() -> Self {
        Self {
            log_odds: 0.0,
            is_ground: false,
        }
    }
}

/// Ground plane `n . I = d` in global cube-index coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub offset: f64,
    /// Covariance eigenvalues of the fitted cubes, ascending. The first is
    /// the mean squared distance to the plane.
    pub eigenvalues: [f64; 3],
}

impl Plane {
    /// Signed distance of a cube index from the plane, in cube units.
    pub fn distance(&self, i: [i32; 3]) -> f64 {
        self.normal.x * i[0] as f64 + self.normal.y * i[1] as f64 + self.normal.z * i[2] as f64
            - self.offset
    }
}

/// A block of `(m + 1)^3` cubes with summary heights and a ground plane.
///
/// Cubes are kept sorted by packed local offset; heights are cube-center
/// z values in meters over occupied cubes.
#[derive(Debug, Clone, Default)]
pub struct Region {
    pub(crate) cubes: Vec<(u32, Cube)>,
    pub(crate) z_min: f64,
    pub(crate) z_max: f64,
    pub(crate) z_sum: f64,
    pub(crate) occupied: usize,
    pub(crate) plane: Option<Plane>,
    /// Bumped whenever the occupied cube set changes.
    pub(crate) generation: u64,
    /// Generation at which the last plane fit ran.
    pub(crate) fitted_generation: Option<u64>,
}

impl Region {
    pub fn occupied_count(&self) -> usize {
        self.occupied
    }

    pub fn z_min(&self) -> Option<f64> {
        (self.occupied > 0).then_some(self.z_min)
    }

    pub fn z_max(&self) -> Option<f64> {
        (self.occupied > 0).then_some(self.z_max)
    }

    pub fn z_mean(&self) -> Option<f64> {
        (self.occupied > 0).then(|| self.z_sum / self.occupied as f64)
    }

    pub fn plane(&self) -> Option<&Plane> {
        self.plane.as_ref()
    }

    pub fn cube_count(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_fitted_current(&self) -> bool {
        self.fitted_generation == Some(self.generation)
    }

    pub fn cubes(&self, mask_bits: u32) -> impl Iterator<Item = (CubeIndex, &Cube)> + '_ {
        self.cubes
            .iter()
            .map(move |(l, c)| (CubeIndex::from_local(*l, mask_bits), c))
    }

    pub fn cube(&self, local: u32) -> Option<&Cube> {
        self.cubes
            .binary_search_by_key(&local, |(l, _)| *l)
            .ok()
            .map(|i| &self.cubes[i].1)
    }

    pub(crate) fn cube_mut_or_insert(&mut self, local: u32) -> &mut Cube {
        let i = match self.cubes.binary_search_by_key(&local, |(l, _)| *l) {
            Ok(i) => i,
            Err(i) => {
                self.cubes.insert(i, (local, Cube::default()));
                i
            }
        };
        &mut self.cubes[i].1
    }

    pub(crate) fn cube_mut(&mut self, local: u32) -> Option<&mut Cube> {
        self.cubes
            .binary_search_by_key(&local, |(l, _)| *l)
            .ok()
            .map(move |i| &mut self.cubes[i].1)
    }

    pub(crate) fn add_occupied(&mut self, z: f64) {
        if self.occupied == 0 {
            self.z_min = z;
            self.z_max = z;
        } else {
            self.z_min = self.z_min.min(z);
            self.z_max = self.z_max.max(z);
        }
        self.z_sum += z;
        self.occupied += 1;
        self.generation += 1;
    }
}
