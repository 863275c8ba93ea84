//! Two-layer region-wise hash map.
//!
//! The outer layer is a [`RegionTable`] from region index to [`Region`];
//! each region holds its occupied cubes. Two side tables hang off the map:
//! per region column `O_r` the height band `H {max, min}` of occupied cubes,
//! and per global column `O` the running mean height `G` of ground cubes.

mod config;
mod hash;
mod index;
mod region;

use std::collections::HashMap;

use nalgebra::Point3;

pub use config::{MapConfig, DEFAULT_PRIMES};
pub use hash::{hash_index, RegionTable};
pub use index::{global_index, CellKey, ColumnKey, CubeIndex, GlobalIndex, RegionIndex};
pub use region::{Cube, Plane, Region};

use crate::error::Result;

/// Deterministic hasher state for side tables; iteration order must not
/// depend on process-level randomness.
pub type FixedState = rustc_hash::FxBuildHasher;
pub type FixedMap<K, V> = HashMap<K, V, FixedState>;

/// Height extrema of a column, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightBand {
    pub max: f64,
    pub min: f64,
}

impl HeightBand {
    pub fn point(z: f64) -> Self {
        Self { max: z, min: z }
    }

    pub fn include(&mut self, z: f64) {
        self.max = self.max.max(z);
        self.min = self.min.min(z);
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundMean {
    pub mean: f64,
    pub count: u64,
}

#[derive(Debug, Clone, Default)]
struct Column {
    band: Option<HeightBand>,
    dirty: bool,
    /// Sorted z origins of the regions present in this column.
    layers: Vec<i32>,
}

/// One exported occupied cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPoint {
    pub position: Point3<f64>,
    pub is_ground: bool,
}

/// Split a point into global, region and cube indices.
pub fn point_to_indices(p: &Point3<f64>, cfg: &MapConfig) -> Result<(GlobalIndex, RegionIndex, CubeIndex)> {
    let i = global_index(p, cfg.cube_size)?;
    let m = cfg.mask();
    Ok((i, i.region(m), i.cube(m)))
}

pub struct RhMap {
    config: MapConfig,
    regions: RegionTable<Region>,
    columns: FixedMap<ColumnKey, Column>,
    ground: FixedMap<CellKey, GroundMean>,
}

impl RhMap {
    pub fn new(config: MapConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            regions: RegionTable::new(config.table_size, config.primes, config.mask_bits),
            columns: FixedMap::default(),
            ground: FixedMap::default(),
            config,
        })
    }

    pub fn config(&self) -> &MapConfig {
        &self.config
    }

    pub fn indices(&self, p: &Point3<f64>) -> Result<(GlobalIndex, RegionIndex, CubeIndex)> {
        point_to_indices(p, &self.config)
    }

    fn z_center(&self, z: i32) -> f64 {
        (z as f64 + 0.5) * self.config.cube_size
    }

    fn is_occupied_value(&self, log_odds: f64) -> bool {
        log_odds > self.config.occupied_threshold
    }

    /// Add one hit to the cube at `i` and return its new state.
    pub fn integrate_hit(&mut self, i: GlobalIndex) -> Cube {
        let m = self.config.mask();
        let bits = self.config.mask_bits;
        let (hit, lo, hi, thr) = (
            self.config.log_odds_hit,
            self.config.log_odds_min,
            self.config.log_odds_max,
            self.config.occupied_threshold,
        );
        let z = self.z_center(i.z);
        let r = i.region(m);
        let local = i.cube(m).local(bits);

        let (region, created) = self.regions.get_or_insert_with(r, Region::default);
        let cube = region.cube_mut_or_insert(local);
        let before = cube.log_odds;
        cube.log_odds = (before + hit).clamp(lo, hi);
        let out = *cube;
        let became_occupied = before <= thr && out.log_odds > thr;
        if became_occupied {
            region.add_occupied(z);
        }

        if created || became_occupied {
            let col = self.columns.entry(r.column()).or_default();
            if created {
                if let Err(pos) = col.layers.binary_search(&r.z) {
                    col.layers.insert(pos, r.z);
                }
            }
            if became_occupied && !col.dirty {
                match col.band.as_mut() {
                    Some(b) => b.include(z),
                    None => col.band = Some(HeightBand::point(z)),
                }
            }
        }
        out
    }

    /// Quantise and integrate a world-frame point.
    pub fn integrate_point(&mut self, p: &Point3<f64>) -> Result<Cube> {
        let i = global_index(p, self.config.cube_size)?;
        Ok(self.integrate_hit(i))
    }

    /// Fold one ground height sample into the running mean of column `o`.
    pub fn update_ground_mean(&mut self, o: CellKey, z: f64) -> GroundMean {
        let g = self.ground.entry(o).or_insert(GroundMean { mean: 0.0, count: 0 });
        g.count += 1;
        g.mean += (z - g.mean) / g.count as f64;
        *g
    }

    pub fn ground_mean(&self, o: CellKey) -> Option<GroundMean> {
        self.ground.get(&o).copied()
    }

    pub fn region(&self, r: &RegionIndex) -> Option<&Region> {
        self.regions.get(r)
    }

    pub(crate) fn region_mut(&mut self, r: &RegionIndex) -> Option<&mut Region> {
        self.regions.get_mut(r)
    }

    pub fn regions(&self) -> impl Iterator<Item = (&RegionIndex, &Region)> {
        self.regions.iter()
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn table(&self) -> &RegionTable<Region> {
        &self.regions
    }

    pub fn cube(&self, i: GlobalIndex) -> Option<&Cube> {
        let m = self.config.mask();
        self.regions
            .get(&i.region(m))
            .and_then(|r| r.cube(i.cube(m).local(self.config.mask_bits)))
    }

    pub fn is_occupied(&self, i: GlobalIndex) -> bool {
        self.cube(i).is_some_and(|c| self.is_occupied_value(c.log_odds))
    }

    /// Mark a cube as ground. Returns true if it was not ground before.
    pub(crate) fn mark_ground(&mut self, i: GlobalIndex) -> bool {
        let m = self.config.mask();
        let local = i.cube(m).local(self.config.mask_bits);
        match self.regions.get_mut(&i.region(m)).and_then(|r| r.cube_mut(local)) {
            Some(c) if !c.is_ground => {
                c.is_ground = true;
                true
            }
            _ => false,
        }
    }

    /// Occupied cubes of a region as global indices with their state.
    pub fn occupied_in(&self, r: &RegionIndex) -> Vec<(GlobalIndex, Cube)> {
        let bits = self.config.mask_bits;
        let thr = self.config.occupied_threshold;
        self.regions
            .get(r)
            .map(|region| {
                region
                    .cubes(bits)
                    .filter(|(_, c)| c.log_odds > thr)
                    .map(|(ci, c)| (r.join(ci), *c))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn has_column(&self, o_r: ColumnKey) -> bool {
        self.columns.contains_key(&o_r)
    }

    /// Regions stacked in column `o_r`, bottom to top.
    pub fn column_regions(&self, o_r: ColumnKey) -> impl Iterator<Item = RegionIndex> + '_ {
        self.columns
            .get(&o_r)
            .into_iter()
            .flat_map(move |c| c.layers.iter().map(move |&z| RegionIndex::new(o_r[0], o_r[1], z)))
    }

    /// `H(O_r)`: height extrema of occupied cubes in the column. A column
    /// dirtied by removal is rescanned from its regions until
    /// [`refresh_columns`](Self::refresh_columns) caches the result.
    pub fn column_band(&self, o_r: ColumnKey) -> Option<HeightBand> {
        let col = self.columns.get(&o_r)?;
        if col.dirty {
            self.scan_column(o_r, &col.layers)
        } else {
            col.band
        }
    }

    fn scan_column(&self, o_r: ColumnKey, layers: &[i32]) -> Option<HeightBand> {
        let mut band: Option<HeightBand> = None;
        for &z in layers {
            let Some(region) = self.regions.get(&RegionIndex::new(o_r[0], o_r[1], z)) else {
                continue;
            };
            if let (Some(lo), Some(hi)) = (region.z_min(), region.z_max()) {
                match band.as_mut() {
                    Some(b) => {
                        b.include(lo);
                        b.include(hi);
                    }
                    None => band = Some(HeightBand { max: hi, min: lo }),
                }
            }
        }
        band
    }

    /// Recompute and cache every dirtied column band.
    pub fn refresh_columns(&mut self) {
        let dirty: Vec<ColumnKey> = self
            .columns
            .iter()
            .filter(|(_, c)| c.dirty)
            .map(|(k, _)| *k)
            .collect();
        for key in dirty {
            let layers = std::mem::take(&mut self.columns.get_mut(&key).unwrap().layers);
            let band = self.scan_column(key, &layers);
            let col = self.columns.get_mut(&key).unwrap();
            col.layers = layers;
            col.band = band;
            col.dirty = false;
        }
    }

    /// Delete every non-ground cube of region `r`; ground cubes are kept.
    /// Returns the number of cubes deleted. Regions left empty are evicted.
    pub fn remove_region_nonground(&mut self, r: RegionIndex) -> usize {
        let bits = self.config.mask_bits;
        let thr = self.config.occupied_threshold;
        let cube_size = self.config.cube_size;
        let Some(region) = self.regions.get_mut(&r) else {
            return 0;
        };
        let before = region.cubes.len();
        region.cubes.retain(|(_, c)| c.is_ground);
        let removed = before - region.cubes.len();
        if removed == 0 {
            return 0;
        }

        region.occupied = 0;
        region.z_sum = 0.0;
        for (local, cube) in &region.cubes {
            if cube.log_odds > thr {
                let cz = CubeIndex::from_local(*local, bits).z;
                let z = ((r.z | cz) as f64 + 0.5) * cube_size;
                if region.occupied == 0 {
                    region.z_min = z;
                    region.z_max = z;
                } else {
                    region.z_min = region.z_min.min(z);
                    region.z_max = region.z_max.max(z);
                }
                region.z_sum += z;
                region.occupied += 1;
            }
        }
        region.generation += 1;
        let empty = region.cubes.is_empty();

        if empty {
            self.regions.remove(&r);
        }
        if let Some(col) = self.columns.get_mut(&r.column()) {
            col.dirty = true;
            if empty {
                if let Ok(pos) = col.layers.binary_search(&r.z) {
                    col.layers.remove(pos);
                }
                if col.layers.is_empty() {
                    self.columns.remove(&r.column());
                }
            }
        }
        removed
    }

    /// All occupied cubes as cube-center points, sorted by region then cube.
    pub fn export_occupied_points(&self) -> Vec<MapPoint> {
        let bits = self.config.mask_bits;
        let thr = self.config.occupied_threshold;
        let mut keys: Vec<RegionIndex> = self.regions.keys().copied().collect();
        keys.sort_unstable();
        let mut out = Vec::new();
        for key in keys {
            let region = self.regions.get(&key).unwrap();
            for (ci, cube) in region.cubes(bits) {
                if cube.log_odds > thr {
                    out.push(MapPoint {
                        position: key.join(ci).center(self.config.cube_size),
                        is_ground: cube.is_ground,
                    });
                }
            }
        }
        out
    }

    /// Every occupied cube, unordered.
    pub fn occupied_cubes(&self) -> impl Iterator<Item = (GlobalIndex, Cube)> + '_ {
        let bits = self.config.mask_bits;
        let thr = self.config.occupied_threshold;
        self.regions.iter().flat_map(move |(key, region)| {
            region
                .cubes(bits)
                .filter(move |(_, c)| c.log_odds > thr)
                .map(move |(ci, c)| (key.join(ci), *c))
        })
    }

    pub fn occupied_count(&self) -> usize {
        self.regions.iter().map(|(_, r)| r.occupied_count()).sum()
    }
}
