use crate::error::{Error, Result};

/// Classic 3D spatial-hash primes.
pub const DEFAULT_PRIMES: [u64; 3] = [73_856_093, 19_349_663, 83_492_791];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapConfig {
    /// Cube edge length in meters.
    pub cube_size: f64,
    /// Number of low bits in the per-axis region mask.
    pub mask_bits: u32,
    /// Initial bucket count of the region table.
    pub table_size: usize,
    pub primes: [u64; 3],
    pub log_odds_hit: f64,
    pub log_odds_min: f64,
    pub log_odds_max: f64,
    pub occupied_threshold: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            cube_size: 0.1,
            mask_bits: 3,
            table_size: 1 << 20,
            primes: DEFAULT_PRIMES,
            log_odds_hit: 0.85,
            log_odds_min: -2.0,
            log_odds_max: 3.5,
            occupied_threshold: 0.0,
        }
    }
}

impl MapConfig {
    /// Per-axis mask `m = 2^b - 1`.
    pub fn mask(&self) -> i32 {
        (1i32 << self.mask_bits) - 1
    }

    /// Cubes per region edge, `m + 1`.
    pub fn region_cubes(&self) -> i32 {
        1i32 << self.mask_bits
    }

    /// Region edge length `s_r = (m + 1) * s_c`.
    pub fn region_size(&self) -> f64 {
        self.region_cubes() as f64 * self.cube_size
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cube_size.is_finite() && self.cube_size > 0.0) {
            return Err(Error::InvalidMapConfig(format!(
                "cube_size must be positive, got {}",
                self.cube_size
            )));
        }
        if !(1..=10).contains(&self.mask_bits) {
            return Err(Error::InvalidMapConfig(format!(
                "mask_bits must be in 1..=10, got {}",
                self.mask_bits
            )));
        }
        if self.table_size == 0 || self.table_size > u32::MAX as usize / 2 {
            return Err(Error::InvalidMapConfig(format!(
                "table_size out of range: {}",
                self.table_size
            )));
        }
        if self.primes.iter().any(|&p| p == 0 || p >= 1 << 32) {
            return Err(Error::InvalidMapConfig("hash primes must be in 1..2^32".into()));
        }
        if !(self.log_odds_min < self.log_odds_max) {
            return Err(Error::InvalidMapConfig(format!(
                "log-odds clamp [{}, {}] is empty",
                self.log_odds_min, self.log_odds_max
            )));
        }
        if !self.log_odds_hit.is_finite() || !self.occupied_threshold.is_finite() {
            return Err(Error::InvalidMapConfig("log-odds parameters must be finite".into()));
        }
        Ok(())
    }
}
