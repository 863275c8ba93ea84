//! Scan contexts: per-column and per-region height descriptors of the
//! current scan, and the two ratios that compare them with the map.

use std::collections::BTreeSet;

use nalgebra::Point3;

use crate::map::{global_index, ColumnKey, FixedMap, HeightBand, MapConfig, RegionIndex, RhMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnContext {
    pub z_max: f64,
    pub z_min: f64,
    /// Some max-ring point falls in this column.
    pub has_max_ring: bool,
}

/// 2D region-wise scan context, keyed by region column `O_r`.
#[derive(Debug, Clone, Default)]
pub struct ScanContext2D {
    entries: FixedMap<ColumnKey, ColumnContext>,
}

impl ScanContext2D {
    pub fn get(&self, o_r: ColumnKey) -> Option<&ColumnContext> {
        self.entries.get(&o_r)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Column keys in sorted order.
    pub fn columns(&self) -> Vec<ColumnKey> {
        let mut keys: Vec<_> = self.entries.keys().copied().collect();
        keys.sort_unstable();
        keys
    }
}

fn region_of(p: &Point3<f64>, cfg: &MapConfig) -> Option<RegionIndex> {
    global_index(p, cfg.cube_size).ok().map(|i| i.region(cfg.mask()))
}

/// Height extrema of the ROI points per region column, with a flag for
/// columns that contain a max-ring point.
pub fn build_scan_context_2d(
    roi: &[Point3<f64>],
    max_ring: &[Point3<f64>],
    cfg: &MapConfig,
) -> ScanContext2D {
    let mut entries: FixedMap<ColumnKey, ColumnContext> = FixedMap::default();
    let mut add = |p: &Point3<f64>, is_max: bool| {
        let Some(r) = region_of(p, cfg) else { return };
        entries
            .entry(r.column())
            .and_modify(|e| {
                e.z_max = e.z_max.max(p.z);
                e.z_min = e.z_min.min(p.z);
                e.has_max_ring |= is_max;
            })
            .or_insert(ColumnContext {
                z_max: p.z,
                z_min: p.z,
                has_max_ring: is_max,
            });
    };
    for p in roi {
        add(p, false);
    }
    for p in max_ring {
        add(p, true);
    }
    ScanContext2D { entries }
}

/// `ratio1` of a column: the scan's height band over the map's. Columns
/// holding a max-ring point compare against `Z_max - H.min` instead, since
/// the scan only reaches the column at the edge of its view. Degenerate
/// denominators and missing entries give 1.
pub fn compute_ratio1(ctx: &ScanContext2D, map: &RhMap, o_r: ColumnKey, eps_div: f64) -> f64 {
    let (Some(c), Some(h)) = (ctx.get(o_r), map.column_band(o_r)) else {
        return 1.0;
    };
    let delta = c.z_max - c.z_min;
    let denom = if c.has_max_ring {
        c.z_max - h.min
    } else {
        h.max - h.min
    };
    if denom < eps_div {
        return 1.0;
    }
    (delta / denom).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionContext {
    pub z_max: f64,
    pub z_min: f64,
    /// Lowest upper bound of the region's sup points (`z_max` if none).
    pub sup: f64,
    /// Highest lower bound of the region's inf points (`z_min` if none).
    pub inf: f64,
}

/// A world-frame point with its world-frame bound height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedPoint {
    pub point: Point3<f64>,
    pub bound: f64,
}

/// 3D region-wise scan context.
///
/// Entries exist for regions containing a sup or inf point. Heights of an
/// entry span every ROI point of the region. `observed` holds the height band
/// of every region the ROI touched; a region outside it counts as unseen.
#[derive(Debug, Clone, Default)]
pub struct ScanContext3D {
    entries: FixedMap<RegionIndex, RegionContext>,
    observed: FixedMap<RegionIndex, HeightBand>,
}

impl ScanContext3D {
    pub fn get(&self, r: &RegionIndex) -> Option<&RegionContext> {
        self.entries.get(r)
    }

    pub fn observed(&self, r: &RegionIndex) -> Option<&HeightBand> {
        self.observed.get(r)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn regions(&self) -> Vec<RegionIndex> {
        let mut keys: Vec<_> = self.entries.keys().copied().collect();
        keys.sort_unstable();
        keys
    }
}

pub fn build_scan_context_3d(
    roi: &[Point3<f64>],
    sup: &[BoundedPoint],
    inf: &[BoundedPoint],
    cfg: &MapConfig,
) -> ScanContext3D {
    let mut observed: FixedMap<RegionIndex, HeightBand> = FixedMap::default();
    let all = roi.iter().chain(sup.iter().map(|b| &b.point)).chain(inf.iter().map(|b| &b.point));
    for p in all {
        let Some(r) = region_of(p, cfg) else { continue };
        observed
            .entry(r)
            .and_modify(|b| b.include(p.z))
            .or_insert(HeightBand::point(p.z));
    }

    let mut sups: FixedMap<RegionIndex, f64> = FixedMap::default();
    let mut infs: FixedMap<RegionIndex, f64> = FixedMap::default();
    for b in sup {
        if let Some(r) = region_of(&b.point, cfg) {
            sups.entry(r).and_modify(|s| *s = s.min(b.bound)).or_insert(b.bound);
        }
    }
    for b in inf {
        if let Some(r) = region_of(&b.point, cfg) {
            infs.entry(r).and_modify(|s| *s = s.max(b.bound)).or_insert(b.bound);
        }
    }

    let mut entries: FixedMap<RegionIndex, RegionContext> = FixedMap::default();
    for r in sups.keys().chain(infs.keys()) {
        if entries.contains_key(r) {
            continue;
        }
        let band = observed[r];
        entries.insert(
            *r,
            RegionContext {
                z_max: band.max,
                z_min: band.min,
                sup: sups.get(r).copied().unwrap_or(band.max),
                inf: infs.get(r).copied().unwrap_or(band.min),
            },
        );
    }
    ScanContext3D { entries, observed }
}

/// Map regions in each entry's column whose vertical extent meets the
/// interval between the entry's `inf` and `sup`.
pub fn select_candidate_regions(ctx: &ScanContext3D, map: &RhMap) -> BTreeSet<RegionIndex> {
    let region_size = map.config().region_size();
    let cube = map.config().cube_size;
    let mut out = BTreeSet::new();
    for key in ctx.regions() {
        let e = ctx.get(&key).unwrap();
        let (lo, hi) = (e.inf.min(e.sup), e.inf.max(e.sup));
        for r in map.column_regions(key.column()) {
            let bottom = r.z as f64 * cube;
            if bottom <= hi && lo < bottom + region_size {
                out.insert(r);
            }
        }
    }
    out
}

/// `ratio2` of a candidate region: the scan's height band in the region over
/// the map region's band, or 0 when the scan did not touch the region.
pub fn compute_ratio2(ctx: &ScanContext3D, map: &RhMap, r: &RegionIndex, eps_div: f64) -> f64 {
    let Some(band) = ctx.observed(r) else {
        return 0.0;
    };
    let Some(region) = map.region(r) else {
        return 1.0;
    };
    let (Some(lo), Some(hi)) = (region.z_min(), region.z_max()) else {
        return 1.0;
    };
    let denom = hi - lo;
    if denom < eps_div {
        return 1.0;
    }
    (band.span() / denom).max(0.0)
}
