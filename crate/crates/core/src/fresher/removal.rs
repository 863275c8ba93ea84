//! Scan-to-map removal.

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::Point3;
use serde::Serialize;

use crate::map::{RegionIndex, RhMap};

use super::context::{
    build_scan_context_2d, build_scan_context_3d, compute_ratio1, compute_ratio2,
    select_candidate_regions, BoundedPoint,
};
use super::range_image::{build_range_image, extract_max_ring, extract_sup_inf, RangeImage};
use super::scan::{Pose, Scan};
use super::FresherConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RemovalReport {
    pub columns_flagged: usize,
    pub regions_flagged: usize,
    pub cubes_removed: usize,
    pub ground_cubes_added: usize,
    pub elapsed_ms: f64,
}

/// Run scan-to-map removal for `scan` taken at `pose`. The scan is not
/// integrated here; the front-end inserts it beforehand.
pub fn s2m_removal(map: &mut RhMap, scan: &Scan, pose: &Pose, cfg: &FresherConfig) -> RemovalReport {
    let start = Instant::now();
    if scan.is_empty() {
        return RemovalReport::default();
    }
    let img = build_range_image(scan, &cfg.image);
    let mut report = s2m_removal_with_image(map, scan, pose, &img, cfg);
    report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

/// Detect dynamic columns and regions, without touching the map.
pub fn detect_dynamic(
    map: &RhMap,
    scan: &Scan,
    pose: &Pose,
    img: &RangeImage,
    cfg: &FresherConfig,
) -> (Vec<[i32; 2]>, BTreeSet<RegionIndex>) {
    let map_cfg = *map.config();
    let world = |id: u32| pose.apply(&scan.points[id as usize]);

    let max_ids = extract_max_ring(img);
    let mut is_max = vec![false; scan.len()];
    for &id in &max_ids {
        is_max[id as usize] = true;
    }
    let roi: Vec<Point3<f64>> = img
        .filled()
        .filter(|(_, _, c)| !is_max[c.point as usize])
        .map(|(_, _, c)| world(c.point))
        .collect();
    let max_ring: Vec<Point3<f64>> = max_ids.iter().map(|&id| world(id)).collect();

    let ctx2 = build_scan_context_2d(&roi, &max_ring, &map_cfg);
    let columns: Vec<[i32; 2]> = ctx2
        .columns()
        .into_iter()
        .filter(|&o| compute_ratio1(&ctx2, map, o, cfg.eps_div) < cfg.delta1)
        .collect();

    let (sup, inf) = extract_sup_inf(img, cfg.r1, cfg.r2, cfg.max_search, cfg.bound_sign);
    let lift = |b: &super::range_image::BoundPoint| BoundedPoint {
        point: world(b.point),
        bound: world(b.source).z,
    };
    let sup: Vec<BoundedPoint> = sup.iter().map(lift).collect();
    let inf: Vec<BoundedPoint> = inf.iter().map(lift).collect();
    let mut all = roi;
    all.extend_from_slice(&max_ring);
    let ctx3 = build_scan_context_3d(&all, &sup, &inf, &map_cfg);
    let regions: BTreeSet<RegionIndex> = select_candidate_regions(&ctx3, map)
        .into_iter()
        .filter(|r| compute_ratio2(&ctx3, map, r, cfg.eps_div) < cfg.delta2)
        .collect();
    (columns, regions)
}

pub(crate) fn s2m_removal_with_image(
    map: &mut RhMap,
    scan: &Scan,
    pose: &Pose,
    img: &RangeImage,
    cfg: &FresherConfig,
) -> RemovalReport {
    let start = Instant::now();
    if scan.is_empty() {
        return RemovalReport::default();
    }
    let (columns, regions) = detect_dynamic(map, scan, pose, img, cfg);

    // A flagged column clears every region stacked in it.
    let mut targets = regions.clone();
    for &o in &columns {
        targets.extend(map.column_regions(o));
    }
    let cubes_removed = targets
        .into_iter()
        .map(|r| map.remove_region_nonground(r))
        .sum();
    map.refresh_columns();

    RemovalReport {
        columns_flagged: columns.len(),
        regions_flagged: regions.len(),
        cubes_removed,
        ground_cubes_added: 0,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}
