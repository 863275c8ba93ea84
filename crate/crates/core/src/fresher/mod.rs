//! Front-end scan processing: integrate, estimate ground, remove dynamics.

mod config;
pub mod context;
pub mod ground;
pub mod range_image;
mod removal;
mod scan;

use std::time::Instant;

pub use config::{BoundSign, FresherConfig, RangeImageConfig};
pub use context::{
    build_scan_context_2d, build_scan_context_3d, compute_ratio1, compute_ratio2,
    select_candidate_regions, BoundedPoint, ColumnContext, RegionContext, ScanContext2D,
    ScanContext3D,
};
pub use ground::{
    elect_candidate_ground_regions, extract_ground_cubes, fit_plane, fit_region_plane, is_ground_plane, r_gpe,
    GroundReport,
};
pub use range_image::{build_range_image, extract_max_ring, extract_sup_inf, BoundPoint, Cell, RangeImage};
pub use removal::{detect_dynamic, s2m_removal, RemovalReport};
pub use scan::{transform_scan, Pose, Scan};

use crate::error::Result;
use crate::map::RhMap;

/// Everything the front-end produced for one scan.
#[derive(Debug, Clone)]
pub struct FrontEndOutput {
    pub removal: RemovalReport,
    pub ground: GroundReport,
    pub image: RangeImage,
}

/// Integrate `scan` into the map, run ground estimation on it, then run
/// scan-to-map removal. `removal.elapsed_ms` covers all three phases.
pub fn process_scan(map: &mut RhMap, scan: &Scan, pose: &Pose, cfg: &FresherConfig) -> Result<FrontEndOutput> {
    let start = Instant::now();
    let world = transform_scan(scan, pose);
    for p in &world {
        map.integrate_point(p)?;
    }
    let ground = r_gpe(map, &world, cfg);
    let image = build_range_image(scan, &cfg.image);
    let mut removal = removal::s2m_removal_with_image(map, scan, pose, &image, cfg);
    removal.ground_cubes_added = ground.ground_cubes_added;
    removal.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(FrontEndOutput {
        removal,
        ground,
        image,
    })
}
