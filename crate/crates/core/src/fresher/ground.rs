//! Region-wise ground plane estimation.
//!
//! Candidate regions are those holding scan points below the column ground
//! reference, minus isolated regions with no occupied neighbour column. Each
//! candidate whose cube set changed since its last fit gets a PCA plane over
//! the cubes at or below the region mean height. Occupied cubes of the region
//! within `r_gro` of that plane become ground and feed the `G` table.

use std::collections::BTreeSet;

use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};

use crate::error::PlaneFitError;
use crate::map::{global_index, FixedMap, GlobalIndex, Plane, RegionIndex, RhMap};

use super::FresherConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroundReport {
    pub elected: usize,
    pub fitted: usize,
    pub invalid: usize,
    pub ground_cubes_added: usize,
}

/// Regions of `points` (world frame, already integrated) that hold a point
/// below the ground reference of its global column and have at least one
/// occupied neighbour column. The reference is `G(O)` raised by the ground
/// margin `r_gro`, so a ground surface straddling a cube boundary elects
/// both of its layers.
///
/// Columns without `G` are referenced to the lowest scan point among the
/// 3 x 3 region columns around them. A single column's own lowest point can
/// sit high on an object face when the ground next to it is hidden.
pub fn elect_candidate_ground_regions(
    map: &RhMap,
    points: &[Point3<f64>],
    cfg: &FresherConfig,
) -> BTreeSet<RegionIndex> {
    let cube = map.config().cube_size;
    let mask = map.config().mask();
    let step = mask + 1;
    let indices: Vec<GlobalIndex> = points.iter().filter_map(|p| global_index(p, cube).ok()).collect();

    let mut lowest: FixedMap<[i32; 2], f64> = FixedMap::default();
    for (i, p) in indices.iter().zip(points) {
        lowest
            .entry(i.region(mask).column())
            .and_modify(|z| *z = z.min(p.z))
            .or_insert(p.z);
    }
    let bootstrap = |o: [i32; 2]| {
        let mut z = f64::INFINITY;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(&l) = lowest.get(&[o[0] + dx * step, o[1] + dy * step]) {
                    z = z.min(l);
                }
            }
        }
        z + cfg.ground_bootstrap_margin
    };
    let mut local: FixedMap<[i32; 2], f64> = FixedMap::default();

    let margin = cfg.r_gro * cube;
    let mut raw = BTreeSet::new();
    for i in &indices {
        let reference = match map.ground_mean(i.cell()) {
            Some(g) => g.mean + margin,
            None => {
                let o = i.region(mask).column();
                *local.entry(o).or_insert_with(|| bootstrap(o))
            }
        };
        if (i.z as f64) * cube < reference {
            raw.insert(i.region(mask));
        }
    }

    raw.into_iter()
        .filter(|r| {
            (-1..=1).any(|dx| {
                (-1..=1).any(|dy| {
                    (dx != 0 || dy != 0)
                        && map
                            .column_band([r.x + dx * step, r.y + dy * step])
                            .is_some()
                })
            })
        })
        .collect()
}

/// Total-least-squares plane through integer cube indices, via the
/// eigenvector of the covariance with the smallest eigenvalue.
/// The normal is oriented with `n.z >= 0` and `d = n . mean`.
pub fn fit_plane(cubes: &[GlobalIndex]) -> Result<Plane, PlaneFitError> {
    if cubes.len() < 3 {
        return Err(PlaneFitError::TooFewCubes(cubes.len()));
    }
    let n = cubes.len() as f64;
    let to_vec = |c: &GlobalIndex| Vector3::new(c.x as f64, c.y as f64, c.z as f64);
    let mean = cubes.iter().map(to_vec).sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for c in cubes {
        let d = to_vec(c) - mean;
        cov += d * d.transpose();
    }
    cov /= n;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (lo, mid, hi) = (
        eig.eigenvalues[order[0]].max(0.0),
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    );
    // Collinear or coincident cubes leave two (or three) null directions.
    if hi <= 1e-12 || mid <= 1e-9 * hi {
        return Err(PlaneFitError::RankDeficient);
    }

    let mut normal: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned();
    normal.normalize_mut();
    if normal.z < 0.0 {
        normal = -normal;
    }
    Ok(Plane {
        normal,
        offset: normal.dot(&mean),
        eigenvalues: [lo, mid, hi],
    })
}

/// Cubes of the region at or below its mean height (the initial ground set).
fn initial_ground_set(map: &RhMap, r: &RegionIndex) -> Vec<GlobalIndex> {
    let Some(mean) = map.region(r).and_then(|reg| reg.z_mean()) else {
        return Vec::new();
    };
    let cube = map.config().cube_size;
    map.occupied_in(r)
        .into_iter()
        .map(|(i, _)| i)
        .filter(|i| (i.z as f64 + 0.5) * cube <= mean + 1e-9)
        .collect()
}

/// Fit and store the ground plane of region `r`. A failed fit clears any
/// previous plane. Either way the region is marked as fitted for its
/// current cube set.
pub fn fit_region_plane(map: &mut RhMap, r: RegionIndex) -> Result<Plane, PlaneFitError> {
    let fit = fit_plane(&initial_ground_set(map, &r));
    if let Some(region) = map.region_mut(&r) {
        region.plane = fit.ok();
        region.fitted_generation = Some(region.generation);
    }
    fit
}

fn extract(map: &mut RhMap, r: RegionIndex, r_gro: f64) -> (Vec<GlobalIndex>, usize) {
    let Some(plane) = map.region(&r).and_then(|reg| reg.plane().copied()) else {
        return (Vec::new(), 0);
    };
    let cube = map.config().cube_size;
    let ground: Vec<GlobalIndex> = map
        .occupied_in(&r)
        .into_iter()
        .map(|(i, _)| i)
        .filter(|i| plane.distance(i.as_array()).abs() < r_gro)
        .collect();
    let mut added = 0;
    for i in &ground {
        if map.mark_ground(*i) {
            map.update_ground_mean(i.cell(), (i.z as f64 + 0.5) * cube);
            added += 1;
        }
    }
    (ground, added)
}

/// Occupied cubes of the region within `r_gro` (cube units) of its plane.
/// They are flagged as ground and, when newly flagged, their heights are
/// folded into `G`. Without a valid plane nothing is returned.
pub fn extract_ground_cubes(map: &mut RhMap, r: RegionIndex, r_gro: f64) -> Vec<GlobalIndex> {
    extract(map, r, r_gro).0
}

/// A fitted plane can stand for ground if it is no steeper than
/// `ground_max_slope` and its normal is well defined. Thin ribbons of cubes,
/// such as the top edge of an object's side, have two comparable small
/// covariance eigenvalues and an arbitrary normal.
pub fn is_ground_plane(plane: &Plane, cfg: &FresherConfig) -> bool {
    let [lo, mid, _] = plane.eigenvalues;
    plane.normal.z >= cfg.ground_max_slope.cos() && mid >= cfg.ground_min_conditioning * lo
}

/// Full ground estimation pass for one integrated scan. Planes rejected by
/// [`is_ground_plane`] are discarded.
pub fn r_gpe(map: &mut RhMap, points: &[Point3<f64>], cfg: &FresherConfig) -> GroundReport {
    let elected = elect_candidate_ground_regions(map, points, cfg);
    let mut report = GroundReport {
        elected: elected.len(),
        ..Default::default()
    };
    for r in elected {
        let stale = map.region(&r).is_some_and(|reg| !reg.is_fitted_current());
        if !stale {
            continue;
        }
        report.fitted += 1;
        match fit_region_plane(map, r) {
            Ok(plane) if is_ground_plane(&plane, cfg) => {}
            Ok(_) => {
                if let Some(region) = map.region_mut(&r) {
                    region.plane = None;
                }
                report.invalid += 1;
                continue;
            }
            Err(_) => {
                report.invalid += 1;
                continue;
            }
        }
        report.ground_cubes_added += extract(map, r, cfg.r_gro).1;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::MapConfig;

    fn small_map() -> RhMap {
        RhMap::new(MapConfig {
            table_size: 256,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn flat_lattice_gives_vertical_normal() {
        let cubes: Vec<_> = (0..8)
            .flat_map(|x| (0..8).map(move |y| GlobalIndex::new(x, y, 0)))
            .collect();
        let plane = fit_plane(&cubes).unwrap();
        assert!((plane.normal - Vector3::z()).norm() < 1e-12);
        assert!(plane.offset.abs() < 1e-12);
    }

    #[test]
    fn tilted_lattice_plane() {
        // z = 0.2 x holds exactly at x = 0, 5, 10.
        let cubes: Vec<_> = [0, 5, 10]
            .into_iter()
            .flat_map(|x| (0..8).map(move |y| GlobalIndex::new(x, y, x / 5)))
            .collect();
        let plane = fit_plane(&cubes).unwrap();
        let expected = Vector3::new(-0.2, 0.0, 1.0).normalize();
        assert!((plane.normal - expected).norm() < 1e-6);
        for c in &cubes {
            assert!(plane.distance(c.as_array()).abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_sets_are_rejected() {
        let line: Vec<_> = (0..3).map(|x| GlobalIndex::new(x, x, 0)).collect();
        assert_eq!(fit_plane(&line), Err(PlaneFitError::RankDeficient));
        assert_eq!(fit_plane(&line[..2]), Err(PlaneFitError::TooFewCubes(2)));
        let same = vec![GlobalIndex::new(1, 1, 1); 4];
        assert_eq!(fit_plane(&same), Err(PlaneFitError::RankDeficient));
    }

    #[test]
    fn displaced_cube_is_not_ground() {
        let mut map = small_map();
        for x in 0..8 {
            for y in 0..8 {
                map.integrate_hit(GlobalIndex::new(x, y, 2));
            }
        }
        map.integrate_hit(GlobalIndex::new(3, 3, 5));
        let r = RegionIndex::new(0, 0, 0);
        let plane = fit_region_plane(&mut map, r).unwrap();
        assert!(plane.normal.z > 0.99);
        let ground = extract_ground_cubes(&mut map, r, 1.25);
        assert_eq!(ground.len(), 64);
        assert!(!ground.contains(&GlobalIndex::new(3, 3, 5)));
        assert!(!map.cube(GlobalIndex::new(3, 3, 5)).unwrap().is_ground);
        assert!(map.cube(GlobalIndex::new(0, 0, 2)).unwrap().is_ground);
        assert!(map.ground_mean([0, 0]).is_some());
    }

    #[test]
    fn isolated_point_is_not_elected() {
        let mut map = small_map();
        let p = Point3::new(0.05, 0.05, 0.05);
        map.integrate_point(&p).unwrap();
        let elected = elect_candidate_ground_regions(&map, &[p], &FresherConfig::default());
        assert!(elected.is_empty());
        // A neighbour column makes it a candidate.
        let q = Point3::new(0.85, 0.05, 0.05);
        map.integrate_point(&q).unwrap();
        let elected = elect_candidate_ground_regions(&map, &[p], &FresherConfig::default());
        assert_eq!(elected.len(), 1);
    }

    #[test]
    fn high_point_does_not_elect() {
        let mut map = small_map();
        for x in 0..16 {
            map.integrate_hit(GlobalIndex::new(x, 0, 0));
        }
        map.update_ground_mean([2, 2], 0.05);
        let p = Point3::new(0.25, 0.25, 2.05);
        map.integrate_point(&p).unwrap();
        let elected = elect_candidate_ground_regions(&map, &[p], &FresherConfig::default());
        assert!(elected.is_empty());
    }

    #[test]
    fn unchanged_region_is_not_refitted() {
        let mut map = small_map();
        let pts: Vec<_> = (0..24)
            .flat_map(|x| (0..24).map(move |y| Point3::new(x as f64 * 0.1 + 0.05, y as f64 * 0.1 + 0.05, 0.02)))
            .collect();
        for p in &pts {
            map.integrate_point(p).unwrap();
        }
        let cfg = FresherConfig::default();
        let first = r_gpe(&mut map, &pts, &cfg);
        assert_eq!(first.fitted, 9);
        assert_eq!(first.invalid, 0);
        assert_eq!(first.ground_cubes_added, 24 * 24);
        for p in &pts {
            map.integrate_point(p).unwrap();
        }
        let second = r_gpe(&mut map, &pts, &cfg);
        assert_eq!(second.fitted, 0);
        assert_eq!(second.ground_cubes_added, 0);
    }
}
