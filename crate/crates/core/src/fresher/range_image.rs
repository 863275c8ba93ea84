//! Spherical projection of a scan and the vertical searches run on it.
//!
//! Row 0 is the lowest elevation, so "up" is increasing row index. Column 0
//! starts at azimuth 0 (+x) and columns advance counter-clockwise.

use std::f64::consts::TAU;

use super::config::{BoundSign, RangeImageConfig};
use super::scan::Scan;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    /// Distance to the sensor origin (m).
    pub range: f64,
    /// Sensor-frame z (m).
    pub height: f64,
    /// Index of the source point in the scan.
    pub point: u32,
}

#[derive(Debug, Clone)]
pub struct RangeImage {
    rows: usize,
    cols: usize,
    pub fov_up: f64,
    pub fov_down: f64,
    cells: Vec<Option<Cell>>,
    /// Points outside the vertical field of view (or at the origin).
    pub dropped: usize,
}

impl RangeImage {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&Cell> {
        self.cells[row * self.cols + col].as_ref()
    }

    /// Range at a cell, 0 when empty.
    pub fn range(&self, row: usize, col: usize) -> f64 {
        self.get(row, col).map_or(0.0, |c| c.range)
    }

    pub fn filled(&self) -> impl Iterator<Item = (usize, usize, &Cell)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(k, c)| c.as_ref().map(|c| (k / self.cols, k % self.cols, c)))
    }

    pub fn filled_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Largest range in a column, if any cell is filled.
    pub fn column_max(&self, col: usize) -> Option<&Cell> {
        (0..self.rows)
            .filter_map(|r| self.get(r, col))
            .max_by(|a, b| a.range.total_cmp(&b.range))
    }
}

const FOV_SLACK: f64 = 1e-9;

/// Project a sensor-frame scan. Rows come from per-point ring ids when the
/// scan has them (and they fit), otherwise from elevation. On a cell
/// conflict the nearer return wins.
pub fn build_range_image(scan: &Scan, cfg: &RangeImageConfig) -> RangeImage {
    let (rows, cols) = (cfg.rows.max(1), cfg.cols.max(1));
    let mut img = RangeImage {
        rows,
        cols,
        fov_up: cfg.fov_up,
        fov_down: cfg.fov_down,
        cells: vec![None; rows * cols],
        dropped: 0,
    };
    let span = cfg.fov_up - cfg.fov_down;
    for (id, p) in scan.points.iter().enumerate() {
        let range = p.coords.norm();
        if !(range > 0.0 && range.is_finite()) {
            img.dropped += 1;
            continue;
        }
        let row = match scan.ring(id).map(usize::from).filter(|&r| r < rows) {
            Some(r) => r,
            None => {
                let elevation = p.z.atan2(p.x.hypot(p.y));
                if elevation < cfg.fov_down - FOV_SLACK || elevation > cfg.fov_up + FOV_SLACK {
                    img.dropped += 1;
                    continue;
                }
                let frac = ((elevation - cfg.fov_down) / span).clamp(0.0, 1.0);
                ((frac * rows as f64) as usize).min(rows - 1)
            }
        };
        let mut azimuth = p.y.atan2(p.x);
        if azimuth < 0.0 {
            azimuth += TAU;
        }
        let col = ((azimuth / TAU * cols as f64) as usize) % cols;
        let slot = &mut img.cells[row * cols + col];
        if slot.is_none_or(|c| range < c.range) {
            *slot = Some(Cell {
                range,
                height: p.z,
                point: id as u32,
            });
        }
    }
    img
}

/// The farthest return of every non-empty column (the max ring), in
/// column order.
pub fn extract_max_ring(img: &RangeImage) -> Vec<u32> {
    (0..img.cols())
        .filter_map(|c| img.column_max(c).map(|cell| cell.point))
        .collect()
}

/// A point whose vertical neighbour shows a range jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub point: u32,
    /// Point id of the neighbour cell that supplied the bound.
    pub source: u32,
    /// Sensor-frame height of the neighbour.
    pub bound: f64,
}

fn search(
    img: &RangeImage,
    row: usize,
    col: usize,
    up: bool,
    r: f64,
    max_search: usize,
    sign: BoundSign,
) -> Option<&Cell> {
    let here = img.get(row, col)?.range;
    (1..=max_search)
        .map_while(|t| {
            if up {
                (row + t < img.rows()).then(|| row + t)
            } else {
                row.checked_sub(t)
            }
        })
        .filter_map(|rr| img.get(rr, col))
        .find(|c| sign.exceeds(here, c.range, r))
}

/// Upper (`sup`) and lower (`inf`) bound points. For each filled cell the
/// search walks up (down) the column for at most `max_search` rows and
/// stops at the first filled cell whose range differs by more than `r1`
/// (`r2`); that cell's height is the bound.
pub fn extract_sup_inf(
    img: &RangeImage,
    r1: f64,
    r2: f64,
    max_search: usize,
    sign: BoundSign,
) -> (Vec<BoundPoint>, Vec<BoundPoint>) {
    let mut sup = Vec::new();
    let mut inf = Vec::new();
    for (row, col, cell) in img.filled() {
        if let Some(up) = search(img, row, col, true, r1, max_search, sign) {
            sup.push(BoundPoint {
                point: cell.point,
                source: up.point,
                bound: up.height,
            });
        }
        if let Some(down) = search(img, row, col, false, r2, max_search, sign) {
            inf.push(BoundPoint {
                point: cell.point,
                source: down.point,
                bound: down.height,
            });
        }
    }
    (sup, inf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn symmetric(rows: usize, cols: usize) -> RangeImageConfig {
        RangeImageConfig {
            rows,
            cols,
            fov_up: 10f64.to_radians(),
            fov_down: (-10f64).to_radians(),
        }
    }

    #[test]
    fn axis_point_lands_mid_row_col_zero() {
        let scan = Scan::new(vec![Point3::new(10.0, 0.0, 0.0)], 0.0);
        let img = build_range_image(&scan, &symmetric(64, 360));
        let cell = img.get(32, 0).unwrap();
        assert_eq!(cell.range, 10.0);
        assert_eq!(img.filled_count(), 1);
    }

    #[test]
    fn nearer_return_wins() {
        let scan = Scan::new(vec![Point3::new(8.0, 0.0, 0.0), Point3::new(5.0, 0.0, 0.0)], 0.0);
        let img = build_range_image(&scan, &symmetric(16, 90));
        assert_eq!(img.get(8, 0).unwrap().range, 5.0);
        assert_eq!(img.get(8, 0).unwrap().point, 1);
    }

    #[test]
    fn out_of_fov_is_dropped() {
        let scan = Scan::new(vec![Point3::new(1.0, 0.0, 1.0), Point3::origin()], 0.0);
        let img = build_range_image(&scan, &symmetric(16, 90));
        assert_eq!(img.dropped, 2);
        assert_eq!(img.filled_count(), 0);
    }

    #[test]
    fn ring_ids_select_rows() {
        let mut scan = Scan::new(vec![Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)], 0.0);
        scan.rings = Some(vec![3, 200]);
        let img = build_range_image(&scan, &symmetric(16, 4));
        assert!(img.get(3, 0).is_some());
        // Ring id out of range falls back to elevation.
        assert!(img.get(8, 1).is_some());
    }

    #[test]
    fn max_ring_takes_farthest_per_column() {
        let scan = Scan::new(
            vec![
                Point3::new(3.0, 0.0, 0.0),
                Point3::new(20.0, 0.0, 20.0 * 5f64.to_radians().tan()),
                Point3::new(0.0, 4.0, 0.0),
            ],
            0.0,
        );
        let img = build_range_image(&scan, &symmetric(16, 4));
        assert_eq!(extract_max_ring(&img), vec![1, 2]);
    }

    #[test]
    fn uniform_column_has_no_bounds() {
        let pts: Vec<_> = (0..16)
            .map(|k| {
                let e = (-9.0 + k as f64 * 1.2f64).to_radians();
                Point3::new(10.0 * e.cos(), 0.0, 10.0 * e.sin())
            })
            .collect();
        let img = build_range_image(&Scan::new(pts, 0.0), &symmetric(16, 4));
        let (sup, inf) = extract_sup_inf(&img, 1.0, 1.0, 10, BoundSign::Absolute);
        assert!(sup.is_empty() && inf.is_empty());
    }

    #[test]
    fn jump_above_gives_sup() {
        let low = 0f64.to_radians();
        let high = 2f64.to_radians();
        let pts = vec![
            Point3::new(10.0 * low.cos(), 0.0, 10.0 * low.sin()),
            Point3::new(25.0 * high.cos(), 0.0, 25.0 * high.sin()),
        ];
        let img = build_range_image(&Scan::new(pts, 0.0), &symmetric(16, 4));
        let (sup, inf) = extract_sup_inf(&img, 1.0, 1.0, 10, BoundSign::Absolute);
        assert_eq!(sup.len(), 1);
        assert_eq!(sup[0].point, 0);
        assert_eq!(sup[0].source, 1);
        assert!((sup[0].bound - 25.0 * high.sin()).abs() < 1e-12);
        assert_eq!(inf.len(), 1);
        assert_eq!(inf[0].point, 1);

        // Under the literal convention only the nearer-neighbour case fires.
        let (sup, inf) = extract_sup_inf(&img, 1.0, 1.0, 10, BoundSign::Nearer);
        assert!(sup.is_empty());
        assert_eq!(inf.len(), 1);
    }
}
