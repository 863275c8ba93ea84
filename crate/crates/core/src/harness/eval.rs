//! Preservation / rejection rates against labelled ground truth.

use std::collections::HashMap;

use nalgebra::Point3;
use serde::Serialize;

use crate::error::Result;
use crate::map::{global_index, FixedState, GlobalIndex, RhMap};

/// Harmonic mean of the preservation and rejection rates.
pub fn f1_score(pr: f64, rr: f64) -> f64 {
    if pr + rr == 0.0 {
        0.0
    } else {
        2.0 * pr * rr / (pr + rr)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EvalResult {
    pub pr: Option<f64>,
    pub rr: Option<f64>,
    pub f1: Option<f64>,
    pub n_sta: u64,
    pub n_dyn: u64,
    pub n_tn: u64,
    pub n_tp: u64,
    pub mean_ms: Option<f64>,
    pub hz: Option<f64>,
}

impl EvalResult {
    pub fn from_counts(n_sta: u64, n_dyn: u64, n_tn: u64, n_tp: u64) -> Self {
        let pr = (n_sta > 0).then(|| n_tn as f64 / n_sta as f64);
        let rr = (n_dyn > 0).then(|| 1.0 - n_tp as f64 / n_dyn as f64);
        let f1 = pr.zip(rr).map(|(p, r)| f1_score(p, r));
        Self {
            pr,
            rr,
            f1,
            n_sta,
            n_dyn,
            n_tn,
            n_tp,
            mean_ms: None,
            hz: None,
        }
    }

    pub fn with_timing(mut self, t: Option<TimingReport>) -> Self {
        self.mean_ms = t.map(|t| t.mean_ms);
        self.hz = t.map(|t| t.hz);
        self
    }
}

/// Ground-truth points folded to map cubes: per cube, how many static and
/// dynamic points fell into it. Evaluation only depends on the cube of each
/// point, so this keeps memory bounded on long sequences.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    cube_size: f64,
    cubes: HashMap<GlobalIndex, [u64; 2], FixedState>,
}

impl GroundTruth {
    pub fn new(cube_size: f64) -> Self {
        Self {
            cube_size,
            cubes: HashMap::default(),
        }
    }

    pub fn cube_size(&self) -> f64 {
        self.cube_size
    }

    pub fn add(&mut self, p: &Point3<f64>, dynamic: bool) -> Result<()> {
        let i = global_index(p, self.cube_size)?;
        self.cubes.entry(i).or_default()[usize::from(dynamic)] += 1;
        Ok(())
    }

    pub fn extend(&mut self, points: &[Point3<f64>], dynamic: &[bool]) -> Result<()> {
        for (p, &d) in points.iter().zip(dynamic) {
            self.add(p, d)?;
        }
        Ok(())
    }

    /// Number of distinct cubes touched.
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn cubes(&self) -> impl Iterator<Item = (GlobalIndex, u64, u64)> + '_ {
        self.cubes.iter().map(|(i, c)| (*i, c[0], c[1]))
    }

    /// Score with an arbitrary occupancy predicate.
    pub fn evaluate_with(&self, occupied: impl Fn(GlobalIndex) -> bool) -> EvalResult {
        let (mut sta, mut dyn_, mut tn, mut tp) = (0, 0, 0, 0);
        for (i, [s, d]) in &self.cubes {
            sta += s;
            dyn_ += d;
            if occupied(*i) {
                tn += s;
                tp += d;
            }
        }
        EvalResult::from_counts(sta, dyn_, tn, tp)
    }

    /// Dynamic-labelled cubes still occupied in `map`.
    pub fn dynamic_residue(&self, map: &RhMap) -> usize {
        self.cubes
            .iter()
            .filter(|(i, c)| c[1] > 0 && map.is_occupied(**i))
            .count()
    }
}

/// A static point is preserved if its cube is occupied in the final map; a
/// dynamic point is rejected if its cube is not.
pub fn evaluate(map: &RhMap, truth: &GroundTruth) -> EvalResult {
    truth.evaluate_with(|i| map.is_occupied(i))
}

/// Per-point evaluation without folding, for small clouds and tests.
pub fn evaluate_points(map: &RhMap, points: &[Point3<f64>], dynamic: &[bool]) -> Result<EvalResult> {
    let (mut sta, mut dyn_, mut tn, mut tp) = (0, 0, 0, 0);
    for (p, &d) in points.iter().zip(dynamic) {
        let occ = map.is_occupied(global_index(p, map.config().cube_size)?);
        if d {
            dyn_ += 1;
            tp += u64::from(occ);
        } else {
            sta += 1;
            tn += u64::from(occ);
        }
    }
    Ok(EvalResult::from_counts(sta, dyn_, tn, tp))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingReport {
    pub frames: usize,
    pub mean_ms: f64,
    pub hz: f64,
}

/// Mean frame time and the frequency it implies; `None` for no frames.
pub fn timing_report(frame_ms: &[f64]) -> Option<TimingReport> {
    if frame_ms.is_empty() {
        return None;
    }
    let mean_ms = frame_ms.iter().sum::<f64>() / frame_ms.len() as f64;
    Some(TimingReport {
        frames: frame_ms.len(),
        mean_ms,
        hz: if mean_ms > 0.0 { 1e3 / mean_ms } else { f64::INFINITY },
    })
}
