//! Flat `key = value` pipeline configuration.

use std::fs;
use std::path::{Path, PathBuf};

use crate::backend::BackendConfig;
use crate::error::{Error, Result};
use crate::fresher::{BoundSign, FresherConfig};
use crate::map::MapConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub map: MapConfig,
    pub fresher: FresherConfig,
    pub backend: BackendConfig,
    pub backend_enabled: bool,
    pub scans: Option<PathBuf>,
    pub poses: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub synthetic: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub seed: u64,
    /// Scan period used to timestamp frames (s).
    pub frame_period: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            map: MapConfig::default(),
            fresher: FresherConfig::default(),
            backend: BackendConfig::default(),
            backend_enabled: true,
            scans: None,
            poses: None,
            labels: None,
            synthetic: None,
            out: None,
            report: None,
            seed: 0,
            frame_period: 0.1,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "cube_size",
    "mask_bits",
    "table_size",
    "log_odds_hit",
    "log_odds_min",
    "log_odds_max",
    "occupied_threshold",
    "delta1",
    "delta2",
    "r1",
    "r2",
    "r_gro",
    "max_search",
    "bound_sign",
    "range_rows",
    "range_cols",
    "fov_up_deg",
    "fov_down_deg",
    "ground_bootstrap_margin",
    "ground_max_slope_deg",
    "ground_min_conditioning",
    "eps_div",
    "dist_keyframe",
    "time_keyframe",
    "info_delta",
    "dist_away",
    "queue_capacity",
    "max_per_step",
    "r_max",
    "backend_enabled",
    "scans",
    "poses",
    "labels",
    "synthetic",
    "out",
    "report",
    "seed",
    "frame_period",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got `{value}`"))),
    }
}

impl PipelineConfig {
    /// Set one key. Values are not cross-validated until [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "cube_size" => self.map.cube_size = num(key, v)?,
            "mask_bits" => self.map.mask_bits = num(key, v)?,
            "table_size" => self.map.table_size = num(key, v)?,
            "log_odds_hit" => self.map.log_odds_hit = num(key, v)?,
            "log_odds_min" => self.map.log_odds_min = num(key, v)?,
            "log_odds_max" => self.map.log_odds_max = num(key, v)?,
            "occupied_threshold" => self.map.occupied_threshold = num(key, v)?,
            "delta1" => self.fresher.delta1 = num(key, v)?,
            "delta2" => self.fresher.delta2 = num(key, v)?,
            "r1" => self.fresher.r1 = num(key, v)?,
            "r2" => self.fresher.r2 = num(key, v)?,
            "r_gro" => self.fresher.r_gro = num(key, v)?,
            "max_search" => self.fresher.max_search = num(key, v)?,
            "bound_sign" => {
                self.fresher.bound_sign = BoundSign::parse(v).ok_or_else(|| {
                    Error::config(key, format!("expected absolute, nearer or farther, got `{v}`"))
                })?
            }
            "range_rows" => self.fresher.image.rows = num(key, v)?,
            "range_cols" => self.fresher.image.cols = num(key, v)?,
            "fov_up_deg" => self.fresher.image.fov_up = num::<f64>(key, v)?.to_radians(),
            "fov_down_deg" => self.fresher.image.fov_down = num::<f64>(key, v)?.to_radians(),
            "ground_bootstrap_margin" => self.fresher.ground_bootstrap_margin = num(key, v)?,
            "ground_max_slope_deg" => self.fresher.ground_max_slope = num::<f64>(key, v)?.to_radians(),
            "ground_min_conditioning" => self.fresher.ground_min_conditioning = num(key, v)?,
            "eps_div" => self.fresher.eps_div = num(key, v)?,
            "dist_keyframe" => self.backend.dist_keyframe = num(key, v)?,
            "time_keyframe" => self.backend.time_keyframe = num(key, v)?,
            "info_delta" => self.backend.info_delta = num(key, v)?,
            "dist_away" => self.backend.dist_away = num(key, v)?,
            "queue_capacity" => self.backend.queue_capacity = num(key, v)?,
            "max_per_step" => self.backend.max_per_step = num(key, v)?,
            "r_max" => self.backend.r_max = num(key, v)?,
            "backend_enabled" => self.backend_enabled = boolean(key, v)?,
            "scans" => self.scans = Some(v.into()),
            "poses" => self.poses = Some(v.into()),
            "labels" => self.labels = Some(v.into()),
            "synthetic" => self.synthetic = Some(v.into()),
            "out" => self.out = Some(v.into()),
            "report" => self.report = Some(v.into()),
            "seed" => self.seed = num(key, v)?,
            "frame_period" => self.frame_period = num(key, v)?,
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Apply `key = value` lines on top of the current values. `#` starts a
    /// comment; blank lines are ignored.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    format!("line {}", n + 1),
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.map;
        if !(m.cube_size.is_finite() && m.cube_size > 0.0) {
            return Err(Error::config("cube_size", format!("must be positive, got {}", m.cube_size)));
        }
        if !(1..=10).contains(&m.mask_bits) {
            return Err(Error::config("mask_bits", format!("must be in 1..=10, got {}", m.mask_bits)));
        }
        if m.table_size == 0 {
            return Err(Error::config("table_size", "must be at least 1"));
        }
        if !(m.log_odds_hit.is_finite() && m.log_odds_hit > 0.0) {
            return Err(Error::config("log_odds_hit", "must be positive"));
        }
        if !(m.log_odds_min < m.occupied_threshold && m.occupied_threshold < m.log_odds_max) {
            return Err(Error::config(
                "occupied_threshold",
                "must lie strictly between log_odds_min and log_odds_max",
            ));
        }
        m.validate()
            .map_err(|e| Error::config("map", e.to_string()))?;
        self.fresher.validate()?;
        self.backend.validate()?;
        if !(self.frame_period.is_finite() && self.frame_period > 0.0) {
            return Err(Error::config("frame_period", "must be positive"));
        }
        Ok(())
    }

    /// Serialise back to the `key = value` format (paths only when set).
    pub fn to_text(&self) -> String {
        let f = &self.fresher;
        let b = &self.backend;
        let m = &self.map;
        let mut lines = vec![
            format!("cube_size = {}", m.cube_size),
            format!("mask_bits = {}", m.mask_bits),
            format!("table_size = {}", m.table_size),
            format!("log_odds_hit = {}", m.log_odds_hit),
            format!("log_odds_min = {}", m.log_odds_min),
            format!("log_odds_max = {}", m.log_odds_max),
            format!("occupied_threshold = {}", m.occupied_threshold),
            format!("delta1 = {}", f.delta1),
            format!("delta2 = {}", f.delta2),
            format!("r1 = {}", f.r1),
            format!("r2 = {}", f.r2),
            format!("r_gro = {}", f.r_gro),
            format!("max_search = {}", f.max_search),
            format!("bound_sign = {}", f.bound_sign.as_str()),
            format!("range_rows = {}", f.image.rows),
            format!("range_cols = {}", f.image.cols),
            format!("fov_up_deg = {}", f.image.fov_up.to_degrees()),
            format!("fov_down_deg = {}", f.image.fov_down.to_degrees()),
            format!("ground_bootstrap_margin = {}", f.ground_bootstrap_margin),
            format!("ground_max_slope_deg = {}", f.ground_max_slope.to_degrees()),
            format!("ground_min_conditioning = {}", f.ground_min_conditioning),
            format!("eps_div = {}", f.eps_div),
            format!("dist_keyframe = {}", b.dist_keyframe),
            format!("time_keyframe = {}", b.time_keyframe),
            format!("info_delta = {}", b.info_delta),
            format!("dist_away = {}", b.dist_away),
            format!("queue_capacity = {}", b.queue_capacity),
            format!("max_per_step = {}", b.max_per_step),
            format!("r_max = {}", b.r_max),
            format!("backend_enabled = {}", self.backend_enabled),
            format!("seed = {}", self.seed),
            format!("frame_period = {}", self.frame_period),
        ];
        for (key, p) in [
            ("scans", &self.scans),
            ("poses", &self.poses),
            ("labels", &self.labels),
            ("synthetic", &self.synthetic),
            ("out", &self.out),
            ("report", &self.report),
        ] {
            if let Some(p) = p {
                lines.push(format!("{key} = {}", p.display()));
            }
        }
        lines.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_overrides() {
        let cfg = PipelineConfig::parse("# header\ndelta1 = 0.3  # tighter\n\nbackend_enabled=false\n").unwrap();
        assert_eq!(cfg.fresher.delta1, 0.3);
        assert!(!cfg.backend_enabled);
        assert_eq!(cfg.fresher.delta2, 0.2);
    }

    #[test]
    fn errors_name_the_key() {
        let e = PipelineConfig::parse("delta9 = 1").unwrap_err().to_string();
        assert!(e.contains("delta9"), "{e}");
        let e = PipelineConfig::parse("r1 = -1").unwrap_err().to_string();
        assert!(e.contains("r1"), "{e}");
        let e = PipelineConfig::parse("cube_size = abc").unwrap_err().to_string();
        assert!(e.contains("cube_size"), "{e}");
        assert!(PipelineConfig::parse("just words").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.set("bound_sign", "farther").unwrap();
        cfg.set("out", "/tmp/m.ply").unwrap();
        cfg.set("mask_bits", "4").unwrap();
        let back = PipelineConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back.fresher.bound_sign, BoundSign::Farther);
        assert_eq!(back.out, cfg.out);
        assert_eq!(back.map.mask_bits, 4);
        assert!((back.fresher.image.fov_down - cfg.fresher.image.fov_down).abs() < 1e-12);
    }

    #[test]
    fn every_listed_key_is_accepted() {
        let text = PipelineConfig::default().to_text();
        let mut seen: Vec<&str> = text.lines().map(|l| l.split(" = ").next().unwrap()).collect();
        seen.extend(["scans", "poses", "labels", "synthetic", "out", "report"]);
        for k in CONFIG_KEYS {
            assert!(seen.contains(k), "{k}");
        }
    }
}
