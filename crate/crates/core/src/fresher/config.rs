use crate::error::{Error, Result};

/// How a vertical range jump between two range-image cells is measured
/// when searching for upper/lower occlusion bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundSign {
    /// `|I(i,j) - I(i±t,j)| > r`
    #[default]
    Absolute,
    /// `I(i,j) - I(i±t,j) > r`: the neighbour is nearer.
    Nearer,
    /// `I(i±t,j) - I(i,j) > r`: the neighbour is farther.
    Farther,
}

impl BoundSign {
    pub fn exceeds(self, here: f64, there: f64, r: f64) -> bool {
        match self {
            BoundSign::Absolute => (here - there).abs() > r,
            BoundSign::Nearer => here - there > r,
            BoundSign::Farther => there - here > r,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "absolute" => Some(Self::Absolute),
            "nearer" => Some(Self::Nearer),
            "farther" => Some(Self::Farther),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundSign::Absolute => "absolute",
            BoundSign::Nearer => "nearer",
            BoundSign::Farther => "farther",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeImageConfig {
    pub rows: usize,
    pub cols: usize,
    /// Upper vertical field-of-view bound, radians.
    pub fov_up: f64,
    /// Lower vertical field-of-view bound, radians.
    pub fov_down: f64,
}

impl Default for RangeImageConfig {
    fn default() -> Self {
        Self {
            rows: 64,
            cols: 1080,
            fov_up: 2.0f64.to_radians(),
            fov_down: (-24.8f64).to_radians(),
        }
    }
}

/// Thresholds of the front-end (ground estimation and scan-to-map removal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresherConfig {
    /// Column removal threshold on ratio1.
    pub delta1: f64,
    /// Region removal threshold on ratio2.
    pub delta2: f64,
    /// Upward range-jump threshold (m).
    pub r1: f64,
    /// Downward range-jump threshold (m).
    pub r2: f64,
    /// Ground margin around a fitted plane, in cube units.
    pub r_gro: f64,
    /// Rows searched above/below a cell for a range jump.
    pub max_search: usize,
    pub bound_sign: BoundSign,
    pub image: RangeImageConfig,
    /// Provisional ground reference above the lowest scan point of a column
    /// with no ground estimate yet (m).
    pub ground_bootstrap_margin: f64,
    /// Steepest fitted plane still accepted as ground, radians.
    pub ground_max_slope: f64,
    /// Minimum ratio of the middle to the smallest covariance eigenvalue of
    /// a ground fit.
    pub ground_min_conditioning: f64,
    /// Band denominators below this give ratio 1 (m). The default is just
    /// over one cube, so a map band of two adjacent cube layers (typically
    /// ground straddling a cube boundary) is too thin to be judged.
    pub eps_div: f64,
}

impl Default for FresherConfig {
    fn default() -> Self {
        Self {
            delta1: 0.2,
            delta2: 0.2,
            r1: 1.0,
            r2: 1.0,
            r_gro: 1.25,
            max_search: 10,
            bound_sign: BoundSign::Absolute,
            image: RangeImageConfig::default(),
            ground_bootstrap_margin: 0.3,
            ground_max_slope: 40f64.to_radians(),
            ground_min_conditioning: 4.0,
            eps_div: 0.15,
        }
    }
}

impl FresherConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("r1", self.r1),
            ("r2", self.r2),
            ("r_gro", self.r_gro),
            ("ground_bootstrap_margin", self.ground_bootstrap_margin),
            ("eps_div", self.eps_div),
            ("ground_min_conditioning", self.ground_min_conditioning),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if self.max_search == 0 {
            return Err(Error::config("max_search", "must be at least 1"));
        }
        if self.image.rows == 0 {
            return Err(Error::config("range_rows", "must be at least 1"));
        }
        if self.image.cols == 0 {
            return Err(Error::config("range_cols", "must be at least 1"));
        }
        if !(self.ground_max_slope > 0.0 && self.ground_max_slope < std::f64::consts::FRAC_PI_2) {
            return Err(Error::config("ground_max_slope_deg", "must be in (0, 90)"));
        }
        if !(self.image.fov_up > self.image.fov_down) {
            return Err(Error::config("fov_up_deg", "must exceed fov_down_deg"));
        }
        Ok(())
    }
}
