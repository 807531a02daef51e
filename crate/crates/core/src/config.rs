//! Map parameters and live adjustment.

use crate::error::ConfigError;
use crate::key::Point3;
use crate::logodds::logit_of;

/// Mapping parameters. Log-odds values are stored directly; use
/// [`MapConfig::from_probabilities`] to build them from probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MapConfig {
    /// Voxel edge length, meters.
    pub res: f64,
    /// World position of the corner of voxel (0, 0, 0).
    pub origin: Point3,
    /// Occupancy probability credited to a voxel when it enters the occupancy map.
    pub p_init: f64,
    pub l_hit: f64,
    pub l_miss: f64,
    pub l_min: f64,
    pub l_max: f64,
    pub l_occ_th: f64,
    pub l_free_th: f64,
    /// Points farther than this from the sensor are discarded. May be infinite.
    pub d_in: f64,
    /// Only voxels closer than this to the sensor are (de)inflated. May be infinite.
    pub d_inf: f64,
    /// Obstacle inflation radius, meters.
    pub r_obs: f64,
    /// Maximum number of occupied voxels kept in the history buffer; `None` is unbounded.
    pub n_lim: Option<usize>,
    /// Share ring capacity, in frames.
    pub ring_capacity: usize,
}

/// Probabilities used by [`MapConfig::default`].
pub const DEFAULT_P_INIT: f64 = 0.80;
pub const DEFAULT_P_HIT: f64 = 0.65;
pub const DEFAULT_P_MISS: f64 = 0.35;
pub const DEFAULT_P_MIN: f64 = 0.12;
pub const DEFAULT_P_MAX: f64 = 0.97;
pub const DEFAULT_P_OCC: f64 = 0.80;
pub const DEFAULT_P_FREE: f64 = 0.30;
pub const DEFAULT_RING_CAPACITY: usize = 50;

impl Default for MapConfig {
    fn default() -> Self {
        Self::from_probabilities(
            DEFAULT_P_HIT,
            DEFAULT_P_MISS,
            DEFAULT_P_MIN,
            DEFAULT_P_MAX,
            DEFAULT_P_OCC,
            DEFAULT_P_FREE,
        )
        .expect("default probabilities are valid")
    }
}

impl MapConfig {
    /// Defaults for everything except the sensor-model probabilities.
    pub fn from_probabilities(
        p_hit: f64,
        p_miss: f64,
        p_min: f64,
        p_max: f64,
        p_occ: f64,
        p_free: f64,
    ) -> Result<Self, ConfigError> {
        let cfg = Self {
            res: 0.1,
            origin: [0.0; 3],
            p_init: DEFAULT_P_INIT,
            l_hit: logit_of(p_hit)?,
            l_miss: logit_of(p_miss)?,
            l_min: logit_of(p_min)?,
            l_max: logit_of(p_max)?,
            l_occ_th: logit_of(p_occ)?,
            l_free_th: logit_of(p_free)?,
            d_in: f64::INFINITY,
            d_inf: f64::INFINITY,
            r_obs: 0.2,
            n_lim: None,
            ring_capacity: DEFAULT_RING_CAPACITY,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.res.is_finite() && self.res > 0.0) {
            return Err(ConfigError::Invalid(format!("res must be > 0, got {}", self.res)));
        }
        if !self.origin.iter().all(|c| c.is_finite()) {
            return Err(ConfigError::Invalid("origin must be finite".into()));
        }
        logit_of(self.p_init)?;
        if !(self.l_hit > 0.0) {
            return Err(ConfigError::Invalid(format!("l_hit must be > 0, got {}", self.l_hit)));
        }
        if !(self.l_miss < 0.0) {
            return Err(ConfigError::Invalid(format!("l_miss must be < 0, got {}", self.l_miss)));
        }
        let ordered = self.l_min <= self.l_free_th
            && self.l_free_th < self.l_occ_th
            && self.l_occ_th <= self.l_max;
        if !ordered || !self.l_min.is_finite() || !self.l_max.is_finite() {
            return Err(ConfigError::ThresholdOrder {
                l_min: self.l_min,
                l_free_th: self.l_free_th,
                l_occ_th: self.l_occ_th,
                l_max: self.l_max,
            });
        }
        if self.d_in.is_nan() || self.d_in < 0.0 {
            return Err(ConfigError::Invalid(format!("d_in must be >= 0, got {}", self.d_in)));
        }
        if self.d_inf.is_nan() || self.d_inf < 0.0 {
            return Err(ConfigError::Invalid(format!("d_inf must be >= 0, got {}", self.d_inf)));
        }
        if !(self.r_obs.is_finite() && self.r_obs >= 0.0) {
            return Err(ConfigError::Invalid(format!("r_obs must be >= 0, got {}", self.r_obs)));
        }
        if self.n_lim == Some(0) {
            return Err(ConfigError::Invalid("n_lim must be >= 1".into()));
        }
        if self.ring_capacity == 0 {
            return Err(ConfigError::Invalid("ring_capacity must be >= 1".into()));
        }
        Ok(())
    }

    pub fn logit_init(&self) -> f64 {
        logit_of(self.p_init).expect("p_init validated")
    }

    /// Applies `update` to a copy of `self`, checking invariants.
    pub fn merged(&self, update: &ParamUpdate) -> Result<MapConfig, ConfigError> {
        if let Some(res) = update.res {
            if res != self.res {
                return Err(ConfigError::Immutable("res"));
            }
        }
        if let Some(origin) = update.origin {
            if origin != self.origin {
                return Err(ConfigError::Immutable("origin"));
            }
        }
        let mut next = self.clone();
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = update.$field { next.$field = v; })*
            };
        }
        take!(p_init, l_hit, l_miss, l_min, l_max, l_occ_th, l_free_th, d_in, d_inf, r_obs, n_lim, ring_capacity);
        next.validate()?;
        Ok(next)
    }
}

/// Partial parameter change. `res` and `origin` may be given but must equal
/// the current values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamUpdate {
    pub res: Option<f64>,
    pub origin: Option<Point3>,
    pub p_init: Option<f64>,
    pub l_hit: Option<f64>,
    pub l_miss: Option<f64>,
    pub l_min: Option<f64>,
    pub l_max: Option<f64>,
    pub l_occ_th: Option<f64>,
    pub l_free_th: Option<f64>,
    pub d_in: Option<f64>,
    pub d_inf: Option<f64>,
    pub r_obs: Option<f64>,
    pub n_lim: Option<Option<usize>>,
    pub ring_capacity: Option<usize>,
}

impl ParamUpdate {
    pub fn is_empty(&self) -> bool {
        *self == ParamUpdate::default()
    }

    /// Sets one parameter from its textual name and value.
    ///
    /// Probabilities (`p_hit`, `p_miss`, `p_min`, `p_max`, `p_occ`, `p_free`)
    /// are accepted as aliases and converted to log-odds. Distances accept
    /// `inf`; `n_lim` accepts `inf` or `none` for unbounded.
    pub fn set(&mut self, name: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::Invalid(format!("cannot parse {name} = {value:?}"));
        let num = |v: &str| -> Result<f64, ConfigError> {
            match v.trim() {
                "inf" | "Inf" | "infinity" => Ok(f64::INFINITY),
                s => s.parse::<f64>().map_err(|_| bad()),
            }
        };
        match name {
            "res" => self.res = Some(num(value)?),
            "origin" => {
                let parts: Vec<f64> = value
                    .split([',', ' '])
                    .filter(|s| !s.is_empty())
                    .map(num)
                    .collect::<Result<_, _>>()?;
                let arr: [f64; 3] = parts.try_into().map_err(|_| bad())?;
                self.origin = Some(arr);
            }
            "p_init" => self.p_init = Some(num(value)?),
            "l_hit" => self.l_hit = Some(num(value)?),
            "l_miss" => self.l_miss = Some(num(value)?),
            "l_min" => self.l_min = Some(num(value)?),
            "l_max" => self.l_max = Some(num(value)?),
            "l_occ_th" | "l_occ" => self.l_occ_th = Some(num(value)?),
            "l_free_th" | "l_free" => self.l_free_th = Some(num(value)?),
            "p_hit" => self.l_hit = Some(logit_of(num(value)?)?),
            "p_miss" => self.l_miss = Some(logit_of(num(value)?)?),
            "p_min" => self.l_min = Some(logit_of(num(value)?)?),
            "p_max" => self.l_max = Some(logit_of(num(value)?)?),
            "p_occ" => self.l_occ_th = Some(logit_of(num(value)?)?),
            "p_free" => self.l_free_th = Some(logit_of(num(value)?)?),
            "d_in" => self.d_in = Some(num(value)?),
            "d_inf" => self.d_inf = Some(num(value)?),
            "r_obs" => self.r_obs = Some(num(value)?),
            "n_lim" => {
                self.n_lim = Some(match value.trim() {
                    "inf" | "Inf" | "none" => None,
                    s => Some(s.parse::<usize>().map_err(|_| bad())?),
                })
            }
            "ring_capacity" => {
                self.ring_capacity = Some(value.trim().parse::<usize>().map_err(|_| bad())?)
            }
            _ => return Err(ConfigError::UnknownParameter(name.to_string())),
        }
        Ok(())
    }
}
