//! Log-odds arithmetic and the three-way occupancy classification.

use serde::{Deserialize, Serialize};

use crate::config::MapConfig;
use crate::error::ConfigError;

/// Occupancy classification. Ordered `Free < Unknown < Occ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OccState {
    Free,
    Unknown,
    Occ,
}

/// `ln(p / (1 - p))`, defined on the open interval (0, 1).
pub fn logit_of(p: f64) -> Result<f64, ConfigError> {
    if p > 0.0 && p < 1.0 {
        Ok((p / (1.0 - p)).ln())
    } else {
        Err(ConfigError::ProbabilityOutOfRange(p))
    }
}

/// Inverse of [`logit_of`].
pub fn prob_of(l: f64) -> f64 {
    if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    }
}

/// Thresholds are inclusive on both sides.
#[inline]
pub fn state_of(l: f64, cfg: &MapConfig) -> OccState {
    if l >= cfg.l_occ_th {
        OccState::Occ
    } else if l <= cfg.l_free_th {
        OccState::Free
    } else {
        OccState::Unknown
    }
}
