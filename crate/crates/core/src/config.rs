//! Run configuration shared by the command line and the verification suites.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::geometry::BoundaryCurve;

pub const DEFAULT_N: usize = 256;
pub const DEFAULT_GRID: usize = 301;
pub const DEFAULT_COLLAR_FACTOR: f64 = 0.02;
pub const DEFAULT_C: f64 = 0.1;
pub const MAX_N: usize = 512;
pub const MAX_GRID: usize = 501;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub domain: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub grid: usize,
    /// Absolute collar width; `None` means `0.02 × diameter`.
    pub collar: Option<f64>,
    pub c: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config { domain: "disk".into(), n: DEFAULT_N, grid: DEFAULT_GRID, collar: None, c: DEFAULT_C }
    }
}

/// Checks `N` and names the violated constraint.
pub fn validate_n(n: usize) -> Result<()> {
    if n % 2 != 0 || n < 32 {
        return Err(SteklovError::InvalidConfig(format!("N must be even and ≥ 32 (got {n})")));
    }
    if n > MAX_N {
        return Err(SteklovError::InvalidConfig(format!("N must be ≤ {MAX_N} (got {n})")));
    }
    Ok(())
}

impl Config {
    pub fn validate(&self) -> Result<BoundaryCurve> {
        let curve = crate::geometry::curve_from_spec(&self.domain)?;
        validate_n(self.n)?;
        if self.grid < 3 || self.grid > MAX_GRID {
            return Err(SteklovError::InvalidConfig(format!(
                "grid resolution must lie in [3, {MAX_GRID}] (got {})",
                self.grid
            )));
        }
        if let Some(d) = self.collar {
            if !(d > 0.0) || d >= 0.25 * curve.diameter() {
                return Err(SteklovError::InvalidConfig(format!(
                    "collar must lie in (0, diameter/4) (got {d})"
                )));
            }
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(SteklovError::InvalidConfig(format!("c must be positive (got {})", self.c)));
        }
        Ok(curve)
    }

    pub fn collar_for(&self, curve: &BoundaryCurve) -> f64 {
        self.collar.unwrap_or(DEFAULT_COLLAR_FACTOR * curve.diameter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_ranges() {
        let c = Config::default();
        let curve = c.validate().unwrap();
        assert!((c.collar_for(&curve) - 0.04).abs() < 1e-12);
        assert!(validate_n(17).unwrap_err().to_string().contains("N must be even and ≥ 32"));
        assert!(validate_n(1024).is_err());
        assert!(Config { grid: 1001, ..Config::default() }.validate().is_err());
        assert!(Config { domain: "square".into(), ..Config::default() }.validate().is_err());
        assert!(Config { c: 0.0, ..Config::default() }.validate().is_err());
    }
}
