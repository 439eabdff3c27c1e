use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monte Carlo settings.
///
/// With `adaptive` on, the step grows to `((d/(k σ(x)))², dt_max)` when the
/// state is at distance `d` from the nearest level where something happens
/// (atom bands, stopping-set edges, density support edges, deviation
/// thresholds). It never drops below `dt` near a band or below `level_dt`
/// near any other level. With it off every step is `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub x0: f64,
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    /// Local-time band half-width is `c_band·σ(q)·√dt`.
    #[serde(default = "default_c_band")]
    pub c_band: f64,
    #[serde(default)]
    pub antithetic: bool,
    /// Report the horizon truncation bias bound.
    #[serde(default = "yes")]
    pub tail_bound: bool,
    #[serde(default = "yes")]
    pub adaptive: bool,
    /// Smallest step near a barrier level (stopping-set edge, deviation
    /// threshold, exit boundary). Crossings are found exactly from the
    /// bridge range, so this only bounds the error in the crossing time.
    #[serde(default = "default_level_dt")]
    pub level_dt: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    /// `k` in the adaptive step rule.
    #[serde(default = "default_step_safety")]
    pub step_safety: f64,
    /// Largest concession hazard `λ Δ` allowed in one step on a density
    /// support.
    #[serde(default = "default_hazard_cap")]
    pub hazard_cap: f64,
}

fn default_c_band() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_level_dt() -> f64 {
    1e-3
}

fn default_dt_max() -> f64 {
    1.0
}

fn default_step_safety() -> f64 {
    5.0
}

fn default_hazard_cap() -> f64 {
    0.05
}

impl SimConfig {
    pub fn new(x0: f64, dt: f64, horizon: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            x0,
            dt,
            horizon,
            n_paths,
            seed,
            c_band: default_c_band(),
            antithetic: false,
            tail_bound: true,
            adaptive: true,
            level_dt: default_level_dt(),
            dt_max: default_dt_max(),
            step_safety: default_step_safety(),
            hazard_cap: default_hazard_cap(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return bad(format!("x0 must be a positive state, got {}", self.x0));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= 100.0 * self.dt) || !self.horizon.is_finite() {
            return bad(format!("horizon {} must be at least 100 dt", self.horizon));
        }
        if self.n_paths < 2 {
            return bad(format!("n_paths must be at least 2, got {}", self.n_paths));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return bad("antithetic sampling needs an even n_paths".into());
        }
        if !(self.c_band > 0.0) {
            return bad(format!("c_band must be positive, got {}", self.c_band));
        }
        if !(self.dt_max >= self.dt) {
            return bad(format!("dt_max {} is below dt {}", self.dt_max, self.dt));
        }
        if !(self.level_dt > 0.0) {
            return bad(format!("level_dt must be positive, got {}", self.level_dt));
        }
        if !(self.step_safety > 0.0) || !(self.hazard_cap > 0.0) {
            return bad("step_safety and hazard_cap must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_single_path() {
        assert!(SimConfig::new(1.0, 1e-3, 1.0, 1, 0).validate().is_err());
        assert!(SimConfig::new(1.0, 1e-3, 1.0, 2, 0).validate().is_ok());
    }

    #[test]
    fn rejects_short_horizon() {
        assert!(SimConfig::new(1.0, 1e-3, 0.05, 10, 0).validate().is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let c: SimConfig = serde_json::from_str(r#"{"x0":1,"dt":0.001,"horizon":1,"n_paths":4}"#).unwrap();
        assert_eq!(c.c_band, 1.0);
        assert!(c.adaptive && c.tail_bound && !c.antithetic);
        assert!(serde_json::from_str::<SimConfig>(r#"{"x0":1,"dt":0.001,"horizon":1,"n_paths":4,"bogus":1}"#).is_err());
    }
}
