use std::path::{Path, PathBuf};

use attrition::equilibrium::GridSpec;
use attrition::simulate::SimConfig;
use attrition::sweep::SweepGrid;
use attrition::{DuopolySpec, ModelSpec, ShootingOptions};
use serde::Deserialize;

use crate::{io_at, CliError};

/// Everything a command reads besides its input files. Only the block of
/// the command being run is required.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSpec>,
    pub duopoly: Option<DuopolySpec>,
    pub solve: Option<SolveBlock>,
    pub verify: Option<VerifyBlock>,
    pub simulate: Option<SimulateBlock>,
    pub curves: Option<CurvesBlock>,
    pub sweep: Option<SweepGrid>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    /// `pure`, `stubborn`, `symmetric`, `singular` or `alternating:n`.
    pub kind: String,
    #[serde(default = "yes")]
    pub refine_trembling_hand: bool,
    #[serde(default)]
    pub shooting: Option<ShootingOptions>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    pub profile: PathBuf,
    #[serde(default)]
    pub grid: GridSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub profile: PathBuf,
    pub sim: SimConfig,
    /// Starting states; defaults to `sim.x0`.
    #[serde(default)]
    pub starts: Vec<f64>,
    /// Deviation thresholds for best-reply sweeps. No sweep when empty.
    #[serde(default)]
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesBlock {
    pub profile: PathBuf,
    pub grid: XGrid,
    /// Relative slope jump above which a breakpoint is reported as a kink.
    #[serde(default = "default_kink_tol")]
    pub kink_tolerance: f64,
}

/// `points` log-spaced states on `[lo, hi]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

fn yes() -> bool {
    true
}

fn default_kink_tol() -> f64 {
    1e-9
}

impl RunConfig {
    /// Reads the config and resolves input paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(io_at(path))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(v) = cfg.verify.as_mut() {
            resolve(&mut v.profile);
        }
        if let Some(s) = cfg.simulate.as_mut() {
            resolve(&mut s.profile);
        }
        if let Some(c) = cfg.curves.as_mut() {
            resolve(&mut c.profile);
        }
        Ok(cfg)
    }

    pub fn block<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        block
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("config has no \"{name}\" block")))
    }
}

impl XGrid {
    pub fn states(&self) -> Result<Vec<f64>, CliError> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.hi.is_finite() && self.points >= 2) {
            return Err(CliError::Config(format!(
                "grid needs 0 < lo < hi and at least 2 points, got {self:?}"
            )));
        }
        Ok(attrition::payoffs::log_grid(self.lo, self.hi, self.points))
    }
}
