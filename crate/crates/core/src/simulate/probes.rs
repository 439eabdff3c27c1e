use serde::Serialize;

use crate::equilibrium::{top_stopping_state, EquilibriumProfile, MarkovStrategy, Player};
use crate::error::{Error, Result};
use crate::payoffs::PlayerPayoffs;
use crate::simulate::engine::{path_rng, require_positive, Clock, Noise, Walker};
use crate::simulate::stats::linear_fit;
use rayon::prelude::*;

/// Counts of one-step market-value increments with opposite signs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComovementReport {
    /// Open interval on which the values are expected to move against each
    /// other.
    pub region: (f64, f64),
    /// True when `x0` lies outside the region, in which case nothing was
    /// simulated.
    pub out_of_region: bool,
    pub steps: u64,
    pub opposite: u64,
}

impl ComovementReport {
    pub fn opposite_fraction(&self) -> f64 {
        if self.steps == 0 {
            f64::NAN
        } else {
            self.opposite as f64 / self.steps as f64
        }
    }
}

/// Region between the top of the stopping region and the highest atom,
/// where one player's continuation value rises as the other's falls.
pub fn comovement_region(profile: &EquilibriumProfile) -> Result<(f64, f64)> {
    let lo = top_stopping_state(&profile.strategies)
        .map(|(s, _)| s)
        .ok_or_else(|| Error::InvalidConfig("profile has no stopping region".into()))?;
    let hi = profile
        .strategies
        .iter()
        .flat_map(|s| s.atoms().iter().map(|a| a.q))
        .reduce(f64::max)
        .ok_or_else(|| Error::InvalidConfig("profile has no atoms".into()))?;
    if !(hi > lo) {
        return Err(Error::InvalidConfig(format!("empty region ({lo}, {hi})")));
    }
    Ok((lo, hi))
}

/// Follows paths with fixed step `dt` from `x0` while they stay inside the
/// comovement region and counts steps on which the market values
/// `Fⁱ = wⁱ + E` change in opposite directions.
pub fn comovement_probe(
    profile: &EquilibriumProfile,
    x0: f64,
    dt: f64,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<ComovementReport> {
    require_positive(dt, "dt")?;
    let region = comovement_region(profile)?;
    if !(x0 > region.0 && x0 < region.1) {
        return Ok(ComovementReport {
            region,
            out_of_region: true,
            steps: 0,
            opposite: 0,
        });
    }
    let walker = Walker::fixed(profile.params.model(), dt);
    let market = |x: f64| Player::BOTH.map(|p| profile.market_value(p, x));
    let counts: Vec<(u64, u64)> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut noise = Noise::new(path_rng(seed, i as u64), false);
            let mut state = walker.start(x0);
            let mut v = market(x0);
            let (mut steps, mut opposite) = (0, 0);
            while state.t < horizon {
                let x1 = walker.advance(&mut state, 0.0, f64::INFINITY, &mut noise).x1;
                if !(x1 > region.0 && x1 < region.1) {
                    break;
                }
                let v1 = market(x1);
                steps += 1;
                if (v1[0] - v[0]) * (v1[1] - v[1]) < 0.0 {
                    opposite += 1;
                }
                v = v1;
            }
            (steps, opposite)
        })
        .collect();
    Ok(ComovementReport {
        region,
        out_of_region: false,
        steps: counts.iter().map(|c| c.0).sum(),
        opposite: counts.iter().map(|c| c.1).sum(),
    })
}

/// Empirical probability of having conceded by each time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcessionCurve {
    pub times: Vec<f64>,
    pub probability: Vec<f64>,
    pub n_paths: usize,
    /// Slope of `ln P` against `ln t`.
    pub loglog_slope: f64,
}

/// Runs only `strategy`'s concession clock from `x0` with fixed step `dt`
/// and records when it first rings.
#[allow(clippy::too_many_arguments)]
pub fn concession_probe(
    own: &PlayerPayoffs,
    strategy: &MarkovStrategy,
    opponent: &PlayerPayoffs,
    x0: f64,
    dt: f64,
    c_band: f64,
    times: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<ConcessionCurve> {
    require_positive(dt, "dt")?;
    require_positive(x0, "x0")?;
    if times.is_empty() || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidConfig("probe times must be positive".into()));
    }
    let model = *own.model();
    let clock = Clock::new(&model, strategy, opponent, dt, c_band);
    let walker = Walker::fixed(&model, dt);
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let stops: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut noise = Noise::new(path_rng(seed, i as u64), false);
            let budget = noise.exp1();
            let mut acc = 0.0;
            let mut state = walker.start(x0);
            while state.t < t_max {
                let t = state.t;
                let step = walker.advance(&mut state, 0.0, f64::INFINITY, &mut noise);
                let inc = clock.hazard(step.x0, step.x1, dt);
                if acc + inc >= budget {
                    return t + (budget - acc) / inc * dt;
                }
                acc += inc;
            }
            f64::INFINITY
        })
        .collect();
    let probability: Vec<f64> = times
        .iter()
        .map(|&t| stops.iter().filter(|&&s| s <= t).count() as f64 / n_paths as f64)
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&probability)
        .filter(|(_, &p)| p > 0.0)
        .map(|(t, p)| (t.ln(), p.ln()))
        .unzip();
    let loglog_slope = if lx.len() >= 2 {
        linear_fit(&lx, &ly).0
    } else {
        f64::NAN
    };
    Ok(ConcessionCurve {
        times: times.to_vec(),
        probability,
        n_paths,
        loglog_slope,
    })
}
