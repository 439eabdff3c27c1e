use serde::Serialize;

use crate::equilibrium::{MarkovStrategy, Player};
use crate::error::{Error, Result};
use crate::payoffs::DuopolyParams;
use crate::simulate::engine::{
    cause_stats, run_paths, summarize, truncation_bound, Clock, Event, Levels, StopCause, Walker,
};
use crate::simulate::stats::compensated_sum;
use crate::simulate::{CauseStat, SimConfig};

/// Value of exiting on first entry into `(0, y]` against a fixed rival.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationPoint {
    pub threshold: f64,
    pub mean: f64,
    pub se: f64,
    pub truncation_bias_bound: Option<f64>,
    pub causes: Vec<CauseStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationSweep {
    pub player: u8,
    pub x0: f64,
    pub n_paths: usize,
    pub points: Vec<DeviationPoint>,
}

impl DeviationSweep {
    /// The best threshold found and its estimated value.
    pub fn best(&self) -> Option<&DeviationPoint> {
        self.points.iter().max_by(|a, b| a.mean.total_cmp(&b.mean))
    }
}

/// Estimates, on common random numbers, the payoff to `player` of every
/// threshold strategy in `thresholds` while the rival plays `opponent`.
///
/// A threshold of 0 means never exiting.
pub fn best_reply_sweep(
    params: &DuopolyParams,
    player: Player,
    opponent: &MarkovStrategy,
    thresholds: &[f64],
    config: &SimConfig,
) -> Result<DeviationSweep> {
    config.validate()?;
    if thresholds.is_empty() || thresholds.iter().any(|&y| !(y >= 0.0 && y.is_finite())) {
        return Err(Error::InvalidConfig(
            "thresholds must be non-empty and non-negative".into(),
        ));
    }
    let model = *params.model();
    let own = params.payoffs(player);
    let clock = Clock::new(&model, opponent, &own, config.dt, config.c_band);
    let mut levels = Levels::default();
    clock.add_levels(&mut levels);
    for &y in thresholds {
        levels.add_point(y);
    }
    let log_thresholds: Vec<f64> = thresholds.iter().map(|y| y.ln()).collect();
    let walker = Walker::new(&model, config, levels);
    let r = model.r();
    let k = thresholds.len();

    // Per path: discounted payoff and cause for each threshold, plus the
    // truncation bound if the path reached the horizon unresolved.
    let paths = run_paths(config, |noise| {
        let mut value = vec![0.0; k];
        let mut cause = vec![StopCause::Horizon; k];
        let mut open: Vec<usize> = Vec::with_capacity(k);
        let x0 = config.x0;
        let opp_now = clock.in_set(x0);
        for (i, &y) in thresholds.iter().enumerate() {
            if x0 <= y {
                value[i] = own.exit(x0);
                cause[i] = StopCause::OwnSet;
            } else if opp_now {
                value[i] = own.follower(x0);
                cause[i] = StopCause::OppSet;
            } else {
                open.push(i);
            }
        }
        let budget = noise.exp1();
        let mut acc = 0.0;
        let mut state = walker.start(x0);
        while !open.is_empty() && state.t < config.horizon {
            let t = state.t;
            let rate = clock.rate(state.x);
            let step = walker.advance(&mut state, rate, config.horizon - t, noise);
            let ev = clock.step(&mut acc, budget, &step);
            let (x, x1, h, lo) = (step.x0, step.x1, step.h, step.range.0);
            match ev {
                Some(Event::Clock(f)) => {
                    let s = x.powf(1.0 - f) * x1.powf(f);
                    let v = (-r * (t + f * h)).exp() * own.follower(s);
                    for &i in &open {
                        value[i] = v;
                        cause[i] = StopCause::OppAtom;
                    }
                    open.clear();
                }
                Some(Event::Set(level)) => {
                    let disc = (-r * (t + h)).exp();
                    for &i in &open {
                        let y = thresholds[i];
                        // Whichever level the path reaches first wins; equal
                        // levels tie and both exit.
                        if lo <= log_thresholds[i] && y >= level {
                            value[i] = disc * own.exit(y);
                            cause[i] = StopCause::OwnSet;
                        } else {
                            value[i] = disc * own.follower(level);
                            cause[i] = StopCause::OppSet;
                        }
                    }
                    open.clear();
                }
                None => {
                    let disc = (-r * (t + h)).exp();
                    open.retain(|&i| {
                        let y = thresholds[i];
                        if lo <= log_thresholds[i] {
                            value[i] = disc * own.exit(y);
                            cause[i] = StopCause::OwnSet;
                            false
                        } else {
                            true
                        }
                    });
                }
            }
        }
        let tail = if open.is_empty() {
            0.0
        } else {
            truncation_bound(params, state.t, state.x)
        };
        (value, cause, open, tail)
    });

    let n = paths.len();
    let points = (0..k)
        .map(|i| {
            let values: Vec<f64> = paths.iter().map(|p| p.0[i]).collect();
            let causes: Vec<StopCause> = paths.iter().map(|p| p.1[i]).collect();
            let (mean, se, _) = summarize(&values, config.antithetic);
            let bias = config
                .tail_bound
                .then(|| compensated_sum(paths.iter().filter(|p| p.2.contains(&i)).map(|p| p.3)) / n as f64);
            DeviationPoint {
                threshold: thresholds[i],
                mean,
                se,
                truncation_bias_bound: bias,
                causes: cause_stats(&causes, &values),
            }
        })
        .collect();
    Ok(DeviationSweep {
        player: player.index() as u8 + 1,
        x0: config.x0,
        n_paths: n,
        points,
    })
}
