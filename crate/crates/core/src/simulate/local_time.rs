use rayon::prelude::*;

use crate::diffusion::{Diffusion, DiffusionModel};
use crate::error::{Error, Result};
use crate::simulate::engine::{path_rng, Levels, Noise, Walker};
use crate::simulate::stats::mean_and_se;
use crate::simulate::SimConfig;

/// Exact GBM transition over `dt` driven by the standard normal `z`.
pub fn gbm_step(model: &DiffusionModel, x: f64, dt: f64, z: f64) -> f64 {
    let s = model.sigma();
    x * ((model.b() - 0.5 * s * s) * dt + s * dt.sqrt() * z).exp()
}

/// Half-width `c·σ(q)·√dt` of the band around `q` used to estimate local
/// time.
pub fn band_half_width(model: &DiffusionModel, q: f64, dt: f64, c_band: f64) -> f64 {
    c_band * model.volatility(q) * dt.sqrt()
}

/// Band estimator of the local time at a level, normalised so that
/// `∫ f(X_s) σ²(X_s) ds = ∫ f(y) L^y dy`.
///
/// Each step starting inside the band adds `σ²(x) Δ/(2ε)`.
#[derive(Debug, Clone, Copy)]
pub struct LocalTimeAccumulator {
    q: f64,
    eps: f64,
    sigma: f64,
    value: f64,
}

impl LocalTimeAccumulator {
    pub fn new(model: &DiffusionModel, q: f64, dt: f64, c_band: f64) -> Self {
        Self {
            q,
            eps: band_half_width(model, q, dt, c_band),
            sigma: model.sigma(),
            value: 0.0,
        }
    }

    pub fn level(&self) -> f64 {
        self.q
    }

    pub fn half_width(&self) -> f64 {
        self.eps
    }

    /// Local time gained over a step of length `dt` that starts at `x`.
    pub fn increment(&self, x: f64, dt: f64) -> f64 {
        if (x - self.q).abs() < self.eps {
            let v = self.sigma * x;
            v * v * dt / (2.0 * self.eps)
        } else {
            0.0
        }
    }

    pub fn update(&mut self, x: f64, dt: f64) -> f64 {
        let inc = self.increment(x, dt);
        self.value += inc;
        inc
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn reset(&mut self) {
        self.value = 0.0;
    }
}

/// Monte Carlo estimate of a mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

/// Expected local time at `q` accumulated by paths started at `x0` before
/// they leave `(lo, hi)`. Paths still inside at the horizon contribute what
/// they have so far.
pub fn exit_local_time(model: &DiffusionModel, lo: f64, hi: f64, q: f64, config: &SimConfig) -> Result<MeanEstimate> {
    config.validate()?;
    if !(0.0 < lo && lo < q && q < hi && lo < config.x0 && config.x0 < hi) {
        return Err(Error::InvalidConfig(format!(
            "need lo < x0, q < hi, got lo = {lo}, x0 = {}, q = {q}, hi = {hi}",
            config.x0
        )));
    }
    let acc = LocalTimeAccumulator::new(model, q, config.dt, config.c_band);
    let mut levels = Levels::default();
    levels.add_point(lo);
    levels.add_point(hi);
    levels.add_band(q, acc.half_width());
    let walker = Walker::new(model, config, levels);
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    let samples: Vec<f64> = (0..config.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut noise = Noise::new(path_rng(config.seed, i as u64), false);
            let mut acc = acc;
            let mut state = walker.start(config.x0);
            while state.t < config.horizon {
                let remaining = config.horizon - state.t;
                let step = walker.advance(&mut state, 0.0, remaining, &mut noise);
                acc.update(step.x0, step.h);
                if step.range.0 <= log_lo || step.range.1 >= log_hi {
                    break;
                }
            }
            acc.value()
        })
        .collect();
    let (mean, se) = mean_and_se(&samples);
    Ok(MeanEstimate {
        mean,
        se,
        n: samples.len(),
    })
}
