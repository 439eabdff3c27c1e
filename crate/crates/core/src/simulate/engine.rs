use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::diffusion::DiffusionModel;
use crate::equilibrium::{DensityKind, Interval, MarkovStrategy, Player};
use crate::error::{Error, Result};
use crate::payoffs::{DuopolyParams, PlayerPayoffs};
use crate::simulate::local_time::band_half_width;
use crate::simulate::stats::{compensated_sum, mean_and_se};
use crate::simulate::SimConfig;

/// Random stream for path (or antithetic pair) `index`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Normal draws, optionally negated for the antithetic partner.
pub(crate) struct Noise {
    rng: ChaCha8Rng,
    sign: f64,
}

impl Noise {
    pub(crate) fn new(rng: ChaCha8Rng, negate: bool) -> Self {
        Self {
            rng,
            sign: if negate { -1.0 } else { 1.0 },
        }
    }

    pub(crate) fn normal(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sign * z
    }

    pub(crate) fn exp1(&mut self) -> f64 {
        self.rng.sample(Exp1)
    }

    /// Lowest and highest point of a Brownian bridge with volatility
    /// `sigma` from `a` to `b` over a step of length `h`, each drawn from
    /// its marginal law.
    pub(crate) fn bridge_range(&mut self, a: f64, b: f64, h: f64, sigma: f64) -> (f64, f64) {
        let s2h = sigma * sigma * h;
        let mut reach = || {
            let u: f64 = 1.0 - self.rng.random::<f64>();
            ((b - a) * (b - a) - 2.0 * s2h * u.ln()).sqrt()
        };
        let lo = 0.5 * (a + b - reach());
        let hi = 0.5 * (a + b + reach());
        (lo.min(a.min(b)), hi.max(a.max(b)))
    }
}

/// Levels near which the step size must shrink, in log coordinates: barrier
/// levels, whose crossings the bridge range detects exactly, and local-time
/// bands inside which the distance counts as zero.
#[derive(Debug, Clone, Default)]
pub(crate) struct Levels {
    points: Vec<f64>,
    bands: Vec<(f64, f64)>,
}

impl Levels {
    pub(crate) fn add_point(&mut self, level: f64) {
        if level > 0.0 {
            self.points.push(level.ln());
        }
    }

    pub(crate) fn add_band(&mut self, q: f64, eps: f64) {
        self.bands.push(((q - eps).ln(), (q + eps).ln()));
    }

    /// Log distances from `y` to the nearest barrier level and to the
    /// nearest band.
    pub(crate) fn distance(&self, y: f64) -> (f64, f64) {
        let p = self.points.iter().map(|&l| (y - l).abs()).fold(f64::INFINITY, f64::min);
        let b = self
            .bands
            .iter()
            .map(|&(lo, hi)| (lo - y).max(y - hi).max(0.0))
            .fold(f64::INFINITY, f64::min);
        (p, b)
    }
}

/// Position of a path.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PathState {
    pub(crate) t: f64,
    pub(crate) x: f64,
    y: f64,
    dist: (f64, f64),
}

/// One step of a path.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Move {
    pub(crate) h: f64,
    pub(crate) x0: f64,
    pub(crate) x1: f64,
    /// Log range visited during the step.
    pub(crate) range: (f64, f64),
}

/// Exact log-normal stepping with adaptive step sizes.
#[derive(Debug, Clone)]
pub(crate) struct Walker {
    levels: Levels,
    dt: f64,
    level_dt: f64,
    dt_max: f64,
    k_sigma: f64,
    hazard_cap: f64,
    adaptive: bool,
    mu: f64,
    sigma: f64,
}

impl Walker {
    pub(crate) fn new(model: &DiffusionModel, config: &SimConfig, levels: Levels) -> Self {
        let sigma = model.sigma();
        Self {
            levels,
            dt: config.dt,
            level_dt: config.level_dt.max(config.dt).min(config.dt_max),
            dt_max: config.dt_max,
            k_sigma: config.step_safety * sigma,
            hazard_cap: config.hazard_cap,
            adaptive: config.adaptive,
            mu: model.b() - 0.5 * sigma * sigma,
            sigma,
        }
    }

    /// Fixed steps of length `dt` and no barrier levels.
    pub(crate) fn fixed(model: &DiffusionModel, dt: f64) -> Self {
        let mut config = SimConfig::new(1.0, dt, 100.0 * dt, 2, 0);
        config.adaptive = false;
        config.dt_max = dt;
        Self::new(model, &config, Levels::default())
    }

    pub(crate) fn start(&self, x: f64) -> PathState {
        let y = x.ln();
        PathState {
            t: 0.0,
            x,
            y,
            dist: self.levels.distance(y),
        }
    }

    /// Step length given the concession rate and the time left.
    fn step_length(&self, (level, band): (f64, f64), rate: f64, remaining: f64) -> f64 {
        let mut h = self.dt;
        if self.adaptive {
            let (l, b) = (level / self.k_sigma, band / self.k_sigma);
            h = (l * l)
                .clamp(self.level_dt, self.dt_max)
                .min((b * b).clamp(self.dt, self.dt_max));
            if rate > 0.0 {
                h = h.min((self.hazard_cap / rate).max(self.dt));
            }
        }
        h.min(remaining)
    }

    /// Advances `state` by one step. The bridge range is only drawn when a
    /// barrier level could have been crossed and recrossed; the skipped
    /// probability `exp(−2ab/(σ²h))`, with `a`, `b` the log distances of the
    /// endpoints, is below `e⁻⁵⁰`.
    pub(crate) fn advance(&self, state: &mut PathState, rate: f64, remaining: f64, noise: &mut Noise) -> Move {
        let h = self.step_length(state.dist, rate, remaining);
        let y0 = state.y;
        let y1 = y0 + self.mu * h + self.sigma * h.sqrt() * noise.normal();
        let d1 = self.levels.distance(y1);
        let range = if 2.0 * state.dist.0 * d1.0 < 50.0 * self.sigma * self.sigma * h {
            noise.bridge_range(y0, y1, h, self.sigma)
        } else {
            (y0.min(y1), y0.max(y1))
        };
        let x0 = state.x;
        *state = PathState {
            t: state.t + h,
            x: y1.exp(),
            y: y1,
            dist: d1,
        };
        Move {
            h,
            x0,
            x1: state.x,
            range,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct BandAtom {
    q: f64,
    weight: f64,
    eps: f64,
}

/// A strategy compiled for simulation.
#[derive(Debug, Clone)]
pub(crate) struct Clock {
    atoms: Vec<BandAtom>,
    density: Option<(DensityKind, PlayerPayoffs, f64, f64)>,
    sets: Vec<Interval>,
    /// `sets` in log coordinates.
    log_sets: Vec<(f64, f64)>,
    sigma: f64,
}

/// What a player does during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Event {
    /// The concession clock rang after this fraction of the step.
    Clock(f64),
    /// The path entered the stopping set through this level.
    Set(f64),
}

impl Clock {
    pub(crate) fn new(
        model: &DiffusionModel,
        strategy: &MarkovStrategy,
        opponent: &PlayerPayoffs,
        dt: f64,
        c_band: f64,
    ) -> Self {
        let atoms = strategy
            .atoms()
            .iter()
            .map(|a| BandAtom {
                q: a.q,
                weight: a.weight,
                eps: band_half_width(model, a.q, dt, c_band),
            })
            .collect();
        let density = strategy.density().map(|d| {
            let (lo, hi) = d.support(opponent);
            (d, *opponent, lo, hi)
        });
        let sets = strategy.stopping_set().to_vec();
        let log_sets = sets.iter().map(|i| (i.lo.ln(), i.hi.ln())).collect();
        Self {
            atoms,
            density,
            sets,
            log_sets,
            sigma: model.sigma(),
        }
    }

    pub(crate) fn add_levels(&self, levels: &mut Levels) {
        for a in &self.atoms {
            levels.add_band(a.q, a.eps);
        }
        for i in &self.sets {
            levels.add_point(i.hi);
            levels.add_point(i.lo);
        }
        if let Some((_, _, lo, hi)) = self.density {
            levels.add_point(lo);
            levels.add_point(hi);
        }
    }

    pub(crate) fn in_set(&self, x: f64) -> bool {
        self.sets.iter().any(|i| i.contains(x))
    }

    pub(crate) fn rate(&self, x: f64) -> f64 {
        self.density.map_or(0.0, |(d, opp, _, _)| d.rate(&opp, x))
    }

    /// Concession hazard accumulated over a step from `x0` to `x1`.
    pub(crate) fn hazard(&self, x0: f64, x1: f64, h: f64) -> f64 {
        let mut inc = 0.0;
        for a in &self.atoms {
            if (x0 - a.q).abs() < a.eps {
                let v = self.sigma * x0;
                inc += a.weight * v * v * h / (2.0 * a.eps);
            }
        }
        if self.density.is_some() {
            inc += 0.5 * (self.rate(x0) + self.rate(x1)) * h;
        }
        inc
    }

    /// Level through which a step starting at `x0` and covering the log
    /// range `[a, b]` enters the stopping set.
    pub(crate) fn entry(&self, x0: f64, (a, b): (f64, f64)) -> Option<f64> {
        self.sets
            .iter()
            .zip(&self.log_sets)
            .filter(|(_, &(lo, hi))| lo <= b && hi >= a)
            .map(|(i, _)| {
                if x0 > i.hi {
                    i.hi
                } else if x0 < i.lo {
                    i.lo
                } else {
                    x0
                }
            })
            .min_by(|p, q| (p - x0).abs().total_cmp(&(q - x0).abs()))
    }

    /// Advances the clock over `step` and reports the first event in it.
    pub(crate) fn step(&self, clock: &mut f64, budget: f64, step: &Move) -> Option<Event> {
        let Move { h, x0, x1, range } = *step;
        let inc = self.hazard(x0, x1, h);
        if inc > 0.0 && *clock + inc >= budget {
            let f = ((budget - *clock) / inc).clamp(0.0, 1.0);
            *clock = budget;
            return Some(Event::Clock(f));
        }
        *clock += inc;
        self.entry(x0, range).map(Event::Set)
    }
}

/// Where the event happens and how far into the step, for ordering.
/// Set entries count as happening at the end of the step, the nearer level
/// first.
fn locate(event: Event, x0: f64, x1: f64) -> (f64, f64) {
    match event {
        Event::Clock(f) => (f, x0.powf(1.0 - f) * x1.powf(f)),
        Event::Set(level) => (1.0 + (level / x0).ln().abs(), level),
    }
}

/// How a path ended, from one player's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCause {
    OwnAtom,
    OwnSet,
    OppAtom,
    OppSet,
    Horizon,
}

impl StopCause {
    pub const ALL: [StopCause; 5] = [
        StopCause::OwnAtom,
        StopCause::OwnSet,
        StopCause::OppAtom,
        StopCause::OppSet,
        StopCause::Horizon,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StopCause::OwnAtom => "own_atom",
            StopCause::OwnSet => "own_set",
            StopCause::OppAtom => "opp_atom",
            StopCause::OppSet => "opp_set",
            StopCause::Horizon => "horizon",
        }
    }
}

/// End of a simulated game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub time: f64,
    pub state: f64,
    /// Which players exit; both on a tie, neither at the horizon.
    pub stopped: [bool; 2],
    /// Whether each player's exit came from its concession clock.
    pub by_clock: [bool; 2],
}

impl PathOutcome {
    pub fn cause(&self, p: Player) -> StopCause {
        let (i, j) = (p.index(), p.other().index());
        if self.stopped[i] {
            if self.by_clock[i] {
                StopCause::OwnAtom
            } else {
                StopCause::OwnSet
            }
        } else if self.stopped[j] {
            if self.by_clock[j] {
                StopCause::OppAtom
            } else {
                StopCause::OppSet
            }
        } else {
            StopCause::Horizon
        }
    }

    /// Discounted payoff to `p`: exit value if it leaves (also on a tie),
    /// follower value if the rival leaves, nothing at the horizon.
    pub fn payoff(&self, params: &DuopolyParams, p: Player) -> f64 {
        let pay = params.payoffs(p);
        let disc = (-params.model().r() * self.time).exp();
        if self.stopped[p.index()] {
            disc * pay.exit(self.state)
        } else if self.stopped[p.other().index()] {
            disc * pay.follower(self.state)
        } else {
            0.0
        }
    }
}

/// Compiled pair of strategies with everything a path needs.
pub(crate) struct Game {
    clocks: [Clock; 2],
    walker: Walker,
    horizon: f64,
}

impl Game {
    pub(crate) fn new(params: &DuopolyParams, strategies: [&MarkovStrategy; 2], config: &SimConfig) -> Self {
        let model = *params.model();
        let clock = |p: Player| {
            Clock::new(
                &model,
                strategies[p.index()],
                &params.payoffs(p.other()),
                config.dt,
                config.c_band,
            )
        };
        let clocks = [clock(Player::One), clock(Player::Two)];
        let mut levels = Levels::default();
        for c in &clocks {
            c.add_levels(&mut levels);
        }
        Self {
            clocks,
            walker: Walker::new(&model, config, levels),
            horizon: config.horizon,
        }
    }

    pub(crate) fn run(&self, x0: f64, noise: &mut Noise) -> PathOutcome {
        let immediate = [self.clocks[0].in_set(x0), self.clocks[1].in_set(x0)];
        if immediate[0] || immediate[1] {
            return PathOutcome {
                time: 0.0,
                state: x0,
                stopped: immediate,
                by_clock: [false; 2],
            };
        }
        let budget = [noise.exp1(), noise.exp1()];
        let mut clock = [0.0; 2];
        let mut state = self.walker.start(x0);
        while state.t < self.horizon {
            let t = state.t;
            let rate = self.clocks[0].rate(state.x) + self.clocks[1].rate(state.x);
            let step = self.walker.advance(&mut state, rate, self.horizon - t, noise);
            let ev = [0, 1].map(|i| {
                self.clocks[i]
                    .step(&mut clock[i], budget[i], &step)
                    .map(|e| (locate(e, step.x0, step.x1), matches!(e, Event::Clock(_))))
            });
            let first = match ev {
                [None, None] => None,
                [Some(a), None] => Some((a.0, [true, false], [a.1, false])),
                [None, Some(b)] => Some((b.0, [false, true], [false, b.1])),
                [Some(a), Some(b)] => Some(if a.0 .0 < b.0 .0 {
                    (a.0, [true, false], [a.1, false])
                } else if b.0 .0 < a.0 .0 {
                    (b.0, [false, true], [false, b.1])
                } else {
                    (a.0, [true, true], [a.1, b.1])
                }),
            };
            if let Some(((f, x), stopped, by_clock)) = first {
                return PathOutcome {
                    time: t + f.min(1.0) * step.h,
                    state: x,
                    stopped,
                    by_clock,
                };
            }
        }
        PathOutcome {
            time: self.horizon,
            state: state.x,
            stopped: [false; 2],
            by_clock: [false; 2],
        }
    }
}

/// Upper bound on what a path cut at the horizon `T` in state `x` could
/// still have earned: `e^{−rT}(max l + m E(x))`. Every payoff is bounded by
/// `l + m E(X)`, and that bound discounted is a supermartingale.
pub fn truncation_bound(params: &DuopolyParams, horizon: f64, x: f64) -> f64 {
    let l = params.liquidation(Player::One).max(params.liquidation(Player::Two));
    let e = params.payoffs(Player::One).perpetuity(x);
    (-params.model().r() * horizon).exp() * (l + params.m() * e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauseStat {
    pub cause: StopCause,
    pub count: u64,
    /// Mean discounted payoff over paths ending this way (0 if none).
    pub mean: f64,
}

/// Monte Carlo value of one player under a strategy profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffEstimate {
    pub player: u8,
    pub x0: f64,
    pub mean: f64,
    pub se: f64,
    pub n_paths: usize,
    /// Independent samples behind `se` (pairs when antithetic).
    pub n_effective: usize,
    /// Bound on `|bias|` from cutting paths at the horizon; `None` when not
    /// requested.
    pub truncation_bias_bound: Option<f64>,
    pub causes: Vec<CauseStat>,
}

impl PayoffEstimate {
    pub fn count(&self, cause: StopCause) -> u64 {
        self.causes.iter().find(|c| c.cause == cause).map_or(0, |c| c.count)
    }
}

/// Runs `config.n_paths` games, in parallel, each on its own random stream.
/// Antithetic partners share a stream with negated normals.
pub(crate) fn run_paths<T, F>(config: &SimConfig, per_path: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Noise) -> T + Sync,
{
    let units = if config.antithetic {
        config.n_paths / 2
    } else {
        config.n_paths
    };
    let nested: Vec<Vec<T>> = (0..units)
        .into_par_iter()
        .map(|u| {
            let rng = path_rng(config.seed, u as u64);
            if config.antithetic {
                let mut a = Noise::new(rng.clone(), false);
                let mut b = Noise::new(rng, true);
                vec![per_path(&mut a), per_path(&mut b)]
            } else {
                vec![per_path(&mut Noise::new(rng, false))]
            }
        })
        .collect();
    nested.into_iter().flatten().collect()
}

/// Mean and standard error, pairing consecutive samples when antithetic.
pub(crate) fn summarize(values: &[f64], antithetic: bool) -> (f64, f64, usize) {
    if antithetic {
        let pairs: Vec<f64> = values.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect();
        let (m, se) = mean_and_se(&pairs);
        (m, se, pairs.len())
    } else {
        let (m, se) = mean_and_se(values);
        (m, se, values.len())
    }
}

pub(crate) fn cause_stats(causes: &[StopCause], values: &[f64]) -> Vec<CauseStat> {
    StopCause::ALL
        .iter()
        .map(|&cause| {
            let hits: Vec<f64> = causes
                .iter()
                .zip(values)
                .filter(|(c, _)| **c == cause)
                .map(|(_, v)| *v)
                .collect();
            let mean = if hits.is_empty() {
                0.0
            } else {
                compensated_sum(hits.iter().copied()) / hits.len() as f64
            };
            CauseStat {
                cause,
                count: hits.len() as u64,
                mean,
            }
        })
        .collect()
}

/// Simulates the game under `strategies` from `config.x0` and estimates
/// both players' discounted payoffs from the same paths.
pub fn estimate_payoffs(
    params: &DuopolyParams,
    strategies: [&MarkovStrategy; 2],
    config: &SimConfig,
) -> Result<[PayoffEstimate; 2]> {
    config.validate()?;
    let game = Game::new(params, strategies, config);
    let outcomes = run_paths(config, |noise| game.run(config.x0, noise));
    let bias = config.tail_bound.then(|| {
        compensated_sum(
            outcomes
                .iter()
                .filter(|o| !o.stopped[0] && !o.stopped[1])
                .map(|o| truncation_bound(params, o.time, o.state)),
        ) / outcomes.len() as f64
    });
    Ok(Player::BOTH.map(|p| {
        let values: Vec<f64> = outcomes.iter().map(|o| o.payoff(params, p)).collect();
        let causes: Vec<StopCause> = outcomes.iter().map(|o| o.cause(p)).collect();
        let (mean, se, n_effective) = summarize(&values, config.antithetic);
        PayoffEstimate {
            player: p.index() as u8 + 1,
            x0: config.x0,
            mean,
            se,
            n_paths: values.len(),
            n_effective,
            truncation_bias_bound: bias,
            causes: cause_stats(&causes, &values),
        }
    }))
}

/// Estimate for a single player.
pub fn estimate_payoff(
    params: &DuopolyParams,
    strategies: [&MarkovStrategy; 2],
    player: Player,
    config: &SimConfig,
) -> Result<PayoffEstimate> {
    let [a, b] = estimate_payoffs(params, strategies, config)?;
    Ok(if player == Player::One { a } else { b })
}

/// Simulates single games and returns the raw outcomes, for diagnostics.
pub fn sample_outcomes(
    params: &DuopolyParams,
    strategies: [&MarkovStrategy; 2],
    config: &SimConfig,
) -> Result<Vec<PathOutcome>> {
    config.validate()?;
    let game = Game::new(params, strategies, config);
    Ok(run_paths(config, |noise| game.run(config.x0, noise)))
}

pub(crate) fn require_positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{what} must be positive, got {x}")))
    }
}
