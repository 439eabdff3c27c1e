//! Monte Carlo estimation of payoffs under Markov strategy profiles.
//!
//! Paths use exact log-normal transitions. Each player carries an `Exp(1)`
//! budget and exits once the accumulated concession hazard exceeds it; the
//! hazard from an atom at `q` is its weight times the local time at `q`,
//! estimated with a band of half-width `c_band·σ(q)·√dt`. Every path (or
//! antithetic pair) draws from its own ChaCha stream keyed by the seed and
//! the path index, so results do not depend on the number of threads.

mod best_reply;
mod config;
mod csv;
mod engine;
mod local_time;
mod probes;
mod stats;

pub use best_reply::{best_reply_sweep, DeviationPoint, DeviationSweep};
pub use config::SimConfig;
pub use csv::{write_sim_csv, SimRow};
pub use engine::{
    estimate_payoff, estimate_payoffs, path_rng, sample_outcomes, truncation_bound, CauseStat, PathOutcome,
    PayoffEstimate, StopCause,
};
pub use local_time::{band_half_width, exit_local_time, gbm_step, LocalTimeAccumulator, MeanEstimate};
pub use probes::{comovement_probe, comovement_region, concession_probe, ComovementReport, ConcessionCurve};
pub use stats::{compensated_sum, linear_fit, mean_and_se, CompensatedSum};
