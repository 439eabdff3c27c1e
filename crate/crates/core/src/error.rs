use thiserror::Error;

use crate::equilibrium::Player;

/// Errors raised while building models, constructing equilibria or running
/// simulations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid duopoly parameters: {0}")]
    InvalidParams(String),

    #[error("endurance ordering violated: player 1 must be at least as enduring (x_R1 = {x_r1}, x_R2 = {x_r2}); swap the players")]
    EnduranceOrdering { x_r1: f64, x_r2: f64 },

    #[error("players are not equally enduring: x_R1 = {x_r1} differs from x_R2 = {x_r2}")]
    EnduranceMismatch { x_r1: f64, x_r2: f64 },

    #[error("infeasible parameters: {condition} fails with margin {margin:e}")]
    Infeasible { condition: String, margin: f64 },

    #[error(
        "not a best reply for {player}: waiting value falls below the exit payoff at x = {state} (margin {margin:e})"
    )]
    NotBestReply { player: Player, state: f64, margin: f64 },

    #[error("state {0} is outside the domain")]
    OutOfDomain(f64),

    #[error("root bracket failure in {0}")]
    Bracket(String),

    #[error("sequence exits the domain in {0}")]
    ExitsDomain(String),

    #[error("no type-2 equilibrium with {n} atoms found: {detail}")]
    NoType2Equilibrium { n: usize, detail: String },

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid value function: {0}")]
    InvalidValue(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for outcomes that reflect the economics of the parameters rather
    /// than a defect in the input or the code.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::Infeasible { .. } | Error::NotBestReply { .. } | Error::NoType2Equilibrium { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
