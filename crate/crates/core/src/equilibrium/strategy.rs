use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::payoffs::PlayerPayoffs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "player {}", self.index() + 1)
    }
}

/// A state where the player concedes at rate `weight` per unit of local
/// time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub q: f64,
    pub weight: f64,
}

/// Closed interval of states; `lo = 0` stands for the open end at the
/// boundary of the state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Interval { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    pub fn below(hi: f64) -> Self {
        Interval { lo: 0.0, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Absolutely continuous part of an intensity measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityKind {
    /// Hazard rate that keeps the opponent indifferent between exiting and
    /// staying on `(α, x_R]` of the opponent:
    /// `λ(x) = (r R(x) − L R(x))/(G(x) − R(x))`.
    Symmetric,
}

impl DensityKind {
    /// Support `(lo, hi]` of the density, in terms of the opponent's payoffs.
    pub fn support(self, opponent: &PlayerPayoffs) -> (f64, f64) {
        match self {
            DensityKind::Symmetric => {
                let sa = opponent.standalone();
                (sa.alpha, sa.x_r)
            }
        }
    }

    /// Concession hazard per unit of time at `x`.
    pub fn rate(self, opponent: &PlayerPayoffs, x: f64) -> f64 {
        let (lo, hi) = self.support(opponent);
        if x <= lo || x > hi {
            return 0.0;
        }
        match self {
            DensityKind::Symmetric => -opponent.exit_generator(x) / (opponent.follower(x) - opponent.exit(x)),
        }
    }
}

/// A Markov randomized stopping strategy: concession atoms, an optional
/// density, and a set where the player exits with certainty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarkovStrategy {
    atoms: Vec<Atom>,
    density: Option<DensityKind>,
    stopping_set: Vec<Interval>,
}

impl MarkovStrategy {
    /// Atoms must be listed with strictly decreasing locations and positive
    /// weights; stopping intervals must be disjoint and must not contain an
    /// atom.
    pub fn new(atoms: Vec<Atom>, density: Option<DensityKind>, mut stopping_set: Vec<Interval>) -> Result<Self> {
        for a in &atoms {
            if !(a.q > 0.0 && a.q.is_finite()) {
                return Err(Error::InvalidStrategy(format!(
                    "atom location {} is not a positive state",
                    a.q
                )));
            }
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(Error::InvalidStrategy(format!(
                    "atom at {} has weight {}",
                    a.q, a.weight
                )));
            }
        }
        if atoms.windows(2).any(|w| !(w[0].q > w[1].q)) {
            return Err(Error::InvalidStrategy(
                "atom locations must be strictly decreasing".into(),
            ));
        }
        for i in &stopping_set {
            if !(i.lo >= 0.0 && i.lo <= i.hi && i.hi.is_finite()) {
                return Err(Error::InvalidStrategy(format!(
                    "bad stopping interval [{}, {}]",
                    i.lo, i.hi
                )));
            }
        }
        stopping_set.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        if stopping_set.windows(2).any(|w| w[1].lo <= w[0].hi) {
            return Err(Error::InvalidStrategy("stopping intervals overlap".into()));
        }
        if let Some(a) = atoms.iter().find(|a| stopping_set.iter().any(|i| i.contains(a.q))) {
            return Err(Error::InvalidStrategy(format!(
                "atom at {} lies inside the stopping set",
                a.q
            )));
        }
        Ok(Self {
            atoms,
            density,
            stopping_set,
        })
    }

    /// Never exits.
    pub fn stubborn() -> Self {
        Self::default()
    }

    /// Exits on first entry into `(0, s]`.
    pub fn threshold(s: f64) -> Result<Self> {
        Self::new(Vec::new(), None, vec![Interval::below(s)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<DensityKind> {
        self.density
    }

    pub fn stopping_set(&self) -> &[Interval] {
        &self.stopping_set
    }

    pub fn with_atoms(&self, atoms: Vec<Atom>) -> Result<Self> {
        Self::new(atoms, self.density, self.stopping_set.clone())
    }

    /// Upper end `s` of the stopping set, if any.
    pub fn stopping_boundary(&self) -> Option<f64> {
        self.stopping_set.iter().map(|i| i.hi).reduce(f64::max)
    }

    pub fn stops_at(&self, x: f64) -> bool {
        self.stopping_set.iter().any(|i| i.contains(x))
    }

    pub fn is_pure(&self) -> bool {
        self.atoms.is_empty() && self.density.is_none()
    }

    /// Checks that all concession happens at or below the player's
    /// stand-alone threshold.
    pub fn check_support(&self, own: &PlayerPayoffs, opponent: &PlayerPayoffs) -> Result<()> {
        let x_r = own.standalone().x_r;
        let limit = x_r * (1.0 + 1e-12);
        if let Some(a) = self.atoms.iter().find(|a| a.q > limit) {
            return Err(Error::InvalidStrategy(format!(
                "atom at {} lies above the stand-alone threshold {x_r}",
                a.q
            )));
        }
        if let Some(s) = self.stopping_boundary().filter(|&s| s > limit) {
            return Err(Error::InvalidStrategy(format!(
                "stopping set reaches {s}, above the stand-alone threshold {x_r}"
            )));
        }
        if let Some(d) = self.density {
            let (_, hi) = d.support(opponent);
            if hi > limit {
                return Err(Error::InvalidStrategy(format!(
                    "density support reaches {hi}, above the stand-alone threshold {x_r}"
                )));
            }
        }
        Ok(())
    }
}
