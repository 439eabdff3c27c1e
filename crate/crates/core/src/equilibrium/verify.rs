//! Residual checks of the variational system that characterizes a
//! Markov-perfect equilibrium.
//!
//! Let `s` be the highest state at which some player exits with certainty,
//! and call that player the stopper (player 2 on ties). For each player `i`
//! with rival `j` the candidate `wⁱ` must satisfy:
//!
//! - continuity at every breakpoint;
//! - `L wⁱ − r wⁱ + λʲ (Gⁱ − wⁱ) = 0` above `s`, away from the rival's
//!   atoms, where `λʲ` is the rival's concession density;
//! - `wⁱ = Rⁱ` at own atoms and on the support of an own density;
//! - `wⁱ = Rⁱ` (stopper) or `wⁱ = Gⁱ` (the other player) on `(0, s]`;
//! - smooth fit of the stopper at `s`, and `wⁱ ∈ C¹` at own atoms;
//! - `½ Δwⁱ'(q) + a (Gⁱ − wⁱ)(q) = 0` at every rival atom `(q, a)`;
//! - `V_Rⁱ ≤ wⁱ ≤ Gⁱ` and `wⁱ ≥ Rⁱ`;
//! - `wⁱ/ψ → 0` at infinity.

use serde::{Deserialize, Serialize};

use crate::diffusion::Diffusion;
use crate::equilibrium::strategy::{MarkovStrategy, Player};
use crate::equilibrium::value::{PieceKind, PiecewiseValue};
use crate::payoffs::{log_grid, DuopolyParams};

/// Default pass threshold for every residual class.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Obstacle and sandwich margins below this fail certification.
pub const MARGIN_TOLERANCE: f64 = -1e-10;

const NO_ATOMS_FLAG: &str = "no atoms: jump conditions vacuously pass";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualClass {
    Continuity,
    Hjb,
    ValueMatching,
    StoppingRegion,
    SmoothFit,
    JumpCondition,
    Obstacle,
    Decay,
}

impl ResidualClass {
    pub const ALL: [ResidualClass; 8] = [
        ResidualClass::Continuity,
        ResidualClass::Hjb,
        ResidualClass::ValueMatching,
        ResidualClass::StoppingRegion,
        ResidualClass::SmoothFit,
        ResidualClass::JumpCondition,
        ResidualClass::Obstacle,
        ResidualClass::Decay,
    ];
}

/// Worst residual of one class for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassResidual {
    pub class: ResidualClass,
    pub player: u8,
    /// Largest raw residual magnitude.
    pub raw: f64,
    /// Largest scale-free residual; compared against the tolerance.
    pub scaled: f64,
    /// State where the scaled residual is attained.
    pub state: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tolerance: f64,
    pub residuals: Vec<ClassResidual>,
    /// Per player, minimum of `(w − R)/max(1, |R|)` on the grid.
    pub obstacle_margin: [f64; 2],
    /// Per player, minimum of the two sandwich gaps `w − V_R` and `G − w`,
    /// scaled like the obstacle margin.
    pub sandwich_margin: [f64; 2],
    pub flags: Vec<String>,
    pub certified: bool,
}

impl VerificationReport {
    pub fn class_passed(&self, class: ResidualClass) -> bool {
        self.residuals.iter().filter(|r| r.class == class).all(|r| r.passed)
    }

    /// Classes with at least one failing player, without repetition.
    pub fn failed_classes(&self) -> Vec<ResidualClass> {
        let mut out: Vec<_> = self.residuals.iter().filter(|r| !r.passed).map(|r| r.class).collect();
        out.dedup();
        out
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| r.class != ResidualClass::Decay)
            .map(|r| r.scaled)
            .fold(0.0, f64::max)
    }

    pub fn residual(&self, class: ResidualClass, player: Player) -> Option<&ClassResidual> {
        self.residuals
            .iter()
            .find(|r| r.class == class && r.player as usize == player.index() + 1)
    }

    /// Marks the report uncertified, e.g. for marginal feasibility.
    pub fn flag_uncertified(&mut self, reason: String) {
        self.flags.push(reason);
        self.certified = false;
    }
}

/// Verification grid: `points` log-spaced states on
/// `(lo_factor·s, hi_factor·x_R¹)`, plus all breakpoints and atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub points: usize,
    pub lo_factor: f64,
    pub hi_factor: f64,
    pub tolerance: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 400,
            lo_factor: 0.5,
            hi_factor: 4.0,
            tolerance: RESIDUAL_TOLERANCE,
        }
    }
}

struct Worst {
    raw: f64,
    scaled: f64,
    state: Option<f64>,
}

impl Worst {
    fn new() -> Self {
        Self {
            raw: 0.0,
            scaled: 0.0,
            state: None,
        }
    }

    fn add(&mut self, raw: f64, scale: f64, x: f64) {
        let raw = raw.abs();
        let scaled = if raw.is_nan() { f64::INFINITY } else { raw / scale };
        self.raw = self.raw.max(raw);
        if scaled > self.scaled || (self.state.is_none() && scaled.is_infinite()) {
            self.scaled = scaled;
            self.state = Some(x);
        }
    }
}

/// Upper end of all stopping sets and the player owning it (player 2 on
/// ties).
pub fn top_stopping_state(strategies: &[MarkovStrategy; 2]) -> Option<(f64, Player)> {
    let s1 = strategies[0].stopping_boundary();
    let s2 = strategies[1].stopping_boundary();
    match (s1, s2) {
        (None, None) => None,
        (Some(a), None) => Some((a, Player::One)),
        (None, Some(b)) => Some((b, Player::Two)),
        (Some(a), Some(b)) if a > b => Some((a, Player::One)),
        (_, Some(b)) => Some((b, Player::Two)),
    }
}

/// Runs every residual class over the grid. Always returns a report; the
/// caller decides what to do with an uncertified profile.
pub fn verify_variational_system(
    params: &DuopolyParams,
    strategies: &[MarkovStrategy; 2],
    values: &[PiecewiseValue; 2],
    spec: &GridSpec,
) -> VerificationReport {
    let d = *params.model();
    let x_r1 = params.payoffs(Player::One).standalone().x_r;
    let top = top_stopping_state(strategies);
    let s_top = top.map(|t| t.0);
    let lowest_alpha = Player::BOTH
        .iter()
        .map(|&p| params.payoffs(p).standalone().alpha)
        .fold(f64::INFINITY, f64::min);
    let lo = spec.lo_factor * s_top.filter(|&s| s > 0.0).unwrap_or(lowest_alpha);
    let hi = spec.hi_factor * x_r1;

    let mut special = Vec::new();
    for p in Player::BOTH {
        special.extend(values[p.index()].breakpoints());
        special.extend(strategies[p.index()].atoms().iter().map(|a| a.q));
    }
    special.extend(s_top);
    let mut grid = log_grid(lo, hi, spec.points.max(2));
    for &c in &special {
        grid.extend([c, c * (1.0 - 1e-7), c * (1.0 + 1e-7)]);
    }
    grid.retain(|&x| x > 0.0 && x.is_finite());
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut residuals = Vec::new();
    let mut obstacle_margin = [f64::INFINITY; 2];
    let mut sandwich_margin = [f64::INFINITY; 2];
    let mut flags = Vec::new();
    if strategies.iter().all(|s| s.atoms().is_empty()) {
        flags.push(NO_ATOMS_FLAG.to_string());
    }

    for player in Player::BOTH {
        let i = player.index();
        let w = &values[i];
        let own = &strategies[i];
        let rival = &strategies[player.other().index()];
        let pay = params.payoffs(player);
        let rival_pay = params.payoffs(player.other());
        let is_special = |x: f64| special.contains(&x);
        let rival_rate = |x: f64| rival.density().map_or(0.0, |k| k.rate(&pay, x));
        let own_density = own.density().map(|k| k.support(&rival_pay));
        let mut worst = std::collections::BTreeMap::new();
        for class in ResidualClass::ALL {
            worst.insert(class, Worst::new());
        }

        for bp in w.breakpoints() {
            let (left, right) = (w.value(bp), w.value_right(bp));
            worst
                .get_mut(&ResidualClass::Continuity)
                .unwrap()
                .add(right - left, left.abs().max(1.0), bp);
        }

        for &x in &grid {
            let value = w.value(x);
            let scale = value.abs().max(1.0);
            let above = s_top.is_none_or(|s| x > s);
            if above && !is_special(x) {
                let piece = w.piece_at(x);
                let (v, dv, d2v) = w.eval_kind(piece.kind, x);
                let lambda = rival_rate(x);
                let mut residual = d.resolvent_operator(x, v, dv, d2v) + lambda * (pay.follower(x) - v);
                if let PieceKind::Ode { a, b } = piece.kind {
                    residual = lambda * (pay.follower(x) - v);
                    let y = d.zeta(x);
                    let h = 1e-3 * y;
                    let hat = |y: f64| {
                        let x = d.zeta_inverse(y);
                        w.eval_kind(piece.kind, x).0 / d.psi(x)
                    };
                    let defect = hat(y + h) - 2.0 * hat(y) + hat(y - h);
                    let affine_scale = a.abs() + b.abs() * y + f64::MIN_POSITIVE;
                    worst.get_mut(&ResidualClass::Hjb).unwrap().add(defect, affine_scale, x);
                }
                let r = d.discount_rate();
                worst.get_mut(&ResidualClass::Hjb).unwrap().add(residual, r * scale, x);
            }
            if let Some((lo, hi)) = own_density {
                if x > lo && x <= hi {
                    worst.get_mut(&ResidualClass::ValueMatching).unwrap().add(
                        value - pay.exit(x),
                        pay.exit(x).abs().max(1.0),
                        x,
                    );
                }
            }
            if let Some((s, stopper)) = top {
                if x <= s {
                    let target = if stopper == player {
                        pay.exit(x)
                    } else {
                        pay.follower(x)
                    };
                    worst.get_mut(&ResidualClass::StoppingRegion).unwrap().add(
                        value - target,
                        target.abs().max(1.0),
                        x,
                    );
                }
            }
            let exit = pay.exit(x);
            let exit_scale = exit.abs().max(1.0);
            let margin = (value - exit) / exit_scale;
            obstacle_margin[i] = obstacle_margin[i].min(margin);
            let sandwich = ((value - pay.standalone_value(x)) / exit_scale)
                .min((pay.follower(x) - value) / pay.follower(x).abs().max(1.0));
            sandwich_margin[i] = sandwich_margin[i].min(sandwich);
            let violation = (-margin).max(-sandwich).max(0.0);
            worst.get_mut(&ResidualClass::Obstacle).unwrap().add(violation, 1.0, x);
        }

        for a in own.atoms() {
            let r = pay.exit(a.q);
            worst
                .get_mut(&ResidualClass::ValueMatching)
                .unwrap()
                .add(w.value(a.q) - r, r.abs().max(1.0), a.q);
            let slope = w.derivative_left(a.q);
            worst
                .get_mut(&ResidualClass::SmoothFit)
                .unwrap()
                .add(w.derivative_jump(a.q), slope.abs().max(1.0), a.q);
        }
        if let Some((s, stopper)) = top {
            if stopper == player && s > 0.0 {
                let slope = pay.exit_prime(s);
                worst.get_mut(&ResidualClass::SmoothFit).unwrap().add(
                    w.derivative_right(s) - slope,
                    slope.abs().max(1.0),
                    s,
                );
            }
        }

        for a in rival.atoms() {
            let half_jump = 0.5 * w.derivative_jump(a.q);
            let residual = half_jump + a.weight * (pay.follower(a.q) - w.value(a.q));
            worst
                .get_mut(&ResidualClass::JumpCondition)
                .unwrap()
                .add(residual, half_jump.abs().max(1.0), a.q);
        }

        let x_ref = hi;
        let ratios: Vec<f64> = [1e2, 1e6, 1e10]
            .iter()
            .map(|k| {
                let x = x_ref * k;
                w.value(x).abs() * d.psi(x_ref) / d.psi(x)
            })
            .collect();
        let decreasing = ratios.windows(2).all(|p| p[1] < p[0]) || ratios[0] == 0.0;
        let decay = if ratios[0] == 0.0 { 0.0 } else { ratios[2] / ratios[0] };

        for class in ResidualClass::ALL {
            let wst = worst.remove(&class).unwrap();
            let (scaled, passed) = match class {
                ResidualClass::Decay => (decay, decreasing && decay < spec.tolerance),
                ResidualClass::Obstacle => (wst.scaled, wst.scaled <= -MARGIN_TOLERANCE),
                _ => (wst.scaled, wst.scaled < spec.tolerance),
            };
            residuals.push(ClassResidual {
                class,
                player: i as u8 + 1,
                raw: if class == ResidualClass::Decay {
                    ratios[2]
                } else {
                    wst.raw
                },
                scaled,
                state: wst.state,
                passed: passed && scaled.is_finite(),
            });
        }
    }

    let certified = residuals.iter().all(|r| r.passed)
        && obstacle_margin
            .iter()
            .chain(&sandwich_margin)
            .all(|&m| m >= MARGIN_TOLERANCE);
    VerificationReport {
        tolerance: spec.tolerance,
        residuals,
        obstacle_margin,
        sandwich_margin,
        flags,
        certified,
    }
}
