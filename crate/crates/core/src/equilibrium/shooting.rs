//! Type-2 profiles with `n` atoms for player 1 and `n − 1` for player 2.
//!
//! Fixing `q¹₁ = x_R¹`, the whole chain of atoms follows from `q²₁` by the
//! tangent-intersection recursion. The chain is closed by player 2's exit
//! threshold `s²`, which has to satisfy two conditions at once: value
//! matching of player 1 with `G¹`, and smooth fit of player 2. Each gives a
//! candidate `s²`; their log-mismatch is the shooting objective in `q²₁`.

use serde::{Deserialize, Serialize};

use crate::diffusion::Diffusion;
use crate::equilibrium::alternating::{alternating_sequence, alternating_step, HatPayoff};
use crate::equilibrium::construct::{assemble_type2, solve_exit_indifference};
use crate::equilibrium::profile::{EquilibriumProfile, ProfileKind};
use crate::equilibrium::strategy::Player;
use crate::equilibrium::verify::GridSpec;
use crate::error::{Error, Result};
use crate::payoffs::{log_grid, DuopolyParams};
use crate::roots::{bisect_geometric, newton_polish};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootingOptions {
    /// Number of log-spaced starting values of `q²₁` scanned for sign
    /// changes.
    pub seeds: usize,
    /// Let player 1 also exit on `(0, α¹]`.
    pub refine_trembling_hand: bool,
    /// Largest accepted `|objective|` at a bisected root.
    pub root_tolerance: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            seeds: 64,
            refine_trembling_hand: true,
            root_tolerance: 1e-8,
        }
    }
}

/// Closing values of the chain for one choice of `q²₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotResult {
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    /// `s²` from player 1's value matching.
    pub s2_value_matching: f64,
    /// `s²` from player 2's smooth fit; 0 when the tangent never closes.
    pub s2_smooth_fit: f64,
    /// `ln ζ(s²_vm) − ln ζ(s²_sf)`.
    pub objective: f64,
}

/// Evaluates the shooting objective at `q²₁` for `n ≥ 2` atoms of player 1.
/// Returns `None` when the chain leaves the state space above `α¹`.
pub fn shoot(params: &DuopolyParams, n: usize, q2_first: f64) -> Result<Option<ShotResult>> {
    if n < 2 {
        return Err(Error::InvalidParams("shooting needs n >= 2".into()));
    }
    let d = *params.model();
    let p1 = params.payoffs(Player::One);
    let alpha1 = p1.standalone().alpha;
    let seq = alternating_sequence(params, q2_first, 2 * n - 1, alpha1)?;
    if seq.states.len() < 2 * n - 1 {
        return Ok(None);
    }
    let q1: Vec<f64> = seq.states.iter().step_by(2).copied().collect();
    let q2: Vec<f64> = seq.states.iter().skip(1).step_by(2).copied().collect();
    let y_last = seq.hats[2 * n - 2];
    let y_alpha = d.zeta(alpha1);

    let line = p1.exit_tangent(q1[n - 1]);
    let y_vm = match follower_meets_line(params, line, y_last, y_alpha) {
        Ok(y) => y,
        Err(Error::Bracket(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let curve = HatPayoff::new(params.payoffs(Player::Two));
    let y_sf = match alternating_step(&curve, seq.hats[2 * n - 3], y_last, y_alpha) {
        Ok(y) => y,
        Err(Error::ExitsDomain(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(Some(ShotResult {
        q1,
        q2,
        s2_value_matching: d.zeta_inverse(y_vm),
        s2_smooth_fit: if y_sf.is_finite() { d.zeta_inverse(y_sf) } else { 0.0 },
        objective: y_vm.ln() - y_sf.ln(),
    }))
}

fn follower_meets_line(params: &DuopolyParams, (a, b): (f64, f64), lo: f64, hi: f64) -> Result<f64> {
    let p1 = params.payoffs(Player::One);
    let f = |y: f64| p1.follower_hat(y).0 - (a + b * y);
    let df = |y: f64| p1.follower_hat(y).1 - b;
    let y = bisect_geometric(f, lo, hi, 1e-15, "value matching of player 1")?;
    Ok(newton_polish(f, df, y, lo, hi, 1e-16))
}

/// Searches for a type-2 equilibrium with `n` atoms of player 1.
///
/// `n = 1` has no free parameter and reproduces the one-atom singular
/// profile. For `n ≥ 2` the objective is scanned over `q²₁ ∈ (x̲², x_R¹)`
/// and each sign change is bisected; the first root whose weights are all
/// positive is returned.
pub fn shoot_type2_equilibrium(params: &DuopolyParams, n: usize, opts: ShootingOptions) -> Result<EquilibriumProfile> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    params.check_endurance()?;
    let d = *params.model();
    let p1 = params.payoffs(Player::One);
    let sa1 = p1.standalone();
    let refine = opts.refine_trembling_hand;

    if n == 1 {
        let line = p1.exit_tangent(sa1.x_r);
        let y = follower_meets_line(params, line, d.zeta(sa1.x_r), d.zeta(sa1.alpha))?;
        let s2 = d.zeta_inverse(y);
        let (strategies, values) =
            assemble_type2(params, &[sa1.x_r], &[], s2, refine).map_err(|e| Error::NoType2Equilibrium {
                n,
                detail: e.to_string(),
            })?;
        return EquilibriumProfile::assemble(
            *params,
            ProfileKind::AlternatingType2,
            strategies,
            values,
            None,
            &GridSpec::default(),
        );
    }

    let x_under = solve_exit_indifference(params)?.x_under;
    let seeds = log_grid(x_under, sa1.x_r, opts.seeds.max(2) + 2);
    let seeds = &seeds[1..seeds.len() - 1];
    let mut values = Vec::with_capacity(seeds.len());
    for &q in seeds {
        values.push(shoot(params, n, q)?.map(|s| s.objective));
    }

    let mut brackets = Vec::new();
    for k in 0..seeds.len() - 1 {
        if let (Some(a), Some(b)) = (values[k], values[k + 1]) {
            if a.signum() != b.signum() {
                brackets.push((seeds[k], seeds[k + 1]));
            }
        }
    }
    let mut rejected = Vec::new();
    for &(lo, hi) in &brackets {
        let objective = |q: f64| match shoot(params, n, q) {
            Ok(Some(s)) => s.objective,
            _ => f64::NAN,
        };
        let q = match bisect_geometric(objective, lo, hi, 1e-15, "type-2 shooting") {
            Ok(q) => q,
            Err(e) => {
                rejected.push(e.to_string());
                continue;
            }
        };
        let shot = match shoot(params, n, q)? {
            Some(s) if s.objective.abs() <= opts.root_tolerance => s,
            Some(s) => {
                rejected.push(format!("discontinuity at q2_1 = {q:e}, objective {:e}", s.objective));
                continue;
            }
            None => continue,
        };
        match assemble_type2(params, &shot.q1, &shot.q2, shot.s2_value_matching, refine) {
            Ok((strategies, vals)) => {
                let mut profile = EquilibriumProfile::assemble(
                    *params,
                    ProfileKind::AlternatingType2,
                    strategies,
                    vals,
                    None,
                    &GridSpec::default(),
                )?;
                if brackets.len() > 1 {
                    profile.report.flags.push(format!(
                        "shooting objective has {} sign changes; returned the first valid root",
                        brackets.len()
                    ));
                }
                return Ok(profile);
            }
            Err(e) => rejected.push(format!("root q2_1 = {q:e} rejected: {e}")),
        }
    }
    let detail = if brackets.is_empty() {
        format!("objective has no sign change over {} seeds", seeds.len())
    } else {
        rejected.join("; ")
    };
    Err(Error::NoType2Equilibrium { n, detail })
}
