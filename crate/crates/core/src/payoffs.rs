//! Duopoly exit payoffs.
//!
//! Both firms earn the flow `X_t` while active; a firm left alone earns
//! `m X_t`. Exiting pays the liquidation value `lⁱ`. Expressed relative to
//! the perpetuity `E(x) = x/(r−b)` of staying active forever, the leader
//! (exit) payoff is `Rⁱ = lⁱ − E` and the follower payoff is
//! `Gⁱ = V_mⁱ − E`, where `V_mⁱ` is the value of a monopolist that exits
//! optimally.

use serde::{Deserialize, Serialize};

use crate::diffusion::{hat_curvature, hat_slope, Diffusion, DiffusionModel};
use crate::equilibrium::Player;
use crate::error::{Error, Result};

/// Parameters of the two-firm exit game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuopolyParams {
    model: DiffusionModel,
    l1: f64,
    l2: f64,
    m: f64,
}

/// Wire form of the firm-specific parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuopolySpec {
    pub l1: f64,
    pub l2: f64,
    pub m: f64,
}

impl DuopolyParams {
    pub fn new(model: DiffusionModel, l1: f64, l2: f64, m: f64) -> Result<Self> {
        for (name, l) in [("l1", l1), ("l2", l2)] {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {l}")));
            }
        }
        if !(m > 1.0) || !m.is_finite() {
            return Err(Error::InvalidParams(format!("m must exceed 1, got {m}")));
        }
        Ok(Self { model, l1, l2, m })
    }

    pub fn from_spec(model: DiffusionModel, spec: DuopolySpec) -> Result<Self> {
        Self::new(model, spec.l1, spec.l2, spec.m)
    }

    pub fn spec(&self) -> DuopolySpec {
        DuopolySpec {
            l1: self.l1,
            l2: self.l2,
            m: self.m,
        }
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn liquidation(&self, player: Player) -> f64 {
        match player {
            Player::One => self.l1,
            Player::Two => self.l2,
        }
    }

    pub fn payoffs(&self, player: Player) -> PlayerPayoffs {
        PlayerPayoffs {
            model: self.model,
            l: self.liquidation(player),
            m: self.m,
            player,
        }
    }

    /// Requires player 1 to be at least as enduring, i.e. `x_R¹ ≤ x_R²`.
    pub fn check_endurance(&self) -> Result<()> {
        let x_r1 = self.payoffs(Player::One).standalone().x_r;
        let x_r2 = self.payoffs(Player::Two).standalone().x_r;
        if x_r1 > x_r2 {
            return Err(Error::EnduranceOrdering { x_r1, x_r2 });
        }
        Ok(())
    }

    /// Multiplies both liquidation values by `kappa`. Every threshold of the
    /// game scales by the same factor.
    pub fn scaled(&self, kappa: f64) -> Result<Self> {
        Self::new(self.model, kappa * self.l1, kappa * self.l2, self.m)
    }
}

/// Payoff evaluators of one player.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerPayoffs {
    model: DiffusionModel,
    l: f64,
    m: f64,
    player: Player,
}

/// Solution of the exit problem against a rival that never exits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandAloneSolution {
    /// Optimal exit threshold `x_R`.
    pub x_r: f64,
    /// Exit threshold of the monopolist, `x_R/m`.
    pub alpha: f64,
    /// Root of `L R − r R`, where staying starts to pay off.
    pub x0: f64,
    /// `R(x_R)/φ(x_R)`: the value above `x_R` is this multiple of `φ`.
    pub phi_coefficient: f64,
}

impl PlayerPayoffs {
    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn liquidation(&self) -> f64 {
        self.l
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    fn annuity(&self) -> f64 {
        self.model.r() - self.model.b()
    }

    /// Value of the perpetual duopoly profit stream.
    pub fn perpetuity(&self, x: f64) -> f64 {
        x / self.annuity()
    }

    pub fn exit(&self, x: f64) -> f64 {
        self.l - self.perpetuity(x)
    }

    pub fn exit_prime(&self, _x: f64) -> f64 {
        -1.0 / self.annuity()
    }

    /// `(L R − r R)(x) = x − r l`.
    pub fn exit_generator(&self, x: f64) -> f64 {
        x - self.model.r() * self.l
    }

    pub fn standalone(&self) -> StandAloneSolution {
        let rm = self.model.rho_minus();
        let x_r = rm / (rm - 1.0) * self.annuity() * self.l;
        StandAloneSolution {
            x_r,
            alpha: x_r / self.m,
            x0: self.model.r() * self.l,
            phi_coefficient: self.exit(x_r) / self.model.phi(x_r),
        }
    }

    /// Stand-alone value `V_R`: `R` below `x_R`, a multiple of `φ` above.
    pub fn standalone_value(&self, x: f64) -> f64 {
        let sa = self.standalone();
        if x <= sa.x_r {
            self.exit(x)
        } else {
            sa.phi_coefficient * self.model.phi(x)
        }
    }

    /// Coefficient `R(x_R)/φ(α)` of the `φ` term in the monopoly value.
    fn monopoly_option(&self) -> (f64, f64) {
        let sa = self.standalone();
        (sa.alpha, self.exit(sa.x_r) / self.model.phi(sa.alpha))
    }

    /// Value `V_m` of a monopolist that exits optimally at `α`.
    pub fn monopoly(&self, x: f64) -> f64 {
        self.follower(x) + self.perpetuity(x)
    }

    pub fn follower(&self, x: f64) -> f64 {
        let (alpha, c) = self.monopoly_option();
        if x <= alpha {
            self.exit(x)
        } else {
            (self.m - 1.0) * self.perpetuity(x) + c * self.model.phi(x)
        }
    }

    /// Derivative of `G`; at the kink `α` the left derivative is returned.
    pub fn follower_prime(&self, x: f64) -> f64 {
        let (alpha, c) = self.monopoly_option();
        if x <= alpha {
            self.exit_prime(x)
        } else {
            (self.m - 1.0) / self.annuity() + c * self.model.phi_prime(x)
        }
    }

    pub fn follower_second(&self, x: f64) -> f64 {
        let (alpha, c) = self.monopoly_option();
        if x <= alpha {
            0.0
        } else {
            c * self.model.phi_second(x)
        }
    }

    /// `(L G − r G)(x)`, zero above `α` by construction.
    pub fn follower_generator(&self, x: f64) -> f64 {
        let (alpha, _) = self.monopoly_option();
        if x <= alpha {
            self.exit_generator(x)
        } else {
            0.0
        }
    }

    /// Coefficients `(A, B)` of the solution `Aψ + Bφ` of `L u = r u` that is
    /// tangent to `R` at `q`. Exactly `(0, R(x_R)/φ(x_R))` within relative
    /// `1e-12` of `x_R`, where smooth fit removes the `ψ` term.
    pub fn exit_tangent(&self, q: f64) -> (f64, f64) {
        let sa = self.standalone();
        if (q - sa.x_r).abs() <= 1e-12 * sa.x_r {
            return (0.0, sa.phi_coefficient);
        }
        let d = &self.model;
        let (r, dr) = (self.exit(q), self.exit_prime(q));
        let w = d.wronskian(q);
        let a = (d.phi(q) * dr - d.phi_prime(q) * r) / w;
        let b = (d.psi_prime(q) * r - d.psi(q) * dr) / w;
        (a, b)
    }

    /// Hat image of `R` at `y = ζ(x)`: value, slope and curvature.
    pub fn exit_hat(&self, y: f64) -> (f64, f64, f64) {
        let d = &self.model;
        let x = d.zeta_inverse(y);
        let (r, dr) = (self.exit(x), self.exit_prime(x));
        (r / d.psi(x), hat_slope(d, x, r, dr), hat_curvature(d, x, r, dr, 0.0))
    }

    /// Hat image of `G` at `y = ζ(x)`: value and slope.
    pub fn follower_hat(&self, y: f64) -> (f64, f64) {
        let d = &self.model;
        let x = d.zeta_inverse(y);
        let g = self.follower(x);
        (g / d.psi(x), hat_slope(d, x, g, self.follower_prime(x)))
    }
}

/// One named check of [`assumption_audit`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditCheck {
    pub name: &'static str,
    pub player: Player,
    pub passed: bool,
    /// First offending grid point, if any.
    pub offending_state: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Numerical audit of the standing assumptions on the payoffs over a grid.
///
/// Checks, per player: the single sign change of `L R − r R` at `x₀`;
/// `G ≥ V_R` with equality exactly up to `α`; `L G − r G ≤ 0` off the kink;
/// positivity of `G`; decay of `|R|/φ` towards 0 and of `G/ψ` towards ∞ at
/// the grid ends.
pub fn assumption_audit(params: &DuopolyParams, grid: &[f64]) -> Result<AuditReport> {
    if grid.len() < 4 {
        return Err(Error::InvalidParams("audit grid needs at least 4 points".into()));
    }
    if grid[0] <= 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) || !grid[grid.len() - 1].is_finite() {
        return Err(Error::InvalidParams(
            "audit grid must be positive and strictly increasing".into(),
        ));
    }
    let mut checks = Vec::new();
    for player in Player::BOTH {
        let p = params.payoffs(player);
        let d = p.model();
        let sa = p.standalone();
        let scale = p.liquidation().max(1.0);

        let bad = grid.iter().copied().find(|&x| {
            let g = d.resolvent_operator(x, p.exit(x), p.exit_prime(x), 0.0);
            let tol = 1e-12 * scale;
            (x < sa.x0 && g >= tol) || (x > sa.x0 && g <= -tol)
        });
        checks.push(check(
            "single crossing of L R - r R",
            player,
            bad,
            format!("x0 = {:e}", sa.x0),
        ));

        let bad = grid.iter().copied().find(|&x| {
            let (g, v) = (p.follower(x), p.standalone_value(x));
            let tol = 1e-12 * scale.max(g.abs());
            if x <= sa.alpha {
                (g - v).abs() > tol
            } else {
                g - v <= -tol || (x > sa.alpha * (1.0 + 1e-9) && g <= v)
            }
        });
        checks.push(check("G >= V_R, equal exactly below alpha", player, bad, String::new()));

        let bad = grid.iter().copied().find(|&x| {
            if (x - sa.alpha).abs() <= 1e-12 * sa.alpha {
                return false;
            }
            let g = d.resolvent_operator(x, p.follower(x), p.follower_prime(x), p.follower_second(x));
            let tol = 1e-9 * (scale + p.follower(x).abs());
            g > tol
        });
        checks.push(check("L G - r G <= 0 off the kink", player, bad, String::new()));

        let bad = grid.iter().copied().find(|&x| !(p.follower(x) > 0.0));
        checks.push(check("G > 0", player, bad, String::new()));

        let (x_a, x_b) = (grid[0], grid[1]);
        let low = |x: f64| p.exit(x).abs() / d.phi(x);
        let bad = (low(x_a) >= low(x_b)).then_some(x_a);
        checks.push(check("|R|/phi decays towards 0", player, bad, String::new()));

        let n = grid.len();
        let (x_c, x_d) = (grid[n - 2], grid[n - 1]);
        let high = |x: f64| p.follower(x) / d.psi(x);
        let bad = (high(x_d) >= high(x_c)).then_some(x_d);
        checks.push(check("G/psi decays towards infinity", player, bad, String::new()));
    }
    Ok(AuditReport { checks })
}

fn check(name: &'static str, player: Player, bad: Option<f64>, detail: String) -> AuditCheck {
    AuditCheck {
        name,
        player,
        passed: bad.is_none(),
        offending_state: bad,
        detail,
    }
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline() -> DuopolyParams {
        let model = DiffusionModel::new(0.02, 0.2, 0.1).unwrap();
        DuopolyParams::new(model, 1.0, 1.02, 5.0).unwrap()
    }

    #[test]
    fn perpetuity_and_exit() {
        let p = baseline().payoffs(Player::One);
        assert!((p.perpetuity(0.08) - 1.0).abs() < 1e-15);
        assert!(p.exit(0.08).abs() < 1e-15);
    }

    #[test]
    fn standalone_thresholds() {
        let params = baseline();
        let s1 = params.payoffs(Player::One).standalone();
        let s2 = params.payoffs(Player::Two).standalone();
        assert!((s1.x_r / 0.055_278_640_450_004_206 - 1.0).abs() < 1e-13);
        assert!((s2.x_r / 0.056_384_213_259_004_29 - 1.0).abs() < 1e-13);
        assert!((s1.alpha / 0.011_055_728_090_000_841 - 1.0).abs() < 1e-13);
        assert!((s2.alpha / 0.011_276_842_651_800_858 - 1.0).abs() < 1e-13);
        assert_eq!(s1.x0, 0.1);
    }

    #[test]
    fn smooth_fit_at_standalone_threshold() {
        let p = baseline().payoffs(Player::One);
        let d = *p.model();
        let sa = p.standalone();
        let lhs = p.exit_prime(sa.x_r);
        let rhs = d.phi_prime(sa.x_r) * p.exit(sa.x_r) / d.phi(sa.x_r);
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs());
    }

    #[test]
    fn follower_equals_exit_below_alpha() {
        for player in Player::BOTH {
            let p = baseline().payoffs(player);
            let x = p.standalone().alpha / 2.0;
            assert_eq!(p.follower(x), p.exit(x));
        }
    }

    #[test]
    fn follower_golden() {
        let p = baseline().payoffs(Player::One);
        assert!((p.follower(0.0278468) / 1.431_505_064_255_522_5 - 1.0).abs() < 1e-12);
        let p2 = baseline().payoffs(Player::Two);
        assert!((p2.follower(0.055_278_640_450_004_206) / 2.772_945_007_755_71 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tangent_at_standalone_threshold_is_pure_phi() {
        let p = baseline().payoffs(Player::Two);
        let sa = p.standalone();
        let (a, b) = p.exit_tangent(sa.x_r);
        assert_eq!(a, 0.0);
        assert_eq!(b, sa.phi_coefficient);
    }

    #[test]
    fn hat_curvature_sign_matches_generator() {
        let p = baseline().payoffs(Player::One);
        let d = *p.model();
        for x in log_grid(0.005, 0.5, 50) {
            if (x - 0.1).abs() < 1e-4 {
                continue;
            }
            let (_, _, c) = p.exit_hat(d.zeta(x));
            assert_eq!(c.signum(), p.exit_generator(x).signum(), "x = {x}");
        }
    }

    #[test]
    fn audit_baseline_passes() {
        let report = assumption_audit(&baseline(), &log_grid(1e-3, 10.0, 200)).unwrap();
        assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn rejects_degenerate_m() {
        let model = DiffusionModel::new(0.02, 0.2, 0.1).unwrap();
        assert!(DuopolyParams::new(model, 1.0, 1.0, 1.0).is_err());
        assert!(DuopolyParams::new(model, 0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn endurance_ordering() {
        let model = DiffusionModel::new(0.02, 0.2, 0.1).unwrap();
        let swapped = DuopolyParams::new(model, 1.02, 1.0, 5.0).unwrap();
        assert!(matches!(
            swapped.check_endurance(),
            Err(Error::EnduranceOrdering { .. })
        ));
        assert!(baseline().check_endurance().is_ok());
    }
}
