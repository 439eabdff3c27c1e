//! Tangent-intersection recursion in hat coordinates.
//!
//! In the coordinate `y = ζ(x)` every solution of `L u = r u` is a straight
//! line and an exit payoff `R̂` is concave where continuation does not pay.
//! Two tangents to `R̂` at `x̂ < ẑ` meet at a point `ŷ` in between; the
//! recursion below runs this backwards, finding `ẑ` from `x̂` and `ŷ`.

use crate::diffusion::Diffusion;
use crate::equilibrium::Player;
use crate::error::{Error, Result};
use crate::payoffs::{DuopolyParams, PlayerPayoffs};
use crate::roots::{bisect_geometric, newton_polish};

/// A smooth function of the hat coordinate.
pub trait HatCurve {
    fn value(&self, y: f64) -> f64;
    fn slope(&self, y: f64) -> f64;
    fn curvature(&self, y: f64) -> f64;

    /// Intercept and slope of the tangent line at `p`.
    fn tangent(&self, p: f64) -> (f64, f64) {
        let s = self.slope(p);
        (self.value(p) - s * p, s)
    }
}

/// Hat image of a player's exit payoff.
#[derive(Debug, Clone, Copy)]
pub struct HatPayoff {
    payoffs: PlayerPayoffs,
}

impl HatPayoff {
    pub fn new(payoffs: PlayerPayoffs) -> Self {
        Self { payoffs }
    }

    pub fn payoffs(&self) -> &PlayerPayoffs {
        &self.payoffs
    }
}

impl HatCurve for HatPayoff {
    fn value(&self, y: f64) -> f64 {
        self.payoffs.exit_hat(y).0
    }

    fn slope(&self, y: f64) -> f64 {
        self.payoffs.exit_hat(y).1
    }

    fn curvature(&self, y: f64) -> f64 {
        self.payoffs.exit_hat(y).2
    }

    /// Uses the state-space tangent coefficients, which avoid the
    /// cancellation in `value − slope·p` at large `p`.
    fn tangent(&self, p: f64) -> (f64, f64) {
        let x = self.payoffs.model().zeta_inverse(p);
        self.payoffs.exit_tangent(x)
    }
}

/// Finds `ẑ > ŷ` such that the tangents to `curve` at `x̂` and `ẑ` meet at
/// `ŷ`, searching no further than `z_max`.
///
/// `curve` must be strictly concave on `[x̂, z_max]`. Returns
/// [`Error::ExitsDomain`] when no such `ẑ` exists below `z_max`.
pub fn alternating_step<C: HatCurve>(curve: &C, x_hat: f64, y_hat: f64, z_max: f64) -> Result<f64> {
    if !(x_hat > 0.0 && y_hat > x_hat) {
        return Err(Error::Bracket(format!(
            "alternating step needs 0 < x < y, got x = {x_hat:e}, y = {y_hat:e}"
        )));
    }
    let (ax, bx) = curve.tangent(x_hat);
    let target = ax + bx * y_hat;
    let gap = |z: f64| {
        let (a, b) = curve.tangent(z);
        (a + b * y_hat) - target
    };
    if !(z_max > y_hat) || gap(z_max) < 0.0 {
        return Err(Error::ExitsDomain(format!(
            "tangent from {x_hat:e} through {y_hat:e} meets no tangent below {z_max:e}"
        )));
    }
    let z = bisect_geometric(gap, y_hat, z_max, 1e-15, "alternating step")?;
    let slope = |z: f64| curve.curvature(z) * (y_hat - z);
    Ok(newton_polish(gap, slope, z, y_hat, z_max, 1e-16))
}

/// The intertwined atom locations generated from `q¹₁ = x_R¹` and a choice
/// of `q²₁`, listed as states in decreasing order: `q¹₁, q²₁, q¹₂, q²₂, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingSequence {
    pub states: Vec<f64>,
    /// Hat coordinates of `states`.
    pub hats: Vec<f64>,
    /// True when the recursion stopped because no further point exists
    /// above the state floor.
    pub exited: bool,
}

impl AlternatingSequence {
    /// Owner of the `k`-th element (0-based): player 1 at even positions.
    pub fn owner(k: usize) -> Player {
        if k.is_multiple_of(2) {
            Player::One
        } else {
            Player::Two
        }
    }
}

/// Runs the recursion until `len` points exist or the next point would fall
/// below `floor` in state space.
pub fn alternating_sequence(
    params: &DuopolyParams,
    q2_first: f64,
    len: usize,
    floor: f64,
) -> Result<AlternatingSequence> {
    let d = *params.model();
    let curves = [
        HatPayoff::new(params.payoffs(Player::One)),
        HatPayoff::new(params.payoffs(Player::Two)),
    ];
    let x_r1 = curves[0].payoffs().standalone().x_r;
    if !(q2_first < x_r1 && q2_first > floor) {
        return Err(Error::OutOfDomain(q2_first));
    }
    let z_max = d.zeta(floor);
    let mut hats = vec![d.zeta(x_r1), d.zeta(q2_first)];
    let mut exited = false;
    while hats.len() < len {
        let k = hats.len() - 2;
        let curve = &curves[AlternatingSequence::owner(k).index()];
        match alternating_step(curve, hats[k], hats[k + 1], z_max) {
            Ok(z) => hats.push(z),
            Err(Error::ExitsDomain(_)) => {
                exited = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    hats.truncate(len);
    let mut states: Vec<f64> = hats.iter().map(|&y| d.zeta_inverse(y)).collect();
    states[0] = x_r1;
    states[1] = q2_first;
    Ok(AlternatingSequence { states, hats, exited })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::DiffusionModel;

    struct Parabola(f64);

    impl HatCurve for Parabola {
        fn value(&self, y: f64) -> f64 {
            -0.5 * self.0 * y * y
        }
        fn slope(&self, y: f64) -> f64 {
            -self.0 * y
        }
        fn curvature(&self, _: f64) -> f64 {
            -self.0
        }
    }

    #[test]
    fn constant_curvature_reflects() {
        let z = alternating_step(&Parabola(3.0), 1.0, 1.7, 100.0).unwrap();
        assert!((z - 2.4).abs() < 1e-12);
    }

    #[test]
    fn exits_when_no_root() {
        let err = alternating_step(&Parabola(1.0), 1.0, 2.0, 2.5).unwrap_err();
        assert!(matches!(err, Error::ExitsDomain(_)));
    }

    #[test]
    fn baseline_tangents_meet() {
        let model = DiffusionModel::new(0.02, 0.2, 0.1).unwrap();
        let params = DuopolyParams::new(model, 1.0, 1.02, 5.0).unwrap();
        let curve = HatPayoff::new(params.payoffs(Player::One));
        let x = model.zeta(params.payoffs(Player::One).standalone().x_r);
        let y = model.zeta(0.04);
        let z = alternating_step(&curve, x, y, model.zeta(1e-6)).unwrap();
        let (a1, b1) = curve.tangent(x);
        let (a2, b2) = curve.tangent(z);
        let meet = (a1 - a2) / (b2 - b1);
        assert!(((meet - y) / y).abs() < 1e-10);
    }
}
