use crate::diffusion::{Diffusion, DiffusionModel};
use crate::error::{Error, Result};
use crate::payoffs::PlayerPayoffs;

/// Closed form used on one interval of a candidate value function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PieceKind {
    /// `Aψ + Bφ`, a solution of `L u = r u`.
    Ode { a: f64, b: f64 },
    /// The player's exit payoff `R`.
    Exit,
    /// The player's follower payoff `G`.
    Follower,
}

/// `kind` on `(lo, hi]`; the first piece starts at 0 and the last ends at
/// infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuePiece {
    pub lo: f64,
    pub hi: f64,
    pub kind: PieceKind,
}

/// A candidate value function built from closed-form pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseValue {
    payoffs: PlayerPayoffs,
    pieces: Vec<ValuePiece>,
}

impl PiecewiseValue {
    pub fn new(payoffs: PlayerPayoffs, pieces: Vec<ValuePiece>) -> Result<Self> {
        let (first, last) = match (pieces.first(), pieces.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::InvalidValue("no pieces".into())),
        };
        if first.lo != 0.0 || last.hi != f64::INFINITY {
            return Err(Error::InvalidValue("pieces must cover (0, inf)".into()));
        }
        if pieces.iter().any(|p| !(p.hi > p.lo)) {
            return Err(Error::InvalidValue("empty piece".into()));
        }
        if pieces.windows(2).any(|w| w[0].hi != w[1].lo) {
            return Err(Error::InvalidValue("pieces must be contiguous".into()));
        }
        for p in &pieces {
            if let PieceKind::Ode { a, b } = p.kind {
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidValue(format!(
                        "non-finite coefficients on ({}, {}]",
                        p.lo, p.hi
                    )));
                }
            }
        }
        Ok(Self { payoffs, pieces })
    }

    /// Builds pieces from consecutive breakpoints `0 < c₁ < … < c_k` and
    /// `k + 1` kinds.
    pub fn from_breakpoints(payoffs: PlayerPayoffs, breakpoints: &[f64], kinds: &[PieceKind]) -> Result<Self> {
        if kinds.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidValue("need one more kind than breakpoints".into()));
        }
        let mut edges = Vec::with_capacity(kinds.len() + 1);
        edges.push(0.0);
        edges.extend_from_slice(breakpoints);
        edges.push(f64::INFINITY);
        let pieces = kinds
            .iter()
            .zip(edges.windows(2))
            .map(|(&kind, w)| ValuePiece {
                lo: w[0],
                hi: w[1],
                kind,
            })
            .collect();
        Self::new(payoffs, pieces)
    }

    pub fn payoffs(&self) -> &PlayerPayoffs {
        &self.payoffs
    }

    fn model(&self) -> &DiffusionModel {
        self.payoffs.model()
    }

    pub fn pieces(&self) -> &[ValuePiece] {
        &self.pieces
    }

    /// Interior breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|p| p.lo).collect()
    }

    /// Index of the piece with `lo < x ≤ hi`.
    pub fn piece_index(&self, x: f64) -> usize {
        self.pieces.partition_point(|p| p.hi < x).min(self.pieces.len() - 1)
    }

    pub fn piece_at(&self, x: f64) -> &ValuePiece {
        &self.pieces[self.piece_index(x)]
    }

    /// Value, slope and second derivative of a kind at `x`.
    pub fn eval_kind(&self, kind: PieceKind, x: f64) -> (f64, f64, f64) {
        let d = self.model();
        let p = &self.payoffs;
        match kind {
            PieceKind::Ode { a, b } => (
                a * d.psi(x) + b * d.phi(x),
                a * d.psi_prime(x) + b * d.phi_prime(x),
                a * d.psi_second(x) + b * d.phi_second(x),
            ),
            PieceKind::Exit => (p.exit(x), p.exit_prime(x), 0.0),
            PieceKind::Follower => (p.follower(x), p.follower_prime(x), p.follower_second(x)),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval_kind(self.piece_at(x).kind, x).0
    }

    /// Derivative from the left, `w'(x⁻)`.
    pub fn derivative_left(&self, x: f64) -> f64 {
        self.eval_kind(self.piece_at(x).kind, x).1
    }

    /// Derivative from the right, `w'(x⁺)`.
    pub fn derivative_right(&self, x: f64) -> f64 {
        let i = self.piece_index(x);
        let i = if self.pieces[i].hi == x { i + 1 } else { i };
        self.eval_kind(self.pieces[i].kind, x).1
    }

    /// `Δw'(x) = w'(x⁺) − w'(x⁻)`.
    pub fn derivative_jump(&self, x: f64) -> f64 {
        self.derivative_right(x) - self.derivative_left(x)
    }

    /// Value of the right neighbour's closed form at a breakpoint.
    pub fn value_right(&self, x: f64) -> f64 {
        let i = self.piece_index(x);
        let i = if self.pieces[i].hi == x { i + 1 } else { i };
        self.eval_kind(self.pieces[i].kind, x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::Player;
    use crate::payoffs::DuopolyParams;

    fn payoffs() -> PlayerPayoffs {
        let model = DiffusionModel::new(0.02, 0.2, 0.1).unwrap();
        DuopolyParams::new(model, 1.0, 1.02, 5.0).unwrap().payoffs(Player::One)
    }

    #[test]
    fn standalone_value_as_pieces() {
        let p = payoffs();
        let sa = p.standalone();
        let w = PiecewiseValue::from_breakpoints(
            p,
            &[sa.x_r],
            &[
                PieceKind::Exit,
                PieceKind::Ode {
                    a: 0.0,
                    b: sa.phi_coefficient,
                },
            ],
        )
        .unwrap();
        for x in [0.01, sa.x_r, 0.07, 1.0] {
            assert!((w.value(x) - p.standalone_value(x)).abs() < 1e-14);
        }
        assert!(w.derivative_jump(sa.x_r).abs() < 1e-12);
        assert_eq!(w.piece_index(sa.x_r), 0);
        assert_eq!(w.piece_index(sa.x_r * 1.0001), 1);
    }

    #[test]
    fn rejects_gaps() {
        let p = payoffs();
        let pieces = vec![
            ValuePiece {
                lo: 0.0,
                hi: 0.01,
                kind: PieceKind::Exit,
            },
            ValuePiece {
                lo: 0.02,
                hi: f64::INFINITY,
                kind: PieceKind::Exit,
            },
        ];
        assert!(PiecewiseValue::new(p, pieces).is_err());
    }
}
