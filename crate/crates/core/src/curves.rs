//! Market-value curves of an equilibrium profile, for plotting.
//!
//! Market values add the perpetuity `E(x)` back to the net values `wⁱ`,
//! so that `Fⁱ = wⁱ + E`, `Vⁱ_m` is the monopolist's value and the exit
//! payoff becomes the flat liquidation value `lⁱ`.

use std::io::{self, Write};

use serde::Serialize;

use crate::equilibrium::{EquilibriumProfile, Player};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub x: f64,
    pub e: f64,
    pub vm1: f64,
    pub vm2: f64,
    pub f1: f64,
    pub f2: f64,
    pub l1: f64,
    pub l2: f64,
}

/// A point where a market value has a corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kink {
    pub player: u8,
    pub x: f64,
    pub slope_left: f64,
    pub slope_right: f64,
}

pub fn market_curves(profile: &EquilibriumProfile, grid: &[f64]) -> Result<Vec<CurveRow>> {
    if let Some(&x) = grid.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::OutOfDomain(x));
    }
    let p1 = profile.params.payoffs(Player::One);
    let p2 = profile.params.payoffs(Player::Two);
    Ok(grid
        .iter()
        .map(|&x| CurveRow {
            x,
            e: p1.perpetuity(x),
            vm1: p1.monopoly(x),
            vm2: p2.monopoly(x),
            f1: profile.market_value(Player::One, x),
            f2: profile.market_value(Player::Two, x),
            l1: p1.liquidation(),
            l2: p2.liquidation(),
        })
        .collect())
}

/// Breakpoints of each player's value where the slope jumps by more than
/// `tol` relative to the slopes on either side.
pub fn kinks(profile: &EquilibriumProfile, tol: f64) -> Vec<Kink> {
    let mut out = Vec::new();
    for p in Player::BOTH {
        let w = profile.value(p);
        let de = 1.0 / (profile.params.model().r() - profile.params.model().b());
        for x in w.breakpoints() {
            let (l, r) = (w.derivative_left(x) + de, w.derivative_right(x) + de);
            if (r - l).abs() > tol * l.abs().max(r.abs()).max(1.0) {
                out.push(Kink {
                    player: p.index() as u8 + 1,
                    x,
                    slope_left: l,
                    slope_right: r,
                });
            }
        }
    }
    out
}

pub fn write_curves_csv<W: Write>(mut out: W, rows: &[CurveRow]) -> io::Result<()> {
    writeln!(out, "x,E,Vm1,Vm2,F1,F2,l1,l2")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.x, r.e, r.vm1, r.vm2, r.f1, r.f2, r.l1, r.l2
        )?;
    }
    Ok(())
}
