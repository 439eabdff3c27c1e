//! Feasibility of the one-atom singular equilibrium over a parameter grid.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::DiffusionModel;
use crate::equilibrium::{singular_summary, FeasibilityStatus};
use crate::error::Result;
use crate::payoffs::DuopolyParams;

/// Cartesian grid over drift, volatility, market size and the ratio
/// `l²/l¹` of liquidation values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub b: Vec<f64>,
    pub sigma: Vec<f64>,
    pub m: Vec<f64>,
    pub liquidation_ratio: Vec<f64>,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_l1")]
    pub l1: f64,
}

fn default_r() -> f64 {
    0.1
}

fn default_l1() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Feasible,
    Marginal,
    Infeasible,
    /// The parameters are outside the model (for instance `b ≥ r`).
    Invalid,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Feasible => "feasible",
            CellStatus::Marginal => "marginal",
            CellStatus::Infeasible => "infeasible",
            CellStatus::Invalid => "invalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub b: f64,
    pub sigma: f64,
    pub m: f64,
    pub liquidation_ratio: f64,
    pub status: CellStatus,
    pub theta: Option<f64>,
    pub x_under: Option<f64>,
    pub weight: Option<f64>,
    /// Margins of the three inequalities, in order.
    pub margins: [Option<f64>; 3],
    pub reason: Option<String>,
}

impl SweepGrid {
    pub fn cells(&self) -> Vec<(f64, f64, f64, f64)> {
        let mut out = Vec::new();
        for &b in &self.b {
            for &s in &self.sigma {
                for &m in &self.m {
                    for &k in &self.liquidation_ratio {
                        out.push((b, s, m, k));
                    }
                }
            }
        }
        out
    }
}

fn evaluate(grid: &SweepGrid, (b, sigma, m, ratio): (f64, f64, f64, f64)) -> SweepCell {
    let mut cell = SweepCell {
        b,
        sigma,
        m,
        liquidation_ratio: ratio,
        status: CellStatus::Invalid,
        theta: None,
        x_under: None,
        weight: None,
        margins: [None; 3],
        reason: None,
    };
    let params: Result<DuopolyParams> = DiffusionModel::new(b, sigma, grid.r)
        .and_then(|model| DuopolyParams::new(model, grid.l1, ratio * grid.l1, m))
        .and_then(|p| p.check_endurance().map(|_| p));
    let params = match params {
        Ok(p) => p,
        Err(e) => {
            cell.reason = Some(e.to_string());
            return cell;
        }
    };
    match singular_summary(&params) {
        Ok(s) => {
            cell.theta = Some(s.indifference.theta);
            cell.x_under = Some(s.indifference.x_under);
            cell.weight = Some(s.weight);
            for (slot, c) in cell.margins.iter_mut().zip(&s.feasibility.conditions) {
                *slot = Some(c.margin);
            }
            let failed: Vec<&str> = s.feasibility.failures().map(|c| c.name.as_str()).collect();
            cell.status = if !failed.is_empty() {
                cell.reason = Some(format!("{} fails", failed.join("; ")));
                CellStatus::Infeasible
            } else if s.feasibility.marginal() {
                let c = s
                    .feasibility
                    .conditions
                    .iter()
                    .find(|c| c.status == FeasibilityStatus::Marginal);
                cell.reason = c.map(|c| format!("{} holds only marginally", c.name));
                CellStatus::Marginal
            } else {
                CellStatus::Feasible
            };
        }
        Err(e) => {
            cell.status = if e.is_infeasibility() {
                CellStatus::Infeasible
            } else {
                CellStatus::Invalid
            };
            cell.reason = Some(e.to_string());
        }
    }
    cell
}

/// Evaluates every cell; the output order follows [`SweepGrid::cells`].
pub fn feasibility_sweep(grid: &SweepGrid) -> Vec<SweepCell> {
    grid.cells().into_par_iter().map(|c| evaluate(grid, c)).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.16e}"))
}

pub fn write_sweep_csv<W: Write>(mut out: W, cells: &[SweepCell]) -> io::Result<()> {
    writeln!(
        out,
        "b,sigma,m,liquidation_ratio,status,theta,x_under2,a1,margin_g2_above_tangent,margin_tangent_above_standalone,margin_concave_kink,reason"
    )?;
    for c in cells {
        let reason = c.reason.as_deref().unwrap_or("").replace('"', "'");
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{},{},{},{},\"{}\"",
            c.b,
            c.sigma,
            c.m,
            c.liquidation_ratio,
            c.status.as_str(),
            opt(c.theta),
            opt(c.x_under),
            opt(c.weight),
            opt(c.margins[0]),
            opt(c.margins[1]),
            opt(c.margins[2]),
            reason
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_cell_is_feasible() {
        let grid = SweepGrid {
            b: vec![0.02, 0.2],
            sigma: vec![0.2],
            m: vec![5.0],
            liquidation_ratio: vec![1.02],
            r: 0.1,
            l1: 1.0,
        };
        let cells = feasibility_sweep(&grid);
        assert_eq!(cells[0].status, CellStatus::Feasible);
        assert_eq!(cells[1].status, CellStatus::Invalid);
    }
}
