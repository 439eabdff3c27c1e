use std::io::{self, Write};

use crate::simulate::{DeviationSweep, PayoffEstimate, StopCause};

/// One row of the simulation CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRow {
    pub player: u8,
    pub x0: f64,
    /// Deviation threshold, or the player's top atom for profile estimates.
    pub threshold_or_atom: Option<f64>,
    pub mean: f64,
    pub se: f64,
    pub bias_bound: Option<f64>,
    pub n_paths: usize,
    pub causes: [u64; 5],
}

impl SimRow {
    pub fn from_estimate(e: &PayoffEstimate, top_atom: Option<f64>) -> Self {
        Self {
            player: e.player,
            x0: e.x0,
            threshold_or_atom: top_atom,
            mean: e.mean,
            se: e.se,
            bias_bound: e.truncation_bias_bound,
            n_paths: e.n_paths,
            causes: StopCause::ALL.map(|c| e.count(c)),
        }
    }

    pub fn from_sweep(s: &DeviationSweep) -> Vec<Self> {
        s.points
            .iter()
            .map(|p| Self {
                player: s.player,
                x0: s.x0,
                threshold_or_atom: Some(p.threshold),
                mean: p.mean,
                se: p.se,
                bias_bound: p.truncation_bias_bound,
                n_paths: s.n_paths,
                causes: StopCause::ALL.map(|c| p.causes.iter().find(|s| s.cause == c).map_or(0, |s| s.count)),
            })
            .collect()
    }
}

fn float(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.16e}"))
}

pub fn write_sim_csv<W: Write>(mut out: W, rows: &[SimRow]) -> io::Result<()> {
    write!(out, "player,x0,threshold_or_atom,mean,se,bias_bound,n_paths")?;
    for c in StopCause::ALL {
        write!(out, ",stop_cause_{}", c.as_str())?;
    }
    writeln!(out)?;
    for r in rows {
        write!(
            out,
            "{},{},{},{},{},{},{}",
            r.player,
            float(Some(r.x0)),
            float(r.threshold_or_atom),
            float(Some(r.mean)),
            float(Some(r.se)),
            float(r.bias_bound),
            r.n_paths
        )?;
        for c in r.causes {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
