use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::equilibrium::construct::FeasibilityReport;
use crate::equilibrium::strategy::{MarkovStrategy, Player};
use crate::equilibrium::value::PiecewiseValue;
use crate::equilibrium::verify::{verify_variational_system, GridSpec, VerificationReport};
use crate::error::{Error, Result};
use crate::payoffs::DuopolyParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Pure,
    StubbornPure,
    Symmetric,
    SingularN1,
    AlternatingType2,
    External,
}

impl ProfileKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileKind::Pure => "pure",
            ProfileKind::StubbornPure => "stubborn-pure",
            ProfileKind::Symmetric => "symmetric",
            ProfileKind::SingularN1 => "singular-n1",
            ProfileKind::AlternatingType2 => "alternating-type2",
            ProfileKind::External => "external",
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            ProfileKind::Pure,
            ProfileKind::StubbornPure,
            ProfileKind::Symmetric,
            ProfileKind::SingularN1,
            ProfileKind::AlternatingType2,
            ProfileKind::External,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown profile kind {s:?}")))
    }
}

/// A strategy pair with candidate values and their verification.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumProfile {
    pub params: DuopolyParams,
    pub kind: ProfileKind,
    pub strategies: [MarkovStrategy; 2],
    pub values: [PiecewiseValue; 2],
    pub report: VerificationReport,
    pub feasibility: Option<FeasibilityReport>,
}

impl EquilibriumProfile {
    /// Validates the strategies against the payoffs, then verifies.
    pub fn assemble(
        params: DuopolyParams,
        kind: ProfileKind,
        strategies: [MarkovStrategy; 2],
        values: [PiecewiseValue; 2],
        feasibility: Option<FeasibilityReport>,
        grid: &GridSpec,
    ) -> Result<Self> {
        for p in Player::BOTH {
            strategies[p.index()].check_support(&params.payoffs(p), &params.payoffs(p.other()))?;
            if values[p.index()].payoffs() != &params.payoffs(p) {
                return Err(Error::InvalidValue(format!("value of {p} built from other payoffs")));
            }
        }
        let mut profile = Self {
            params,
            kind,
            strategies,
            values,
            report: VerificationReport {
                tolerance: grid.tolerance,
                residuals: Vec::new(),
                obstacle_margin: [0.0; 2],
                sandwich_margin: [0.0; 2],
                flags: Vec::new(),
                certified: false,
            },
            feasibility,
        };
        profile.reverify(grid);
        Ok(profile)
    }

    /// Recomputes the report, e.g. after editing a weight.
    pub fn reverify(&mut self, grid: &GridSpec) {
        self.report = verify_variational_system(&self.params, &self.strategies, &self.values, grid);
        if let Some(f) = &self.feasibility {
            if f.marginal() {
                self.report
                    .flag_uncertified("marginal feasibility: a margin is below 1e-8".to_string());
            }
        }
    }

    pub fn strategy(&self, p: Player) -> &MarkovStrategy {
        &self.strategies[p.index()]
    }

    pub fn value(&self, p: Player) -> &PiecewiseValue {
        &self.values[p.index()]
    }

    pub fn certified(&self) -> bool {
        self.report.certified
    }

    /// `(w + E)(x)`, the market value of a firm.
    pub fn market_value(&self, p: Player, x: f64) -> f64 {
        self.value(p).value(x) + self.params.payoffs(p).perpetuity(x)
    }
}
