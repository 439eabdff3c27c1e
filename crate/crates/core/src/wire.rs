//! JSON form of an equilibrium profile.
//!
//! ```json
//! {
//!   "model": {"b": 0.02, "sigma": 0.2, "r": 0.1},
//!   "duopoly": {"l1": 1.0, "l2": 1.02, "m": 5.0},
//!   "kind": "singular-n1",
//!   "players": [
//!     {"atoms": [{"q": 0.0553, "weight": 32.5}], "density": null,
//!      "stopping_set": [[0.0, 0.0111]],
//!      "value_pieces": [{"lo": 0.0, "hi": 0.0278, "kind": "G", "A": null, "B": null}, ...]},
//!     ...
//!   ],
//!   "report": {"residuals": [...], "flags": [...], ...}
//! }
//! ```
//!
//! `hi: null` marks the unbounded last piece. The report is informational:
//! reading a profile always re-verifies it.

use serde::{Deserialize, Serialize};

use crate::diffusion::{DiffusionModel, ModelSpec};
use crate::equilibrium::{
    Atom, DensityKind, EquilibriumProfile, FeasibilityReport, GridSpec, Interval, MarkovStrategy, PieceKind,
    PiecewiseValue, Player, ProfileKind, ValuePiece,
};
use crate::error::{Error, Result};
use crate::payoffs::{DuopolyParams, DuopolySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDoc {
    pub model: ModelSpec,
    pub duopoly: DuopolySpec,
    pub kind: ProfileKind,
    pub players: [PlayerDoc; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerDoc {
    pub atoms: Vec<Atom>,
    pub density: Option<DensityKind>,
    pub stopping_set: Vec<Interval>,
    pub value_pieces: Vec<PieceDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PieceTag {
    #[serde(rename = "ode")]
    Ode,
    #[serde(rename = "R")]
    Exit,
    #[serde(rename = "G")]
    Follower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceDoc {
    pub lo: f64,
    pub hi: Option<f64>,
    pub kind: PieceTag,
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<f64>,
}

impl From<&ValuePiece> for PieceDoc {
    fn from(p: &ValuePiece) -> Self {
        let hi = p.hi.is_finite().then_some(p.hi);
        let (kind, a, b) = match p.kind {
            PieceKind::Ode { a, b } => (PieceTag::Ode, Some(a), Some(b)),
            PieceKind::Exit => (PieceTag::Exit, None, None),
            PieceKind::Follower => (PieceTag::Follower, None, None),
        };
        PieceDoc {
            lo: p.lo,
            hi,
            kind,
            a,
            b,
        }
    }
}

impl TryFrom<&PieceDoc> for ValuePiece {
    type Error = Error;
    fn try_from(p: &PieceDoc) -> Result<Self> {
        let kind = match (p.kind, p.a, p.b) {
            (PieceTag::Ode, Some(a), Some(b)) => PieceKind::Ode { a, b },
            (PieceTag::Ode, _, _) => {
                return Err(Error::InvalidValue(format!("ode piece at {} needs A and B", p.lo)));
            }
            (PieceTag::Exit, None, None) => PieceKind::Exit,
            (PieceTag::Follower, None, None) => PieceKind::Follower,
            _ => {
                return Err(Error::InvalidValue(format!(
                    "payoff piece at {} must not carry A, B",
                    p.lo
                )))
            }
        };
        Ok(ValuePiece {
            lo: p.lo,
            hi: p.hi.unwrap_or(f64::INFINITY),
            kind,
        })
    }
}

impl ProfileDoc {
    pub fn from_profile(profile: &EquilibriumProfile) -> Result<Self> {
        let player = |p: Player| PlayerDoc {
            atoms: profile.strategy(p).atoms().to_vec(),
            density: profile.strategy(p).density(),
            stopping_set: profile.strategy(p).stopping_set().to_vec(),
            value_pieces: profile.value(p).pieces().iter().map(PieceDoc::from).collect(),
        };
        let report = serde_json::to_value(&profile.report).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(Self {
            model: (*profile.params.model()).into(),
            duopoly: profile.params.spec(),
            kind: profile.kind,
            players: [player(Player::One), player(Player::Two)],
            feasibility: profile.feasibility.clone(),
            report: Some(report),
        })
    }

    /// Validates the document and re-verifies it on `grid`.
    pub fn into_profile(self, grid: &GridSpec) -> Result<EquilibriumProfile> {
        let model = DiffusionModel::try_from(self.model)?;
        let params = DuopolyParams::from_spec(model, self.duopoly)?;
        let mut strategies = Vec::with_capacity(2);
        let mut values = Vec::with_capacity(2);
        for (p, doc) in Player::BOTH.into_iter().zip(self.players) {
            strategies.push(MarkovStrategy::new(doc.atoms, doc.density, doc.stopping_set)?);
            let pieces = doc
                .value_pieces
                .iter()
                .map(ValuePiece::try_from)
                .collect::<Result<Vec<_>>>()?;
            values.push(PiecewiseValue::new(params.payoffs(p), pieces)?);
        }
        let strategies: [MarkovStrategy; 2] = strategies.try_into().expect("two players");
        let values: [PiecewiseValue; 2] = values.try_into().expect("two players");
        EquilibriumProfile::assemble(params, self.kind, strategies, values, self.feasibility, grid)
    }
}

pub fn profile_to_json(profile: &EquilibriumProfile) -> Result<String> {
    let doc = ProfileDoc::from_profile(profile)?;
    serde_json::to_string_pretty(&doc).map_err(|e| Error::InvalidConfig(e.to_string()))
}

pub fn profile_from_json(text: &str, grid: &GridSpec) -> Result<EquilibriumProfile> {
    let doc: ProfileDoc = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    doc.into_profile(grid)
}

/// Serializes a JSON document with full float precision; shared by the
/// command line front end.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::InvalidConfig(e.to_string()))
}
