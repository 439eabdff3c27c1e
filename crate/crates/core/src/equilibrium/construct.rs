use serde::{Deserialize, Serialize};

use crate::diffusion::Diffusion;
use crate::equilibrium::profile::{EquilibriumProfile, ProfileKind};
use crate::equilibrium::strategy::{Atom, DensityKind, Interval, MarkovStrategy, Player};
use crate::equilibrium::value::{PieceKind, PiecewiseValue};
use crate::equilibrium::verify::GridSpec;
use crate::error::{Error, Result};
use crate::payoffs::{log_grid, DuopolyParams, PlayerPayoffs};
use crate::roots::{bisect_geometric, newton_polish};

/// Feasibility margins below this are reported as marginal.
pub const MARGINAL_MARGIN: f64 = 1e-8;

/// Both players exit on first entry into their sets: player 1 below `α¹`,
/// player 2 below `x_R²`.
pub fn pure_mpe(params: &DuopolyParams) -> Result<EquilibriumProfile> {
    params.check_endurance()?;
    let (p1, p2) = (params.payoffs(Player::One), params.payoffs(Player::Two));
    let (s1, s2) = (p1.standalone(), p2.standalone());
    let strategies = [MarkovStrategy::threshold(s1.alpha)?, MarkovStrategy::threshold(s2.x_r)?];
    let values = [follower_until(p1, s2.x_r)?, standalone_value(p2)?];
    EquilibriumProfile::assemble(
        *params,
        ProfileKind::Pure,
        strategies,
        values,
        None,
        &GridSpec::default(),
    )
}

/// Player 1 plays its stand-alone strategy and player 2 never exits.
///
/// Fails with [`Error::NotBestReply`] if waiting is worse than exiting for
/// player 2 somewhere on a fine grid.
pub fn stubborn_pure_mpe(params: &DuopolyParams) -> Result<EquilibriumProfile> {
    params.check_endurance()?;
    let (p1, p2) = (params.payoffs(Player::One), params.payoffs(Player::Two));
    let s1 = p1.standalone();
    let values = [standalone_value(p1)?, follower_until(p2, s1.x_r)?];
    let hi = p2.standalone().x0.max(4.0 * s1.x_r);
    for x in log_grid(s1.x_r, hi, 2000) {
        let margin = values[1].value(x) - p2.exit(x);
        if margin < -1e-12 * p2.liquidation() {
            return Err(Error::NotBestReply {
                player: Player::Two,
                state: x,
                margin,
            });
        }
    }
    let strategies = [MarkovStrategy::threshold(s1.x_r)?, MarkovStrategy::stubborn()];
    EquilibriumProfile::assemble(
        *params,
        ProfileKind::StubbornPure,
        strategies,
        values,
        None,
        &GridSpec::default(),
    )
}

/// Equally enduring players both concede with the hazard rate that keeps
/// the rival indifferent on `(α, x_R]`, and exit below `α`.
pub fn symmetric_mixed_mpe(params: &DuopolyParams) -> Result<EquilibriumProfile> {
    let (p1, p2) = (params.payoffs(Player::One), params.payoffs(Player::Two));
    let (x_r1, x_r2) = (p1.standalone().x_r, p2.standalone().x_r);
    if (x_r1 - x_r2).abs() > 1e-12 * x_r1 {
        return Err(Error::EnduranceMismatch { x_r1, x_r2 });
    }
    let strategy = |p: &PlayerPayoffs| {
        MarkovStrategy::new(
            Vec::new(),
            Some(DensityKind::Symmetric),
            vec![Interval::below(p.standalone().alpha)],
        )
    };
    let strategies = [strategy(&p1)?, strategy(&p2)?];
    let values = [standalone_value(p1)?, standalone_value(p2)?];
    EquilibriumProfile::assemble(
        *params,
        ProfileKind::Symmetric,
        strategies,
        values,
        None,
        &GridSpec::default(),
    )
}

/// `V_R` as a piecewise value.
fn standalone_value(p: PlayerPayoffs) -> Result<PiecewiseValue> {
    let sa = p.standalone();
    PiecewiseValue::from_breakpoints(
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
}

/// `G` up to the rival's exit threshold `s`, discounted `G(s)` above it.
fn follower_until(p: PlayerPayoffs, s: f64) -> Result<PiecewiseValue> {
    let b = p.follower(s) / p.model().phi(s);
    PiecewiseValue::from_breakpoints(p, &[s], &[PieceKind::Follower, PieceKind::Ode { a: 0.0, b }])
}

/// Root `x̲²` of `R¹(x_R¹) φ(x)/φ(x_R¹) = G¹(x)`: the state at which player 1,
/// facing a rival that exits there, is indifferent between waiting forever
/// above `x_R¹` and exiting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitIndifference {
    pub theta: f64,
    /// `θ x_R¹` from the closed form.
    pub x_under: f64,
    /// The same root by bisection in hat coordinates.
    pub x_under_bisection: f64,
}

impl ExitIndifference {
    pub fn relative_disagreement(&self) -> f64 {
        ((self.x_under - self.x_under_bisection) / self.x_under).abs()
    }
}

/// `θ = [(1 − m^ρ⁻)/((−ρ⁻)(m − 1))]^{1/(1−ρ⁻)}`.
pub fn exit_indifference_ratio(m: f64, rho_minus: f64) -> f64 {
    ((1.0 - m.powf(rho_minus)) / (-rho_minus * (m - 1.0))).powf(1.0 / (1.0 - rho_minus))
}

pub fn solve_exit_indifference(params: &DuopolyParams) -> Result<ExitIndifference> {
    params.check_endurance()?;
    let p1 = params.payoffs(Player::One);
    let d = *p1.model();
    let sa = p1.standalone();
    let theta = exit_indifference_ratio(params.m(), d.rho_minus());
    if !(theta > 1.0 / params.m() && theta < 1.0) {
        return Err(Error::Bracket(format!("indifference ratio {theta} outside (1/m, 1)")));
    }
    let c = sa.phi_coefficient;
    let y = follower_meets_line(&p1, (0.0, c), d.zeta(sa.x_r), d.zeta(sa.alpha))?;
    Ok(ExitIndifference {
        theta,
        x_under: theta * sa.x_r,
        x_under_bisection: d.zeta_inverse(y),
    })
}

/// Hat coordinate where the line `A + B y` meets `Ĝ` on `[lo, hi]`; `Ĝ`
/// lies above the line at `lo` and below it at `hi`.
fn follower_meets_line(p: &PlayerPayoffs, (a, b): (f64, f64), lo: f64, hi: f64) -> Result<f64> {
    let f = |y: f64| p.follower_hat(y).0 - (a + b * y);
    let df = |y: f64| p.follower_hat(y).1 - b;
    let y = bisect_geometric(f, lo, hi, 1e-15, "exit indifference")?;
    Ok(newton_polish(f, df, y, lo, hi, 1e-16))
}

/// Solution `Aψ + Bφ` of `L u = r u` tangent to a player's exit payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentCurve {
    pub q: f64,
    pub a: f64,
    pub b: f64,
}

impl TangentCurve {
    pub fn kind(&self) -> PieceKind {
        PieceKind::Ode { a: self.a, b: self.b }
    }

    pub fn value<D: Diffusion>(&self, d: &D, x: f64) -> f64 {
        self.a * d.psi(x) + self.b * d.phi(x)
    }

    pub fn derivative<D: Diffusion>(&self, d: &D, x: f64) -> f64 {
        self.a * d.psi_prime(x) + self.b * d.phi_prime(x)
    }
}

pub fn tangent_curve(payoffs: &PlayerPayoffs, q: f64) -> Result<TangentCurve> {
    let x_r = payoffs.standalone().x_r;
    if !(q > 0.0 && q <= x_r * (1.0 + 1e-12)) {
        return Err(Error::OutOfDomain(q));
    }
    let (a, b) = payoffs.exit_tangent(q);
    Ok(TangentCurve { q, a, b })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeasibilityStatus {
    Holds,
    Marginal,
    Fails,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCondition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `(lhs − rhs)/max(1, |rhs|)`.
    pub margin: f64,
    pub status: FeasibilityStatus,
}

impl FeasibilityCondition {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        let margin = (lhs - rhs) / rhs.abs().max(1.0);
        let status = if !(margin > 0.0) {
            FeasibilityStatus::Fails
        } else if margin < MARGINAL_MARGIN {
            FeasibilityStatus::Marginal
        } else {
            FeasibilityStatus::Holds
        };
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub conditions: Vec<FeasibilityCondition>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.conditions.iter().all(|c| c.status != FeasibilityStatus::Fails)
    }

    pub fn marginal(&self) -> bool {
        self.conditions.iter().any(|c| c.status == FeasibilityStatus::Marginal)
    }

    pub fn first_failure(&self) -> Option<&FeasibilityCondition> {
        self.failures().next()
    }

    pub fn failures(&self) -> impl Iterator<Item = &FeasibilityCondition> {
        self.conditions.iter().filter(|c| c.status == FeasibilityStatus::Fails)
    }
}

/// Key quantities of the one-atom singular equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSummary {
    pub x_r1: f64,
    pub indifference: ExitIndifference,
    /// `w²(x_R¹)`, the tangent to `R²` at `x̲²` evaluated at the atom.
    pub w2_at_atom: f64,
    pub g2_at_atom: f64,
    /// Stand-alone line of player 2 at the atom.
    pub standalone2_at_atom: f64,
    pub derivative_jump: f64,
    pub weight: f64,
    pub feasibility: FeasibilityReport,
}

/// Evaluates the three inequalities that make the one-atom singular profile
/// an equilibrium: `G²(x_R¹) > T²_{x̲²}(x_R¹) > T²_{x_R²}(x_R¹)`, and a
/// concave kink of `w²` at the atom.
pub fn singular_summary(params: &DuopolyParams) -> Result<SingularSummary> {
    let ind = solve_exit_indifference(params)?;
    let p2 = params.payoffs(Player::Two);
    let d = *p2.model();
    let x_r1 = params.payoffs(Player::One).standalone().x_r;
    let tangent = tangent_curve(&p2, ind.x_under)?;
    let w2 = tangent.value(&d, x_r1);
    let g2 = p2.follower(x_r1);
    let standalone2 = tangent_curve(&p2, p2.standalone().x_r)?.value(&d, x_r1);
    let above = w2 / d.phi(x_r1);
    let jump = above * d.phi_prime(x_r1) - tangent.derivative(&d, x_r1);
    let weight = -0.5 * jump / (g2 - w2);
    let feasibility = FeasibilityReport {
        conditions: vec![
            FeasibilityCondition::new("G2(x_R1) > T2[x_under2](x_R1)", g2, w2),
            FeasibilityCondition::new("T2[x_under2](x_R1) > T2[x_R2](x_R1)", w2, standalone2),
            FeasibilityCondition::new("-jump of w2' at x_R1 > 0", -jump, 0.0),
        ],
    };
    Ok(SingularSummary {
        x_r1,
        indifference: ind,
        w2_at_atom: w2,
        g2_at_atom: g2,
        standalone2_at_atom: standalone2,
        derivative_jump: jump,
        weight,
        feasibility,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularOptions {
    /// Let player 1 also exit on `(0, α¹]`.
    pub refine_trembling_hand: bool,
}

impl Default for SingularOptions {
    fn default() -> Self {
        Self {
            refine_trembling_hand: true,
        }
    }
}

/// Player 1 randomizes at `x_R¹` with a single atom, player 2 exits below
/// `x̲²`.
pub fn singular_mpe_single_atom(params: &DuopolyParams, opts: SingularOptions) -> Result<EquilibriumProfile> {
    let summary = singular_summary(params)?;
    if let Some(c) = summary.feasibility.first_failure() {
        return Err(Error::Infeasible {
            condition: c.name.clone(),
            margin: c.margin,
        });
    }
    let (strategies, values) = assemble_type2(
        params,
        &[summary.x_r1],
        &[],
        summary.indifference.x_under,
        opts.refine_trembling_hand,
    )?;
    EquilibriumProfile::assemble(
        *params,
        ProfileKind::SingularN1,
        strategies,
        values,
        Some(summary.feasibility),
        &GridSpec::default(),
    )
}

/// Builds the strategies and values of a type-2 profile from intertwined
/// atoms `q¹₁ > q²₁ > q¹₂ > … > q¹_n` and player 2's exit threshold `s²`.
///
/// Weights follow from the jump conditions; a non-positive weight rejects
/// the candidate.
pub fn assemble_type2(
    params: &DuopolyParams,
    q1: &[f64],
    q2: &[f64],
    s2: f64,
    refine: bool,
) -> Result<([MarkovStrategy; 2], [PiecewiseValue; 2])> {
    let n = q1.len();
    if n == 0 || q2.len() + 1 != n {
        return Err(Error::InvalidStrategy(format!(
            "type-2 profile needs n atoms for player 1 and n - 1 for player 2, got {} and {}",
            n,
            q2.len()
        )));
    }
    let mut chain = Vec::with_capacity(2 * n);
    for k in 0..n {
        chain.push(q1[k]);
        if k < q2.len() {
            chain.push(q2[k]);
        }
    }
    chain.push(s2);
    if chain.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidStrategy(
            "atoms are not strictly intertwined above s2".into(),
        ));
    }
    let (p1, p2) = (params.payoffs(Player::One), params.payoffs(Player::Two));
    let d = *p1.model();

    // w¹: G¹ below s², then tangents to R¹ at q¹_n, …, q¹_1 with kinks at the
    // atoms of player 2.
    let mut breaks1 = vec![s2];
    breaks1.extend(q2.iter().rev());
    let mut kinds1 = vec![PieceKind::Follower];
    for &q in q1.iter().rev() {
        kinds1.push(tangent_curve(&p1, q)?.kind());
    }
    let w1 = PiecewiseValue::from_breakpoints(p1, &breaks1, &kinds1)?;

    // w²: R² below s², tangent at s², then tangents at q²_{n-1}, …, q²_1 with
    // kinks at the atoms of player 1, and a multiple of φ above q¹_1.
    let mut breaks2 = vec![s2];
    breaks2.extend(q1.iter().rev());
    let mut kinds2 = vec![PieceKind::Exit, tangent_curve(&p2, s2)?.kind()];
    for &q in q2.iter().rev() {
        kinds2.push(tangent_curve(&p2, q)?.kind());
    }
    let last = match kinds2[kinds2.len() - 1] {
        PieceKind::Ode { a, b } => a * d.psi(q1[0]) + b * d.phi(q1[0]),
        _ => unreachable!(),
    };
    kinds2.push(PieceKind::Ode {
        a: 0.0,
        b: last / d.phi(q1[0]),
    });
    let w2 = PiecewiseValue::from_breakpoints(p2, &breaks2, &kinds2)?;

    let weight = |w: &PiecewiseValue, p: &PlayerPayoffs, q: f64| -> Result<f64> {
        let a = -0.5 * w.derivative_jump(q) / (p.follower(q) - w.value(q));
        if a > 0.0 && a.is_finite() {
            Ok(a)
        } else {
            Err(Error::InvalidStrategy(format!(
                "non-positive weight {a} at {q} (kink {}, G - w = {})",
                w.derivative_jump(q),
                p.follower(q) - w.value(q)
            )))
        }
    };
    let atoms1 = q1
        .iter()
        .map(|&q| {
            Ok(Atom {
                q,
                weight: weight(&w2, &p2, q)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let atoms2 = q2
        .iter()
        .map(|&q| {
            Ok(Atom {
                q,
                weight: weight(&w1, &p1, q)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let set1 = if refine {
        vec![Interval::below(p1.standalone().alpha)]
    } else {
        Vec::new()
    };
    let strategies = [
        MarkovStrategy::new(atoms1, None, set1)?,
        MarkovStrategy::new(atoms2, None, vec![Interval::below(s2)])?,
    ];
    Ok((strategies, [w1, w2]))
}
