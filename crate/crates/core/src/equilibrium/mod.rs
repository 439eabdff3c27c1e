//! Markov-perfect equilibria of the exit game: constructors for the pure,
//! symmetric and singular profiles, the type-2 shooting solver, and the
//! residual verifier.

pub mod alternating;
pub mod construct;
pub mod profile;
pub mod shooting;
pub mod strategy;
pub mod value;
pub mod verify;

pub use alternating::{alternating_sequence, alternating_step, AlternatingSequence, HatCurve, HatPayoff};
pub use construct::{
    assemble_type2, exit_indifference_ratio, pure_mpe, singular_mpe_single_atom, singular_summary,
    solve_exit_indifference, stubborn_pure_mpe, symmetric_mixed_mpe, tangent_curve, ExitIndifference,
    FeasibilityCondition, FeasibilityReport, FeasibilityStatus, SingularOptions, SingularSummary, TangentCurve,
};
pub use profile::{EquilibriumProfile, ProfileKind};
pub use shooting::{shoot, shoot_type2_equilibrium, ShootingOptions, ShotResult};
pub use strategy::{Atom, DensityKind, Interval, MarkovStrategy, Player};
pub use value::{PieceKind, PiecewiseValue, ValuePiece};
pub use verify::{
    top_stopping_state, verify_variational_system, ClassResidual, GridSpec, ResidualClass, VerificationReport,
};
