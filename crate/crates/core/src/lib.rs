//! Wars of attrition driven by geometric Brownian motion.
//!
//! Two firms share a declining market and each decides when to exit. This
//! crate builds Markov-perfect equilibria of that game, in pure strategies
//! and in randomized strategies that concede at a rate per unit of local
//! time, checks them against their variational system, and estimates payoffs
//! by Monte Carlo.
//!
//! ```
//! use attrition::{DiffusionModel, DuopolyParams, singular_mpe_single_atom, SingularOptions, Player};
//!
//! let model = DiffusionModel::new(0.02, 0.2, 0.1)?;
//! let params = DuopolyParams::new(model, 1.0, 1.02, 5.0)?;
//! let profile = singular_mpe_single_atom(&params, SingularOptions::default())?;
//! let atom = profile.strategy(Player::One).atoms()[0];
//! assert!((atom.weight - 32.508).abs() < 1e-3);
//! assert!(profile.certified());
//! # Ok::<(), attrition::Error>(())
//! ```

pub mod curves;
pub mod diffusion;
pub mod equilibrium;
pub mod error;
pub mod payoffs;
pub mod roots;
pub mod simulate;
pub mod sweep;
pub mod wire;

pub use diffusion::{
    characteristic_roots, green_expected_local_time, hat_transform, hitting_laplace, Diffusion, DiffusionModel,
    HatFunction, ModelSpec,
};
pub use equilibrium::{
    pure_mpe, shoot_type2_equilibrium, singular_mpe_single_atom, solve_exit_indifference, stubborn_pure_mpe,
    symmetric_mixed_mpe, verify_variational_system, Atom, EquilibriumProfile, MarkovStrategy, Player, ProfileKind,
    ShootingOptions, SingularOptions,
};
pub use error::{Error, Result};
pub use payoffs::{assumption_audit, DuopolyParams, DuopolySpec, PlayerPayoffs, StandAloneSolution};

// Runs the code listings of the guide as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/diffusion.md")]
    mod diffusion {}
    #[doc = include_str!("../../../book/src/payoffs.md")]
    mod payoffs {}
    #[doc = include_str!("../../../book/src/equilibria.md")]
    mod equilibria {}
    #[doc = include_str!("../../../book/src/alternating.md")]
    mod alternating {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
}
