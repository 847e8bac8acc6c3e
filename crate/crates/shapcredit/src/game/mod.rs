//! Cooperative-game core: coalitions, characteristic functions, exact and
//! Monte Carlo Shapley values, and axiom verification.

mod axioms;
mod coalition;
mod shapley;

pub use axioms::{verify_axioms, AxiomCheck, AxiomReport};
pub use coalition::{
    AdditiveGame, CharacteristicFn, Coalition, FnGame, GameError, SumGame, TableGame,
};
pub use shapley::{
    exact_shapley, exact_shapley_capped, marginal_contribution, mc_shapley,
    sample_subset_containing, ShapleyMethod, ShapleyResult, DEFAULT_EXACT_CAP,
};
