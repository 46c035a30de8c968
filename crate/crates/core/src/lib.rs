//! Game-theoretic multi-agent learning toolkit.
//!
//! Exact equilibrium solvers for matrix games, evolutionary dynamics,
//! tabular learners for stochastic games, exact-gradient opponent shaping and
//! a linear evolutionary/policy-gradient hybrid.

pub mod error;
pub mod game;
pub mod equilibrium;
pub mod evo;
pub mod linprog;
pub mod merl;
pub mod output;
pub mod shaping;
pub mod tabular;

pub use error::{Error, ErrorCategory, Result};
pub use game::{
    build_matrix_game, classic_game, joint_action_count, ActionSpace, BeliefState, Game,
    MatrixGame, MixedProfile, PosgGame, StochasticGame,
};
