use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ActionSpace, Game, MatrixGame, StochasticGame};
use crate::error::{Error, Result};

/// Shape of a randomly generated game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomGameSpec {
    pub actions: Vec<usize>,
    #[serde(default)]
    pub zero_sum: bool,
    /// `Some(k)` produces a `k`-state stochastic game.
    #[serde(default)]
    pub states: Option<usize>,
    /// Discount of generated stochastic games.
    #[serde(default = "default_discount")]
    pub discount: f64,
}

fn default_discount() -> f64 {
    0.9
}

impl RandomGameSpec {
    pub fn matrix(actions: Vec<usize>, zero_sum: bool) -> Self {
        Self { actions, zero_sum, states: None, discount: default_discount() }
    }

    pub fn stochastic(actions: Vec<usize>, zero_sum: bool, states: usize, discount: f64) -> Self {
        Self { actions, zero_sum, states: Some(states), discount }
    }
}

fn payoff_tensors(rng: &mut ChaCha8Rng, agents: usize, len: usize, zero_sum: bool) -> Vec<Vec<f64>> {
    if zero_sum {
        let first: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let second = first.iter().map(|v| -v).collect();
        vec![first, second]
    } else {
        (0..agents)
            .map(|_| (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect()
    }
}

fn check_zero_sum_agents(spec: &RandomGameSpec) -> Result<()> {
    if spec.zero_sum && spec.actions.len() != 2 {
        return Err(Error::InvalidParameter(
            "zero-sum generation requires exactly 2 agents".into(),
        ));
    }
    Ok(())
}

/// Matrix game with payoffs uniform in `[-1, 1]`; deterministic in `seed`.
pub fn random_matrix_game(seed: u64, actions: &[usize], zero_sum: bool) -> Result<MatrixGame> {
    let spec = RandomGameSpec::matrix(actions.to_vec(), zero_sum);
    check_zero_sum_agents(&spec)?;
    let space = ActionSpace::new(actions.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let payoffs = payoff_tensors(&mut rng, space.num_agents(), space.joint_count(), zero_sum);
    MatrixGame::new(actions.to_vec(), payoffs)
}

/// Stochastic game with rewards uniform in `[-1, 1]` and transition rows
/// drawn uniform in `(0, 1]` then normalized.
pub fn random_stochastic_game(
    seed: u64,
    actions: &[usize],
    zero_sum: bool,
    states: usize,
    discount: f64,
) -> Result<StochasticGame> {
    let spec = RandomGameSpec::stochastic(actions.to_vec(), zero_sum, states, discount);
    check_zero_sum_agents(&spec)?;
    if states == 0 {
        return Err(Error::Shape("state count must be at least 1".into()));
    }
    let space = ActionSpace::new(actions.to_vec())?;
    let joint = space.joint_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rewards = payoff_tensors(&mut rng, space.num_agents(), states * joint, zero_sum);
    let mut transition = Vec::with_capacity(states * joint * states);
    for _ in 0..states * joint {
        let row: Vec<f64> = (0..states).map(|_| 1.0 - rng.random::<f64>()).collect();
        let sum: f64 = row.iter().sum();
        transition.extend(row.iter().map(|p| p / sum));
    }
    // Normalization can leave the row sum a few ulps off; fold the residue
    // into the largest entry.
    for row in transition.chunks_mut(states) {
        let residue = 1.0 - row.iter().sum::<f64>();
        let (k, _) = row
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        row[k] += residue;
    }
    StochasticGame::new(states, actions.to_vec(), transition, rewards, discount)
}

/// Generates the game described by `spec`, deterministically in `seed`.
pub fn random_game(seed: u64, spec: &RandomGameSpec) -> Result<Game> {
    match spec.states {
        None => random_matrix_game(seed, &spec.actions, spec.zero_sum).map(Game::Matrix),
        Some(k) => random_stochastic_game(seed, &spec.actions, spec.zero_sum, k, spec.discount)
            .map(Game::Stochastic),
    }
}
