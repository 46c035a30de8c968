//! Matrix games, stochastic games and partially observable stochastic games.
//!
//! Every payoff tensor is stored flat over joint actions using the encoding of
//! [`ActionSpace`]. Stochastic-game tensors add a leading state axis.

mod belief;
mod classic;
mod random;
pub mod schema;
mod space;

pub use belief::{belief_update, BeliefState};
pub use classic::{classic_game, CLASSIC_GAMES};
pub use random::{random_game, random_matrix_game, random_stochastic_game, RandomGameSpec};
pub use space::{joint_action_count, ActionSpace, MAX_ENTRIES};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for probability vectors summing to one.
pub const PROB_TOL: f64 = 1e-12;
/// Tolerance for `u_1 + u_2 = 0`.
pub const ZERO_SUM_TOL: f64 = 1e-12;

/// One-shot N-player normal-form game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixGame {
    space: ActionSpace,
    payoffs: Vec<Vec<f64>>,
    zero_sum: bool,
}

impl MatrixGame {
    pub fn new(actions: Vec<usize>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        let space = ActionSpace::new(actions)?;
        check_payoff_tensor(&space, &payoffs, "payoffs")?;
        let zero_sum = is_zero_sum_pair(&payoffs);
        Ok(Self { space, payoffs, zero_sum })
    }

    /// Two-player game from row-player and column-player matrices.
    pub fn from_bimatrix(row: &[Vec<f64>], col: &[Vec<f64>]) -> Result<Self> {
        let m = row.len();
        let n = row.first().map_or(0, Vec::len);
        if col.len() != m || row.iter().chain(col).any(|r| r.len() != n) {
            return Err(Error::Shape("bimatrix rows must all have equal length".into()));
        }
        let flat = |mat: &[Vec<f64>]| mat.iter().flatten().copied().collect::<Vec<_>>();
        Self::new(vec![m, n], vec![flat(row), flat(col)])
    }

    /// Two-player zero-sum game with the given row-player matrix.
    pub fn zero_sum(row: &[Vec<f64>]) -> Result<Self> {
        let col: Vec<Vec<f64>> = row.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        Self::from_bimatrix(row, &col)
    }

    pub fn num_agents(&self) -> usize {
        self.space.num_agents()
    }

    pub fn actions(&self) -> &[usize] {
        self.space.counts()
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn joint_action_count(&self) -> usize {
        self.space.joint_count()
    }

    /// `u_agent(a)` for a flat joint action index.
    #[inline]
    pub fn payoff(&self, agent: usize, joint: usize) -> f64 {
        self.payoffs[agent][joint]
    }

    pub fn payoffs(&self, agent: usize) -> &[f64] {
        &self.payoffs[agent]
    }

    /// True for two-player games with `u_1 + u_2 = 0` everywhere.
    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    /// Payoff matrix of `agent` in a two-player game, rows indexed by agent 0.
    pub fn matrix(&self, agent: usize) -> Result<Vec<Vec<f64>>> {
        if self.num_agents() != 2 {
            return Err(Error::Unsupported(format!(
                "payoff matrices need 2 agents, game has {}",
                self.num_agents()
            )));
        }
        let n = self.actions()[1];
        Ok(self.payoffs[agent].chunks(n).map(<[f64]>::to_vec).collect())
    }

    /// Expected payoff of each agent under independent mixing.
    pub fn expected_payoff(&self, profile: &MixedProfile) -> Result<Vec<f64>> {
        self.check_profile(profile)?;
        let mut out = vec![0.0; self.num_agents()];
        for joint in 0..self.joint_action_count() {
            let w = profile.joint_probability(&self.space, joint);
            if w == 0.0 {
                continue;
            }
            for (agent, acc) in out.iter_mut().enumerate() {
                *acc += w * self.payoffs[agent][joint];
            }
        }
        Ok(out)
    }

    /// Expected payoff of `agent` for each of its pure actions while the
    /// others play `profile` (the agent's own entry is ignored).
    pub fn deviation_payoffs(&self, profile: &MixedProfile, agent: usize) -> Result<Vec<f64>> {
        if agent >= self.num_agents() {
            return Err(Error::Shape(format!("agent {agent} out of range")));
        }
        self.check_profile_dims(profile)?;
        let mut out = vec![0.0; self.actions()[agent]];
        for joint in 0..self.joint_action_count() {
            let mut w = 1.0;
            for (j, strategy) in profile.strategies.iter().enumerate() {
                if j != agent {
                    w *= strategy[self.space.action_of(joint, j)];
                }
            }
            if w != 0.0 {
                out[self.space.action_of(joint, agent)] += w * self.payoffs[agent][joint];
            }
        }
        Ok(out)
    }

    fn check_profile_dims(&self, profile: &MixedProfile) -> Result<()> {
        let dims: Vec<usize> = profile.strategies.iter().map(Vec::len).collect();
        if dims != self.actions() {
            return Err(Error::Shape(format!(
                "profile dimensions {dims:?} do not match game actions {:?}",
                self.actions()
            )));
        }
        Ok(())
    }

    fn check_profile(&self, profile: &MixedProfile) -> Result<()> {
        self.check_profile_dims(profile)
    }
}

/// Builds and validates a matrix game from per-agent flat payoff entries.
pub fn build_matrix_game(
    num_agents: usize,
    actions_per_agent: &[usize],
    payoff_entries: Vec<Vec<f64>>,
) -> Result<MatrixGame> {
    if actions_per_agent.len() != num_agents {
        return Err(Error::Shape(format!(
            "{num_agents} agents but {} action counts",
            actions_per_agent.len()
        )));
    }
    MatrixGame::new(actions_per_agent.to_vec(), payoff_entries)
}

fn check_payoff_tensor(space: &ActionSpace, payoffs: &[Vec<f64>], what: &str) -> Result<()> {
    if payoffs.len() != space.num_agents() {
        return Err(Error::Shape(format!(
            "{what}: expected {} payoff tensors, got {}",
            space.num_agents(),
            payoffs.len()
        )));
    }
    for (agent, tensor) in payoffs.iter().enumerate() {
        if tensor.len() != space.joint_count() {
            return Err(Error::Shape(format!(
                "{what}[{agent}]: expected {} entries, got {}",
                space.joint_count(),
                tensor.len()
            )));
        }
        if let Some(k) = tensor.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{what}[{agent}][{k}]")));
        }
    }
    Ok(())
}

fn is_zero_sum_pair(payoffs: &[Vec<f64>]) -> bool {
    payoffs.len() == 2
        && payoffs[0]
            .iter()
            .zip(&payoffs[1])
            .all(|(a, b)| (a + b).abs() <= ZERO_SUM_TOL)
}

/// Finite Markov game `⟨S, A_1..A_N, P, R_1..R_N, γ⟩`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticGame {
    states: usize,
    space: ActionSpace,
    /// `P(s' | s, a)` flat over `(s, a, s')`.
    transition: Vec<f64>,
    /// `R_i(s, a)` flat over `(s, a)`.
    rewards: Vec<Vec<f64>>,
    discount: f64,
    zero_sum: bool,
}

impl StochasticGame {
    pub fn new(
        states: usize,
        actions: Vec<usize>,
        transition: Vec<f64>,
        rewards: Vec<Vec<f64>>,
        discount: f64,
    ) -> Result<Self> {
        if states == 0 {
            return Err(Error::Shape("a stochastic game needs at least one state".into()));
        }
        let space = ActionSpace::new(actions)?;
        let joint = space.joint_count();
        if states.saturating_mul(joint).saturating_mul(states) > MAX_ENTRIES {
            return Err(Error::Unsupported(format!(
                "transition tensor {states}x{joint}x{states} exceeds {MAX_ENTRIES} entries"
            )));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "discount must lie strictly inside (0, 1), got {discount}"
            )));
        }
        if transition.len() != states * joint * states {
            return Err(Error::Shape(format!(
                "transition: expected {} entries, got {}",
                states * joint * states,
                transition.len()
            )));
        }
        for (row_idx, row) in transition.chunks(states).enumerate() {
            let (s, a) = (row_idx / joint, row_idx % joint);
            if let Some(k) = row.iter().position(|p| !p.is_finite()) {
                return Err(Error::NonFinite(format!("transition[{s}][{a}][{k}]")));
            }
            if let Some(k) = row.iter().position(|&p| p < 0.0) {
                return Err(Error::InvalidGame(format!(
                    "transition[{s}][{a}][{k}] is negative ({})",
                    row[k]
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidGame(format!(
                    "transition[{s}][{a}] sums to {sum}, expected 1"
                )));
            }
        }
        if rewards.len() != space.num_agents() {
            return Err(Error::Shape(format!(
                "rewards: expected {} tensors, got {}",
                space.num_agents(),
                rewards.len()
            )));
        }
        for (agent, tensor) in rewards.iter().enumerate() {
            if tensor.len() != states * joint {
                return Err(Error::Shape(format!(
                    "rewards[{agent}]: expected {} entries, got {}",
                    states * joint,
                    tensor.len()
                )));
            }
            if let Some(k) = tensor.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "rewards[{agent}][{}][{}]",
                    k / joint,
                    k % joint
                )));
            }
        }
        let zero_sum = is_zero_sum_pair(&rewards);
        Ok(Self { states, space, transition, rewards, discount, zero_sum })
    }

    /// Wraps a matrix game as a one-state repeated game.
    pub fn repeated(game: &MatrixGame, discount: f64) -> Result<Self> {
        let rewards = (0..game.num_agents()).map(|i| game.payoffs(i).to_vec()).collect();
        Self::new(
            1,
            game.actions().to_vec(),
            vec![1.0; game.joint_action_count()],
            rewards,
            discount,
        )
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn num_agents(&self) -> usize {
        self.space.num_agents()
    }

    pub fn actions(&self) -> &[usize] {
        self.space.counts()
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn joint_action_count(&self) -> usize {
        self.space.joint_count()
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    /// `P(· | s, a)`.
    #[inline]
    pub fn transition_row(&self, state: usize, joint: usize) -> &[f64] {
        let start = (state * self.joint_action_count() + joint) * self.states;
        &self.transition[start..start + self.states]
    }

    #[inline]
    pub fn reward(&self, agent: usize, state: usize, joint: usize) -> f64 {
        self.rewards[agent][state * self.joint_action_count() + joint]
    }

    /// `R_agent(s, ·)` over joint actions.
    pub fn stage_rewards(&self, agent: usize, state: usize) -> &[f64] {
        let j = self.joint_action_count();
        &self.rewards[agent][state * j..(state + 1) * j]
    }

    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    pub fn rewards(&self, agent: usize) -> &[f64] {
        &self.rewards[agent]
    }

    /// The one-shot game played in `state` with immediate rewards as payoffs.
    pub fn stage_game(&self, state: usize) -> MatrixGame {
        let payoffs = (0..self.num_agents())
            .map(|i| self.stage_rewards(i, state).to_vec())
            .collect();
        MatrixGame::new(self.actions().to_vec(), payoffs)
            .expect("stage game of a validated stochastic game is valid")
    }
}

/// Stochastic game with a deterministic observation map per agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosgGame {
    base: StochasticGame,
    observation_counts: Vec<usize>,
    /// `obs_map[agent][state]`.
    obs_map: Vec<Vec<usize>>,
}

impl PosgGame {
    pub fn new(
        base: StochasticGame,
        observation_counts: Vec<usize>,
        obs_map: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let n = base.num_agents();
        if observation_counts.len() != n || obs_map.len() != n {
            return Err(Error::Shape(format!(
                "observation data must cover all {n} agents"
            )));
        }
        for (agent, map) in obs_map.iter().enumerate() {
            if map.len() != base.num_states() {
                return Err(Error::Shape(format!(
                    "obs[{agent}]: expected {} entries, got {}",
                    base.num_states(),
                    map.len()
                )));
            }
            if let Some(s) = map.iter().position(|&o| o >= observation_counts[agent]) {
                return Err(Error::InvalidGame(format!(
                    "obs[{agent}][{s}] = {} is outside 0..{}",
                    map[s], observation_counts[agent]
                )));
            }
        }
        Ok(Self { base, observation_counts, obs_map })
    }

    pub fn base(&self) -> &StochasticGame {
        &self.base
    }

    pub fn observation_counts(&self) -> &[usize] {
        &self.observation_counts
    }

    /// `O_agent(state)`.
    pub fn observe(&self, agent: usize, state: usize) -> usize {
        self.obs_map[agent][state]
    }

    pub fn obs_map(&self) -> &[Vec<usize>] {
        &self.obs_map
    }
}

/// Any game the toolkit can load.
#[derive(Debug, Clone, PartialEq)]
pub enum Game {
    Matrix(MatrixGame),
    Stochastic(StochasticGame),
    Posg(PosgGame),
}

impl Game {
    pub fn kind(&self) -> &'static str {
        match self {
            Game::Matrix(_) => "matrix",
            Game::Stochastic(_) => "stochastic",
            Game::Posg(_) => "posg",
        }
    }

    pub fn into_matrix(self) -> Result<MatrixGame> {
        match self {
            Game::Matrix(g) => Ok(g),
            other => Err(Error::Unsupported(format!(
                "expected a matrix game, got a {} game",
                other.kind()
            ))),
        }
    }

    /// Matrix games are promoted to one-state repeated games with `discount`.
    pub fn into_stochastic(self, discount: f64) -> Result<StochasticGame> {
        match self {
            Game::Matrix(g) => StochasticGame::repeated(&g, discount),
            Game::Stochastic(g) => Ok(g),
            Game::Posg(g) => Ok(g.base),
        }
    }
}

/// Independent mixed strategy per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedProfile {
    pub strategies: Vec<Vec<f64>>,
}

impl MixedProfile {
    pub fn new(strategies: Vec<Vec<f64>>) -> Result<Self> {
        for (agent, s) in strategies.iter().enumerate() {
            check_distribution(s, PROB_TOL)
                .map_err(|msg| Error::InvalidParameter(format!("strategy of agent {agent}: {msg}")))?;
        }
        Ok(Self { strategies })
    }

    pub fn uniform(actions: &[usize]) -> Self {
        Self {
            strategies: actions.iter().map(|&n| vec![1.0 / n as f64; n]).collect(),
        }
    }

    pub fn pure(actions: &[usize], choices: &[usize]) -> Self {
        Self {
            strategies: actions
                .iter()
                .zip(choices)
                .map(|(&n, &c)| {
                    let mut v = vec![0.0; n];
                    v[c] = 1.0;
                    v
                })
                .collect(),
        }
    }

    pub fn strategy(&self, agent: usize) -> &[f64] {
        &self.strategies[agent]
    }

    /// `∏_i s_i(a_i)` for the joint action `joint`.
    pub fn joint_probability(&self, space: &ActionSpace, joint: usize) -> f64 {
        self.strategies
            .iter()
            .enumerate()
            .map(|(i, s)| s[space.action_of(joint, i)])
            .product()
    }

    /// The product distribution over joint actions.
    pub fn product_distribution(&self, space: &ActionSpace) -> Vec<f64> {
        (0..space.joint_count()).map(|j| self.joint_probability(space, j)).collect()
    }
}

pub(crate) fn check_distribution(v: &[f64], tol: f64) -> std::result::Result<(), String> {
    if v.is_empty() {
        return Err("empty distribution".into());
    }
    if let Some(k) = v.iter().position(|p| !p.is_finite() || *p < 0.0) {
        return Err(format!("entry {k} = {} is not a probability", v[k]));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(format!("sums to {sum}"));
    }
    Ok(())
}

/// Clamps tiny negatives to zero and rescales to unit mass.
pub(crate) fn normalize_simplex(v: &mut [f64]) {
    for p in v.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        v.iter_mut().for_each(|p| *p /= sum);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pennies() -> MatrixGame {
        build_matrix_game(2, &[2, 2], vec![vec![1., -1., -1., 1.], vec![-1., 1., 1., -1.]])
            .unwrap()
    }

    #[test]
    fn matching_pennies_is_zero_sum() {
        let g = pennies();
        assert!(g.is_zero_sum());
        assert_eq!(g.joint_action_count(), 4);
    }

    #[test]
    fn wrong_entry_count_is_shape_error() {
        let err = build_matrix_game(2, &[2, 2], vec![vec![1., 2., 3.], vec![0.; 4]]).unwrap_err();
        assert!(matches!(err, Error::Shape(_)), "{err}");
    }

    #[test]
    fn non_finite_entry_rejected() {
        let err =
            build_matrix_game(2, &[2, 2], vec![vec![1., f64::NAN, 0., 0.], vec![0.; 4]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn three_agent_game() {
        let g = build_matrix_game(3, &[2, 2, 2], vec![vec![0.5; 8]; 3]).unwrap();
        assert_eq!(g.joint_action_count(), 8);
        assert!(!g.is_zero_sum());
        assert_eq!(g.payoffs(2).len(), g.joint_action_count());
    }

    #[test]
    fn expected_payoffs_of_classics() {
        let g = pennies();
        let u = g.expected_payoff(&MixedProfile::uniform(&[2, 2])).unwrap();
        assert_eq!(u, vec![0.0, 0.0]);

        let pd = classic_game("prisoners_dilemma").unwrap();
        let dd = MixedProfile::pure(&[2, 2], &[1, 1]);
        assert_eq!(pd.expected_payoff(&dd).unwrap(), vec![1.0, 1.0]);

        let rps = classic_game("rps").unwrap();
        let p = MixedProfile::new(vec![vec![1., 0., 0.], vec![1. / 3.; 3]]).unwrap();
        let u = rps.expected_payoff(&p).unwrap();
        assert!(u[0].abs() < 1e-15 && u[1].abs() < 1e-15);
    }

    #[test]
    fn expected_payoff_dimension_mismatch() {
        let g = pennies();
        let p = MixedProfile::uniform(&[3, 2]);
        assert!(matches!(g.expected_payoff(&p), Err(Error::Shape(_))));
    }

    #[test]
    fn stochastic_game_validation() {
        let ok = StochasticGame::new(1, vec![1], vec![1.0], vec![vec![1.0]], 0.9);
        assert!(ok.is_ok());
        let bad_row = StochasticGame::new(2, vec![1], vec![0.5, 0.4, 0.0, 1.0], vec![vec![0.0; 2]], 0.9);
        let msg = bad_row.unwrap_err().to_string();
        assert!(msg.contains("transition[0][0]"), "{msg}");
        for gamma in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(StochasticGame::new(1, vec![1], vec![1.0], vec![vec![1.0]], gamma).is_err());
        }
    }

    #[test]
    fn posg_rejects_out_of_range_observation() {
        let base = StochasticGame::new(2, vec![1], vec![1., 0., 0., 1.], vec![vec![0.; 2]], 0.5)
            .unwrap();
        assert!(PosgGame::new(base.clone(), vec![2], vec![vec![0, 1]]).is_ok());
        assert!(PosgGame::new(base.clone(), vec![1], vec![vec![0, 1]]).is_err());
        assert!(PosgGame::new(base, vec![2], vec![vec![0]]).is_err());
    }
}
