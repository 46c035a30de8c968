use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sample_categorical;
use crate::error::{Error, Result};
use crate::game::MatrixGame;

/// Power-iteration steps for the internal-regret stationary distribution.
const POWER_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegretMode {
    External,
    Internal,
}

impl fmt::Display for RegretMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegretMode::External => "external",
            RegretMode::Internal => "internal",
        })
    }
}

impl FromStr for RegretMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "external" => Ok(RegretMode::External),
            "internal" => Ok(RegretMode::Internal),
            other => Err(Error::InvalidParameter(format!("unknown regret mode '{other}'"))),
        }
    }
}

/// Cumulative regrets, play counts and empirical joint-action counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretState {
    pub mode: RegretMode,
    /// External: `regrets[i][a]`. Internal: `regrets[i][j * |A_i| + k]`, the
    /// gain of having played `k` whenever `j` was played.
    pub regrets: Vec<Vec<f64>>,
    pub play_counts: Vec<Vec<u64>>,
    pub joint_counts: Vec<u64>,
    pub rounds: u64,
    /// Last strategy per agent; warm start for internal-mode power iteration.
    strategies: Vec<Vec<f64>>,
}

impl RegretState {
    pub fn new(game: &MatrixGame, mode: RegretMode) -> Self {
        let actions = game.actions();
        let width = |k: usize| match mode {
            RegretMode::External => k,
            RegretMode::Internal => k * k,
        };
        Self {
            mode,
            regrets: actions.iter().map(|&k| vec![0.0; width(k)]).collect(),
            play_counts: actions.iter().map(|&k| vec![0; k]).collect(),
            joint_counts: vec![0; game.joint_action_count()],
            rounds: 0,
            strategies: actions.iter().map(|&k| vec![1.0 / k as f64; k]).collect(),
        }
    }

    /// Current mixed strategy of `agent`.
    pub fn strategy(&mut self, agent: usize) -> Vec<f64> {
        let k = self.play_counts[agent].len();
        let regrets = &self.regrets[agent];
        let strategy = match self.mode {
            RegretMode::External => positive_part_mixture(regrets),
            RegretMode::Internal => stationary_switch(regrets, k, &self.strategies[agent]),
        };
        self.strategies[agent].clone_from(&strategy);
        strategy
    }

    /// Folds the realised joint action into the regret tables.
    pub fn observe(&mut self, game: &MatrixGame, joint: usize) {
        let space = game.space();
        for agent in 0..game.num_agents() {
            let k = game.actions()[agent];
            let played = space.action_of(joint, agent);
            let realised = game.payoff(agent, joint);
            for alt in 0..k {
                let gain = game.payoff(agent, space.with_action(joint, agent, alt)) - realised;
                match self.mode {
                    RegretMode::External => self.regrets[agent][alt] += gain,
                    RegretMode::Internal => self.regrets[agent][played * k + alt] += gain,
                }
            }
            self.play_counts[agent][played] += 1;
        }
        self.joint_counts[joint] += 1;
        self.rounds += 1;
    }

    /// Largest positive average regret of `agent` in its own mode.
    pub fn average_regret(&self, agent: usize) -> f64 {
        if self.rounds == 0 {
            return 0.0;
        }
        let max = self.regrets[agent].iter().copied().fold(0.0, f64::max);
        max / self.rounds as f64
    }

    pub fn empirical_distribution(&self) -> Vec<f64> {
        let total = self.rounds.max(1) as f64;
        self.joint_counts.iter().map(|&c| c as f64 / total).collect()
    }
}

fn positive_part_mixture(regrets: &[f64]) -> Vec<f64> {
    let total: f64 = regrets.iter().map(|r| r.max(0.0)).sum();
    if total > 0.0 {
        regrets.iter().map(|r| r.max(0.0) / total).collect()
    } else {
        vec![1.0 / regrets.len() as f64; regrets.len()]
    }
}

/// Stationary distribution of the lazy switch chain
/// `M[j][k] = R⁺(j, k) / μ` (`k ≠ j`), `M[j][j] = 1 − Σ_k M[j][k]`.
fn stationary_switch(regrets: &[f64], k: usize, warm: &[f64]) -> Vec<f64> {
    let uniform = vec![1.0 / k as f64; k];
    let positive = |j: usize, l: usize| if j == l { 0.0 } else { regrets[j * k + l].max(0.0) };
    let row_sums: Vec<f64> = (0..k).map(|j| (0..k).map(|l| positive(j, l)).sum()).collect();
    let mu = 2.0 * row_sums.iter().copied().fold(0.0, f64::max);
    if !(mu > 0.0) || !mu.is_finite() {
        return uniform;
    }
    let mut p = warm.to_vec();
    for _ in 0..POWER_ITERATIONS {
        let mut next: Vec<f64> = (0..k).map(|j| p[j] * (1.0 - row_sums[j] / mu)).collect();
        for j in 0..k {
            for (l, slot) in next.iter_mut().enumerate() {
                *slot += p[j] * positive(j, l) / mu;
            }
        }
        p = next;
    }
    let total: f64 = p.iter().sum();
    if !total.is_finite() || total <= 0.0 || p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return uniform;
    }
    p.iter().map(|v| v / total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretPlayResult {
    pub empirical: Vec<f64>,
    /// `(round, average regret per agent)`.
    pub curve: Vec<(u64, Vec<f64>)>,
    /// Joint action played in every round.
    pub history: Vec<usize>,
    pub state: RegretState,
}

/// `rounds` rounds of regret matching by every agent.
pub fn regret_matching_play(game: &MatrixGame, rounds: usize, mode: RegretMode, seed: u64) -> Result<RegretPlayResult> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("regret matching needs at least one round".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = RegretState::new(game, mode);
    let record_every = (rounds / 1000).max(1);
    let mut curve = Vec::new();
    let mut history = Vec::with_capacity(rounds);
    let mut profile = vec![0usize; game.num_agents()];
    for t in 1..=rounds {
        for (agent, choice) in profile.iter_mut().enumerate() {
            let strategy = state.strategy(agent);
            *choice = sample_categorical(&mut rng, &strategy);
        }
        let joint = game.space().encode(&profile);
        state.observe(game, joint);
        history.push(joint);
        if t % record_every == 0 || t == rounds {
            curve.push((t as u64, (0..game.num_agents()).map(|i| state.average_regret(i)).collect()));
        }
    }
    Ok(RegretPlayResult { empirical: state.empirical_distribution(), curve, history, state })
}
