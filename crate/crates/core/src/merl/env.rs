use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static description of the 1-D rendezvous task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub num_agents: usize,
    pub horizon: usize,
    pub epsilon_meet: f64,
    /// Initial positions are uniform in `[-spread, spread]`.
    pub spread: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self { num_agents: 3, horizon: 25, epsilon_meet: 0.5, spread: 5.0 }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_agents < 2 {
            return Err(Error::InvalidParameter("rendezvous needs at least 2 agents".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if !(self.epsilon_meet > 0.0) || !self.epsilon_meet.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon_meet must be positive, got {}",
                self.epsilon_meet
            )));
        }
        if !(self.spread >= 0.0) || !self.spread.is_finite() {
            return Err(Error::InvalidParameter(format!("spread must be >= 0, got {}", self.spread)));
        }
        Ok(())
    }
}

/// Agents on a line moving with clipped velocities towards a common meeting point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RendezvousEnv {
    config: EnvConfig,
    positions: Vec<f64>,
    t: usize,
    done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepOutcome {
    pub next_state: Vec<f64>,
    /// `−|x_i − centroid of the others|` after the move.
    pub local_rewards: Vec<f64>,
    /// `1` once every pairwise distance is below `epsilon_meet`, else `0`.
    pub team_reward: f64,
    pub done: bool,
}

impl RendezvousEnv {
    /// Episode with positions drawn from `seed`.
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = (0..config.num_agents).map(|_| rng.random_range(-config.spread..=config.spread)).collect();
        Ok(Self { config, positions, t: 0, done: false })
    }

    pub fn from_positions(config: EnvConfig, positions: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if positions.len() != config.num_agents {
            return Err(Error::Shape(format!(
                "{} positions for {} agents",
                positions.len(),
                config.num_agents
            )));
        }
        if let Some(k) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("positions[{k}]")));
        }
        Ok(Self { config, positions, t: 0, done: false })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Actor features `(own position, centroid of the others, 1)`.
    pub fn features(&self, agent: usize) -> [f64; 3] {
        features(&self.positions, agent)
    }

    pub fn step(&mut self, actions: &[f64]) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        if actions.len() != self.config.num_agents {
            return Err(Error::Shape(format!(
                "{} actions for {} agents",
                actions.len(),
                self.config.num_agents
            )));
        }
        if let Some(k) = actions.iter().position(|a| a.is_nan()) {
            return Err(Error::NonFinite(format!("actions[{k}]")));
        }
        for (x, a) in self.positions.iter_mut().zip(actions) {
            *x += a.clamp(-1.0, 1.0);
        }
        self.t += 1;
        let local_rewards = (0..self.config.num_agents)
            .map(|i| {
                let [own, centroid, _] = features(&self.positions, i);
                -(own - centroid).abs()
            })
            .collect();
        let met = spread_of(&self.positions) < self.config.epsilon_meet;
        self.done = met || self.t >= self.config.horizon;
        Ok(StepOutcome {
            next_state: self.positions.clone(),
            local_rewards,
            team_reward: if met { 1.0 } else { 0.0 },
            done: self.done,
        })
    }
}

/// Largest pairwise distance.
fn spread_of(positions: &[f64]) -> f64 {
    let max = positions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = positions.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

pub(crate) fn features(positions: &[f64], agent: usize) -> [f64; 3] {
    let others: f64 = positions.iter().enumerate().filter(|&(j, _)| j != agent).map(|(_, x)| x).sum();
    [positions[agent], others / (positions.len() - 1) as f64, 1.0]
}

/// Free-function form of [`RendezvousEnv::step`].
pub fn env_step(env: &mut RendezvousEnv, joint_action: &[f64]) -> Result<StepOutcome> {
    env.step(joint_action)
}
