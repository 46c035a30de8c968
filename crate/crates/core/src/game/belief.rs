use serde::{Deserialize, Serialize};

use super::{check_distribution, PosgGame, PROB_TOL};
use crate::error::{Error, Result};

/// Distribution over hidden states held by one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    probs: Vec<f64>,
}

impl BeliefState {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_distribution(&probs, PROB_TOL)
            .map_err(|msg| Error::InvalidParameter(format!("belief {msg}")))?;
        Ok(Self { probs })
    }

    pub fn uniform(states: usize) -> Self {
        Self { probs: vec![1.0 / states as f64; states] }
    }

    pub fn point(states: usize, state: usize) -> Self {
        let mut probs = vec![0.0; states];
        probs[state] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Exact Bayes filter for one agent after the joint action `joint_action`
/// and the agent's observation:
/// `b'(s') ∝ 1[O_i(s') = o] · Σ_s P(s' | s, a) b(s)`.
///
/// The full joint action is conditioned on, not only the agent's own action.
pub fn belief_update(
    game: &PosgGame,
    prior: &BeliefState,
    joint_action: usize,
    observation: usize,
    agent: usize,
) -> Result<BeliefState> {
    let base = game.base();
    let states = base.num_states();
    if prior.probs.len() != states {
        return Err(Error::Shape(format!(
            "belief has {} entries, game has {states} states",
            prior.probs.len()
        )));
    }
    if agent >= base.num_agents() {
        return Err(Error::Shape(format!("agent {agent} out of range")));
    }
    if joint_action >= base.joint_action_count() {
        return Err(Error::Shape(format!("joint action {joint_action} out of range")));
    }
    if observation >= game.observation_counts()[agent] {
        return Err(Error::InvalidParameter(format!(
            "observation {observation} outside 0..{}",
            game.observation_counts()[agent]
        )));
    }

    let mut post = vec![0.0; states];
    for (s, &b) in prior.probs.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        for (next, p) in base.transition_row(s, joint_action).iter().enumerate() {
            post[next] += p * b;
        }
    }
    for (next, mass) in post.iter_mut().enumerate() {
        if game.observe(agent, next) != observation {
            *mass = 0.0;
        }
    }
    let total: f64 = post.iter().sum();
    if total <= 0.0 {
        return Err(Error::InconsistentObservation { agent, observation });
    }
    post.iter_mut().for_each(|p| *p /= total);
    Ok(BeliefState { probs: post })
}
