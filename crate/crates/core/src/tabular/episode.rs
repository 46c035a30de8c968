use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sample_categorical;
use crate::equilibrium::CorrelatedPolicy;
use crate::error::{Error, Result};
use crate::game::{check_distribution, MixedProfile, StochasticGame};

/// Per-state behaviour of all agents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StagePolicy {
    /// Each agent samples its own mixture.
    Independent(Vec<MixedProfile>),
    /// One joint action drawn from `λ_s` per step.
    Correlated(Vec<CorrelatedPolicy>),
}

impl StagePolicy {
    fn validate(&self, game: &StochasticGame) -> Result<()> {
        let states = game.num_states();
        let count = match self {
            StagePolicy::Independent(p) => p.len(),
            StagePolicy::Correlated(p) => p.len(),
        };
        if count != states {
            return Err(Error::Shape(format!("{count} stage policies for {states} states")));
        }
        match self {
            StagePolicy::Independent(profiles) => {
                for (s, profile) in profiles.iter().enumerate() {
                    let shapes: Vec<usize> = profile.strategies.iter().map(Vec::len).collect();
                    if shapes != game.actions() {
                        return Err(Error::Shape(format!("state {s}: strategy sizes {shapes:?}")));
                    }
                    for (i, p) in profile.strategies.iter().enumerate() {
                        check_distribution(p, 1e-9)
                            .map_err(|m| Error::InvalidParameter(format!("state {s}, agent {i}: {m}")))?;
                    }
                }
            }
            StagePolicy::Correlated(policies) => {
                for (s, policy) in policies.iter().enumerate() {
                    if policy.lambda.len() != game.joint_action_count() {
                        return Err(Error::Shape(format!("state {s}: lambda has {} entries", policy.lambda.len())));
                    }
                    check_distribution(&policy.lambda, 1e-9)
                        .map_err(|m| Error::InvalidParameter(format!("state {s}: {m}")))?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub state: usize,
    pub joint: usize,
    pub rewards: Vec<f64>,
    pub next: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeTrajectory {
    pub transitions: Vec<Transition>,
    /// `Σ_t γ^t r_i(t)` per agent.
    pub returns: Vec<f64>,
}

/// Seeded rollout of `horizon` steps from state 0.
pub fn simulate_episode(
    game: &StochasticGame,
    policies: &StagePolicy,
    horizon: usize,
    seed: u64,
) -> Result<EpisodeTrajectory> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    policies.validate(game)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = game.num_agents();
    let mut returns = vec![0.0; n];
    let mut transitions = Vec::with_capacity(horizon);
    let mut discount = 1.0;
    let mut state = 0;
    let mut profile = vec![0; n];
    for _ in 0..horizon {
        let joint = match policies {
            StagePolicy::Independent(p) => {
                for (agent, choice) in profile.iter_mut().enumerate() {
                    *choice = sample_categorical(&mut rng, p[state].strategy(agent));
                }
                game.space().encode(&profile)
            }
            StagePolicy::Correlated(p) => sample_categorical(&mut rng, &p[state].lambda),
        };
        let rewards: Vec<f64> = (0..n).map(|i| game.reward(i, state, joint)).collect();
        for (ret, r) in returns.iter_mut().zip(&rewards) {
            *ret += discount * r;
        }
        discount *= game.discount();
        let next = sample_categorical(&mut rng, game.transition_row(state, joint));
        transitions.push(Transition { state, joint, rewards, next });
        state = next;
    }
    Ok(EpisodeTrajectory { transitions, returns })
}
