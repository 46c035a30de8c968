use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FEATURES: usize = 3;
pub const CRITIC_WEIGHTS: usize = 2 * FEATURES + 1;

/// `a = clip(θᵀφ, −1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearActor {
    pub theta: [f64; FEATURES],
}

impl LinearActor {
    pub fn preactivation(&self, phi: &[f64; FEATURES]) -> f64 {
        self.theta.iter().zip(phi).map(|(t, f)| t * f).sum()
    }

    pub fn act(&self, phi: &[f64; FEATURES]) -> f64 {
        self.preactivation(phi).clamp(-1.0, 1.0)
    }
}

/// `Q(φ, a) = wᵀψ(φ, a)` with `ψ = (a², aφ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCritic {
    pub w: [f64; CRITIC_WEIGHTS],
}

impl Default for QuadraticCritic {
    fn default() -> Self {
        Self { w: [0.0; CRITIC_WEIGHTS] }
    }
}

fn psi(phi: &[f64; FEATURES], a: f64) -> [f64; CRITIC_WEIGHTS] {
    [a * a, a * phi[0], a * phi[1], a * phi[2], phi[0], phi[1], phi[2]]
}

impl QuadraticCritic {
    pub fn value(&self, phi: &[f64; FEATURES], a: f64) -> f64 {
        self.w.iter().zip(psi(phi, a)).map(|(w, p)| w * p).sum()
    }

    /// `∂Q/∂a = 2 w₀ a + w₁..₃ · φ`.
    pub fn action_gradient(&self, phi: &[f64; FEATURES], a: f64) -> f64 {
        2.0 * self.w[0] * a + self.w[1] * phi[0] + self.w[2] * phi[1] + self.w[3] * phi[2]
    }
}

/// One agent's experience tuple in feature space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentTransition {
    pub phi: [f64; FEATURES],
    pub action: f64,
    pub reward: f64,
    pub next_phi: [f64; FEATURES],
}

/// Bounded FIFO experience store.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<AgentTransition>,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter("replay capacity must be at least 1".into()));
        }
        Ok(Self { capacity, items: VecDeque::with_capacity(capacity), inserted: 0 })
    }

    pub fn push(&mut self, t: AgentTransition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
        self.inserted += 1;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total insertions, including evicted ones.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn iter(&self) -> impl Iterator<Item = &AgentTransition> {
        self.items.iter()
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, size: usize) -> Vec<AgentTransition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..size).map(|_| self.items[rng.random_range(0..self.items.len())]).collect()
    }
}

fn nonempty(batch: &[AgentTransition]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidParameter("empty batch".into()));
    }
    Ok(())
}

/// TD targets `y = r + γ Q⁻(φ', π⁻(φ'))`.
pub fn td_targets(
    target_actor: &LinearActor,
    target_critic: &QuadraticCritic,
    batch: &[AgentTransition],
    gamma: f64,
) -> Vec<f64> {
    batch
        .iter()
        .map(|t| t.reward + gamma * target_critic.value(&t.next_phi, target_actor.act(&t.next_phi)))
        .collect()
}

/// `L(w) = (1/T) Σ (y − Q(φ, a; w))²` with fixed targets.
pub fn critic_loss(critic: &QuadraticCritic, batch: &[AgentTransition], targets: &[f64]) -> f64 {
    let sum: f64 = batch.iter().zip(targets).map(|(t, y)| (y - critic.value(&t.phi, t.action)).powi(2)).sum();
    sum / batch.len() as f64
}

/// `∇_w L = −(2/T) Σ (y − Q) ψ`.
pub fn critic_loss_gradient(
    critic: &QuadraticCritic,
    batch: &[AgentTransition],
    targets: &[f64],
) -> [f64; CRITIC_WEIGHTS] {
    let mut g = [0.0; CRITIC_WEIGHTS];
    let scale = -2.0 / batch.len() as f64;
    for (t, y) in batch.iter().zip(targets) {
        let err = y - critic.value(&t.phi, t.action);
        for (gk, pk) in g.iter_mut().zip(psi(&t.phi, t.action)) {
            *gk += scale * err * pk;
        }
    }
    g
}

/// One gradient step on the TD loss; targets use the target networks only.
pub fn critic_td_update(
    critic: &QuadraticCritic,
    target_actor: &LinearActor,
    target_critic: &QuadraticCritic,
    batch: &[AgentTransition],
    alpha_q: f64,
    gamma: f64,
) -> Result<QuadraticCritic> {
    nonempty(batch)?;
    let targets = td_targets(target_actor, target_critic, batch, gamma);
    let g = critic_loss_gradient(critic, batch, &targets);
    let w = std::array::from_fn(|k| critic.w[k] - alpha_q * g[k]);
    if w.iter().any(|v: &f64| !v.is_finite()) {
        return Err(Error::Numerical("non-finite critic weights".into()));
    }
    Ok(QuadraticCritic { w })
}

/// `(1/T) Σ ∇_θ π(φ) ∂Q/∂a |_{a = π(φ)}`; zero where the clip is active.
pub fn dpg_gradient(actor: &LinearActor, critic: &QuadraticCritic, batch: &[AgentTransition]) -> [f64; FEATURES] {
    let mut g = [0.0; FEATURES];
    let scale = 1.0 / batch.len() as f64;
    for t in batch {
        let pre = actor.preactivation(&t.phi);
        if pre.abs() >= 1.0 {
            continue;
        }
        let dq = critic.action_gradient(&t.phi, pre);
        for (gk, fk) in g.iter_mut().zip(&t.phi) {
            *gk += scale * fk * dq;
        }
    }
    g
}

/// `(1/T) Σ Q(φ, π(φ))`, the objective the DPG ascends.
pub fn actor_objective(actor: &LinearActor, critic: &QuadraticCritic, batch: &[AgentTransition]) -> f64 {
    batch.iter().map(|t| critic.value(&t.phi, actor.act(&t.phi))).sum::<f64>() / batch.len() as f64
}

pub fn dpg_actor_update(
    actor: &LinearActor,
    critic: &QuadraticCritic,
    batch: &[AgentTransition],
    alpha_pi: f64,
) -> Result<LinearActor> {
    nonempty(batch)?;
    let g = dpg_gradient(actor, critic, batch);
    let theta = std::array::from_fn(|k| actor.theta[k] + alpha_pi * g[k]);
    if theta.iter().any(|v: &f64| !v.is_finite()) {
        return Err(Error::Numerical("non-finite actor weights".into()));
    }
    Ok(LinearActor { theta })
}

/// `θ⁻ ← τθ + (1 − τ)θ⁻`.
pub fn soft_update(target: &[f64], online: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParameter(format!("tau must lie in [0, 1], got {tau}")));
    }
    if target.len() != online.len() {
        return Err(Error::Shape(format!("{} target vs {} online parameters", target.len(), online.len())));
    }
    Ok(target.iter().zip(online).map(|(t, o)| tau * o + (1.0 - tau) * t).collect())
}
