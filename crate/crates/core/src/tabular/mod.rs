//! Tabular solvers and learners for stochastic games.

mod correlated_q;
mod episode;
mod minimax_q;
mod opponent;
mod regret;
mod shapley;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use correlated_q::{correlated_q_train, CorrelatedQ, CorrelatedQResult};
pub use episode::{simulate_episode, EpisodeTrajectory, StagePolicy, Transition};
pub use minimax_q::{minimax_q_train, MinimaxQ, MinimaxQResult};
pub use opponent::{estimate_opponent_policy, exploitability, fictitious_play, FictitiousPlayResult, OpponentModel};
pub use regret::{regret_matching_play, RegretMode, RegretPlayResult, RegretState};
pub use shapley::{shapley_operator, shapley_value_iteration, ShapleySolution};

/// Exponent of the `one_over_visits` step-size rule.
pub const VISIT_DECAY_EXPONENT: f64 = 0.85;

/// Per-agent action-value tables `Q_i(s, a)` over joint actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTables {
    pub states: usize,
    pub joint_actions: usize,
    /// `tables[i][s * joint_actions + a]`.
    pub tables: Vec<Vec<f64>>,
}

impl QTables {
    pub fn zeros(agents: usize, states: usize, joint_actions: usize) -> Self {
        Self { states, joint_actions, tables: vec![vec![0.0; states * joint_actions]; agents] }
    }

    pub fn agents(&self) -> usize {
        self.tables.len()
    }

    #[inline]
    pub fn get(&self, agent: usize, state: usize, joint: usize) -> f64 {
        self.tables[agent][state * self.joint_actions + joint]
    }

    #[inline]
    pub fn set(&mut self, agent: usize, state: usize, joint: usize, value: f64) {
        self.tables[agent][state * self.joint_actions + joint] = value;
    }

    /// Row `Q_i(s, ·)`.
    pub fn state_row(&self, agent: usize, state: usize) -> &[f64] {
        let start = state * self.joint_actions;
        &self.tables[agent][start..start + self.joint_actions]
    }

    pub fn is_finite(&self) -> bool {
        self.tables.iter().flatten().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaDecay {
    Constant,
    OneOverVisits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningSchedule {
    pub alpha0: f64,
    pub alpha_decay: AlphaDecay,
    pub epsilon0: f64,
    /// Per-step multiplicative decay of the exploration rate.
    pub epsilon_decay: f64,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for LearningSchedule {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            alpha_decay: AlphaDecay::OneOverVisits,
            epsilon0: 0.2,
            epsilon_decay: 1.0,
            max_steps: 200_000,
            seed: 0,
        }
    }
}

impl LearningSchedule {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !in_unit(self.alpha0) {
            return Err(Error::InvalidParameter(format!("alpha0 must lie in (0, 1], got {}", self.alpha0)));
        }
        if !(0.0..=1.0).contains(&self.epsilon0) {
            return Err(Error::InvalidParameter(format!("epsilon0 must lie in [0, 1], got {}", self.epsilon0)));
        }
        if !in_unit(self.epsilon_decay) {
            return Err(Error::InvalidParameter(format!(
                "epsilon_decay must lie in (0, 1], got {}",
                self.epsilon_decay
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be at least 1".into()));
        }
        Ok(())
    }

    /// Step size for the update following `visits` earlier updates of the same entry.
    pub fn alpha(&self, visits: u64) -> f64 {
        match self.alpha_decay {
            AlphaDecay::Constant => self.alpha0,
            AlphaDecay::OneOverVisits => self.alpha0 / (1.0 + visits as f64).powf(VISIT_DECAY_EXPONENT),
        }
    }

    /// Exploration rate at step `t`.
    pub fn epsilon(&self, t: usize) -> f64 {
        self.epsilon0 * self.epsilon_decay.powf(t as f64)
    }
}

/// Snapshot of learned state values, taken every `record_every` steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub step: usize,
    /// `values[i][s]`.
    pub values: Vec<Vec<f64>>,
}

pub(crate) fn check_discount(discount: f64) -> Result<()> {
    if !(0.0..1.0).contains(&discount) {
        return Err(Error::InvalidParameter(format!("discount must lie in [0, 1), got {discount}")));
    }
    Ok(())
}

/// Draws an index from a probability vector by inversion.
pub fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schedule_rates() {
        let s = LearningSchedule { alpha0: 0.5, epsilon0: 0.4, epsilon_decay: 0.5, ..Default::default() };
        assert_eq!(s.alpha(0), 0.5);
        assert!((s.alpha(1) - 0.5 / 2f64.powf(0.85)).abs() < 1e-15);
        assert_eq!(s.epsilon(2), 0.1);
        let c = LearningSchedule { alpha_decay: AlphaDecay::Constant, ..s };
        assert_eq!(c.alpha(1000), 0.5);
    }

    #[test]
    fn schedule_validation() {
        assert!(LearningSchedule::default().validate().is_ok());
        for bad in [
            LearningSchedule { alpha0: 0.0, ..Default::default() },
            LearningSchedule { alpha0: 1.5, ..Default::default() },
            LearningSchedule { epsilon0: -0.1, ..Default::default() },
            LearningSchedule { epsilon_decay: 0.0, ..Default::default() },
            LearningSchedule { max_steps: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn categorical_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let probs = [0.2, 0.0, 0.8];
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            counts[sample_categorical(&mut rng, &probs)] += 1;
        }
        assert_eq!(counts[1], 0);
        assert!((counts[0] as f64 / 10_000.0 - 0.2).abs() < 0.02);
        assert_eq!(sample_categorical(&mut rng, &[0.0, 1.0]), 1);
    }
}
