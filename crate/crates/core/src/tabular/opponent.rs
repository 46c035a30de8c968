use serde::Serialize;

use crate::equilibrium::best_response;
use crate::error::{Error, Result};
use crate::game::{MatrixGame, MixedProfile};

/// Empirical action counts of every agent in every state, with a Laplace prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpponentModel {
    /// `counts[agent][state][action]`.
    counts: Vec<Vec<Vec<u64>>>,
    prior: f64,
}

impl OpponentModel {
    pub fn new(actions: &[usize], states: usize, prior: f64) -> Result<Self> {
        if !(prior >= 0.0) || !prior.is_finite() {
            return Err(Error::InvalidParameter(format!("prior weight must be >= 0, got {prior}")));
        }
        Ok(Self { counts: actions.iter().map(|&k| vec![vec![0; k]; states]).collect(), prior })
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn states(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn counts(&self, agent: usize, state: usize) -> &[u64] {
        &self.counts[agent][state]
    }

    pub fn record(&mut self, agent: usize, state: usize, action: usize) -> Result<()> {
        let slot = self
            .counts
            .get_mut(agent)
            .and_then(|per_state| per_state.get_mut(state))
            .and_then(|row| row.get_mut(action))
            .ok_or_else(|| {
                Error::InvalidParameter(format!("no slot for agent {agent}, state {state}, action {action}"))
            })?;
        *slot += 1;
        Ok(())
    }

    /// Sets the counts of `agent` in `state` directly.
    pub fn set_counts(&mut self, agent: usize, state: usize, counts: Vec<u64>) -> Result<()> {
        let row = self
            .counts
            .get_mut(agent)
            .and_then(|per_state| per_state.get_mut(state))
            .ok_or_else(|| Error::InvalidParameter(format!("no row for agent {agent}, state {state}")))?;
        if row.len() != counts.len() {
            return Err(Error::Shape(format!("expected {} counts, got {}", row.len(), counts.len())));
        }
        *row = counts;
        Ok(())
    }
}

/// `(count + prior) / (total + prior·|A|)`, uniform when the denominator is zero.
pub fn estimate_opponent_policy(model: &OpponentModel, agent: usize, state: usize) -> Result<Vec<f64>> {
    let row = model
        .counts
        .get(agent)
        .and_then(|per_state| per_state.get(state))
        .ok_or_else(|| Error::InvalidParameter(format!("unknown agent {agent} or state {state}")))?;
    let k = row.len() as f64;
    let total = row.iter().sum::<u64>() as f64 + model.prior * k;
    if total == 0.0 {
        return Ok(vec![1.0 / k; row.len()]);
    }
    Ok(row.iter().map(|&c| (c as f64 + model.prior) / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FictitiousPlayResult {
    /// Empirical play frequencies after the last round.
    pub strategies: MixedProfile,
    /// Sum over agents of the best-response gain against the empirical profile, per round.
    pub exploitability: Vec<f64>,
}

/// Sum over agents of `max_a u_i(a, σ_{-i}) − u_i(σ)`.
pub fn exploitability(game: &MatrixGame, profile: &MixedProfile) -> Result<f64> {
    let current = game.expected_payoff(profile)?;
    let mut total = 0.0;
    for (agent, value) in current.iter().enumerate() {
        let (_, best) = best_response(game, profile, agent)?;
        total += (best - value).max(0.0);
    }
    Ok(total)
}

/// Simultaneous fictitious play from a uniform initial belief; ties go to the lowest action.
pub fn fictitious_play(game: &MatrixGame, rounds: usize) -> Result<FictitiousPlayResult> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("fictitious play needs at least one round".into()));
    }
    let n = game.num_agents();
    let mut model = OpponentModel::new(game.actions(), 1, 0.0)?;
    let mut exploitability_curve = Vec::with_capacity(rounds);
    let mut empirical = MixedProfile::uniform(game.actions());
    for _ in 0..rounds {
        let choices = (0..n).map(|agent| Ok(best_response(game, &empirical, agent)?.0)).collect::<Result<Vec<_>>>()?;
        for (agent, &action) in choices.iter().enumerate() {
            model.record(agent, 0, action)?;
        }
        empirical =
            MixedProfile { strategies: (0..n).map(|i| estimate_opponent_policy(&model, i, 0)).collect::<Result<_>>()? };
        exploitability_curve.push(exploitability(game, &empirical)?);
    }
    Ok(FictitiousPlayResult { strategies: empirical, exploitability: exploitability_curve })
}
