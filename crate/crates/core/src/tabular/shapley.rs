use serde::Serialize;

use crate::equilibrium::solve_matrix_game;
use crate::error::{Error, Result};
use crate::game::{MixedProfile, StochasticGame};

/// Hard cap on Shapley sweeps; far beyond what any `γ < 1` game needs.
const MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapleySolution {
    /// State values to agent 0.
    pub values: Vec<f64>,
    /// Stage strategies at the final sweep.
    pub strategies: Vec<MixedProfile>,
    pub sweeps: usize,
}

fn check_zero_sum(game: &StochasticGame) -> Result<()> {
    if game.num_agents() != 2 || !game.is_zero_sum() {
        return Err(Error::Unsupported("Shapley iteration needs a 2-player zero-sum game".into()));
    }
    Ok(())
}

/// One sweep `V'(s) = val[R_0(s, ·) + γ Σ_{s'} P(s' | s, ·) V(s')]`.
pub fn shapley_operator(game: &StochasticGame, values: &[f64]) -> Result<(Vec<f64>, Vec<MixedProfile>)> {
    check_zero_sum(game)?;
    if values.len() != game.num_states() {
        return Err(Error::Shape(format!(
            "value vector has {} entries, game has {} states",
            values.len(),
            game.num_states()
        )));
    }
    let (m, n) = (game.actions()[0], game.actions()[1]);
    let gamma = game.discount();
    let mut next = Vec::with_capacity(values.len());
    let mut strategies = Vec::with_capacity(values.len());
    for s in 0..game.num_states() {
        let stage: Vec<f64> = game
            .stage_rewards(0, s)
            .iter()
            .enumerate()
            .map(|(a, r)| {
                let future: f64 = game.transition_row(s, a).iter().zip(values).map(|(p, v)| p * v).sum();
                r + gamma * future
            })
            .collect();
        let sol = solve_matrix_game(m, n, &stage)?;
        next.push(sol.value);
        strategies.push(sol.strategies);
    }
    Ok((next, strategies))
}

/// Iterates the Shapley operator from zero until the sup-norm change is at most `tol`.
pub fn shapley_value_iteration(game: &StochasticGame, tol: f64) -> Result<ShapleySolution> {
    check_zero_sum(game)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut values = vec![0.0; game.num_states()];
    for sweep in 1..=MAX_SWEEPS {
        let (next, strategies) = shapley_operator(game, &values)?;
        let change = next.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        values = next;
        if change <= tol {
            return Ok(ShapleySolution { values, strategies, sweeps: sweep });
        }
    }
    Err(Error::Numerical(format!("Shapley iteration did not converge in {MAX_SWEEPS} sweeps")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{classic_game, random_stochastic_game, MatrixGame};

    #[test]
    fn single_action_geometric_series() {
        let g = MatrixGame::zero_sum(&[vec![1.0]]).unwrap();
        let sg = StochasticGame::repeated(&g, 0.9).unwrap();
        let sol = shapley_value_iteration(&sg, 1e-12).unwrap();
        assert!((sol.values[0] - 10.0).abs() < 1e-10);
    }

    #[test]
    fn matching_pennies_zero_value() {
        let sg = StochasticGame::repeated(&classic_game("matching_pennies").unwrap(), 0.7).unwrap();
        let sol = shapley_value_iteration(&sg, 1e-12).unwrap();
        assert!(sol.values[0].abs() < 1e-12);
        for p in &sol.strategies[0].strategies {
            assert!(p.iter().all(|v| (v - 0.5).abs() < 1e-9));
        }
    }

    #[test]
    fn fixed_point_residual() {
        for seed in 0..5 {
            let g = random_stochastic_game(seed, &[2, 2], true, 3, 0.9).unwrap();
            let sol = shapley_value_iteration(&g, 1e-10).unwrap();
            let (again, _) = shapley_operator(&g, &sol.values).unwrap();
            let residual = again.iter().zip(&sol.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(residual <= 1e-9, "seed {seed}: residual {residual}");
        }
    }

    #[test]
    fn rejects_general_sum() {
        let sg = StochasticGame::repeated(&classic_game("prisoners_dilemma").unwrap(), 0.9).unwrap();
        assert!(shapley_value_iteration(&sg, 1e-6).is_err());
    }
}
