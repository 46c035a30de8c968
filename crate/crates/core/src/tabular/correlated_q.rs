use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{check_discount, sample_categorical, CurvePoint, LearningSchedule, QTables};
use crate::equilibrium::{ce_check, correlated_eq_solve, CeObjective, CorrelatedPolicy};
use crate::error::{Error, Result};
use crate::game::{MatrixGame, StochasticGame};

/// Largest incentive-constraint violation tolerated on a freshly solved stage CE.
const STAGE_CE_TOL: f64 = 1e-9;

/// Correlated-Q learner over joint-action Q tables for every agent.
#[derive(Debug, Clone)]
pub struct CorrelatedQ<'g> {
    game: &'g StochasticGame,
    objective: CeObjective,
    schedule: LearningSchedule,
    discount: f64,
    q: QTables,
    visits: Vec<u64>,
    cache: Vec<Option<CorrelatedPolicy>>,
    /// Shared correlation device and environment sampler.
    rng: ChaCha8Rng,
    state: usize,
    step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelatedQResult {
    pub q: QTables,
    /// `values[i][s] = Σ_a λ_s(a) Q_i(s, a)`.
    pub values: Vec<Vec<f64>>,
    pub policies: Vec<CorrelatedPolicy>,
    pub curve: Vec<CurvePoint>,
}

impl<'g> CorrelatedQ<'g> {
    pub fn new(game: &'g StochasticGame, objective: CeObjective, schedule: LearningSchedule) -> Result<Self> {
        schedule.validate()?;
        let (agents, states, joint) = (game.num_agents(), game.num_states(), game.joint_action_count());
        Ok(Self {
            game,
            objective,
            discount: game.discount(),
            q: QTables::zeros(agents, states, joint),
            visits: vec![0; states * joint],
            cache: vec![None; states],
            rng: ChaCha8Rng::seed_from_u64(schedule.seed),
            schedule,
            state: 0,
            step: 0,
        })
    }

    /// Overrides the game's discount; `0` is allowed here.
    pub fn with_discount(mut self, discount: f64) -> Result<Self> {
        check_discount(discount)?;
        self.discount = discount;
        Ok(self)
    }

    pub fn q(&self) -> &QTables {
        &self.q
    }

    /// Stage game whose agent-`i` payoffs are `Q_i(s, ·)`.
    pub fn q_stage_game(&self, state: usize) -> Result<MatrixGame> {
        let payoffs = (0..self.q.agents()).map(|i| self.q.state_row(i, state).to_vec()).collect();
        MatrixGame::new(self.game.actions().to_vec(), payoffs)
    }

    fn stage(&mut self, state: usize) -> Result<&CorrelatedPolicy> {
        if self.cache[state].is_none() {
            let stage = self.q_stage_game(state)?;
            let lambda = correlated_eq_solve(&stage, self.objective)?;
            let report = ce_check(&stage, &lambda, STAGE_CE_TOL)?;
            if !report.passes {
                return Err(Error::Numerical(format!(
                    "stage CE at state {state} violates an incentive constraint by {:e}",
                    report.worst
                )));
            }
            self.cache[state] = Some(lambda);
        }
        Ok(self.cache[state].as_ref().expect("filled above"))
    }

    fn value(&mut self, agent: usize, state: usize) -> Result<f64> {
        let lambda = self.stage(state)?.lambda.clone();
        Ok(lambda.iter().zip(self.q.state_row(agent, state)).map(|(l, q)| l * q).sum())
    }

    pub fn state_values(&mut self) -> Result<Vec<Vec<f64>>> {
        (0..self.q.agents()).map(|i| (0..self.game.num_states()).map(|s| self.value(i, s)).collect()).collect()
    }

    pub fn policies(&mut self) -> Result<Vec<CorrelatedPolicy>> {
        (0..self.game.num_states()).map(|s| Ok(self.stage(s)?.clone())).collect()
    }

    pub fn step(&mut self) -> Result<()> {
        let s = self.state;
        let epsilon = self.schedule.epsilon(self.step);
        let joint_count = self.q.joint_actions;
        let joint = if self.rng.random::<f64>() < epsilon {
            self.rng.random_range(0..joint_count)
        } else {
            let lambda = self.stage(s)?.lambda.clone();
            sample_categorical(&mut self.rng, &lambda)
        };
        let next = sample_categorical(&mut self.rng, self.game.transition_row(s, joint));
        let idx = s * joint_count + joint;
        let alpha = self.schedule.alpha(self.visits[idx]);
        self.visits[idx] += 1;
        let targets: Vec<f64> = (0..self.q.agents())
            .map(|i| Ok(self.game.reward(i, s, joint) + self.discount * self.value(i, next)?))
            .collect::<Result<_>>()?;
        for (i, target) in targets.into_iter().enumerate() {
            let old = self.q.get(i, s, joint);
            let new = (1.0 - alpha) * old + alpha * target;
            if !new.is_finite() {
                return Err(Error::Diverged { step: self.step, reason: "non-finite Q entry".into() });
            }
            self.q.set(i, s, joint, new);
        }
        self.cache[s] = None;
        self.state = next;
        self.step += 1;
        Ok(())
    }

    pub fn run(mut self, record_every: usize) -> Result<CorrelatedQResult> {
        let mut curve = Vec::new();
        while self.step < self.schedule.max_steps {
            self.step()?;
            if record_every > 0 && self.step.is_multiple_of(record_every) {
                curve.push(CurvePoint { step: self.step, values: self.state_values()? });
            }
        }
        let values = self.state_values()?;
        let policies = self.policies()?;
        Ok(CorrelatedQResult { q: self.q, values, policies, curve })
    }
}

/// Trains correlated-Q for `schedule.max_steps` transitions from state 0.
pub fn correlated_q_train(
    game: &StochasticGame,
    objective: CeObjective,
    schedule: &LearningSchedule,
) -> Result<CorrelatedQResult> {
    let record_every = (schedule.max_steps / 100).max(1);
    CorrelatedQ::new(game, objective, schedule.clone())?.run(record_every)
}
