use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{check_discount, sample_categorical, CurvePoint, LearningSchedule, QTables};
use crate::equilibrium::{solve_matrix_game, MinimaxSolution};
use crate::error::{Error, Result};
use crate::game::{MixedProfile, StochasticGame};

/// Minimax-Q learner holding agent 0's table; agent 1's is its negation.
#[derive(Debug, Clone)]
pub struct MinimaxQ<'g> {
    game: &'g StochasticGame,
    schedule: LearningSchedule,
    discount: f64,
    q: QTables,
    visits: Vec<u64>,
    /// Stage solution per state, dropped whenever that state's row changes.
    cache: Vec<Option<MinimaxSolution>>,
    rng: ChaCha8Rng,
    state: usize,
    step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaxQResult {
    pub q: QTables,
    pub values: Vec<f64>,
    pub policies: Vec<MixedProfile>,
    pub curve: Vec<CurvePoint>,
}

impl<'g> MinimaxQ<'g> {
    pub fn new(game: &'g StochasticGame, schedule: LearningSchedule) -> Result<Self> {
        if game.num_agents() != 2 || !game.is_zero_sum() {
            return Err(Error::Unsupported("minimax-Q needs a 2-player zero-sum game".into()));
        }
        schedule.validate()?;
        let (states, joint) = (game.num_states(), game.joint_action_count());
        Ok(Self {
            game,
            discount: game.discount(),
            q: QTables::zeros(1, states, joint),
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

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    fn stage(&mut self, state: usize) -> Result<&MinimaxSolution> {
        if self.cache[state].is_none() {
            let (m, n) = (self.game.actions()[0], self.game.actions()[1]);
            self.cache[state] = Some(solve_matrix_game(m, n, self.q.state_row(0, state))?);
        }
        Ok(self.cache[state].as_ref().expect("filled above"))
    }

    /// Minimax value of the current `Q(s, ·)` stage game at every state.
    pub fn state_values(&mut self) -> Result<Vec<f64>> {
        (0..self.game.num_states()).map(|s| Ok(self.stage(s)?.value)).collect()
    }

    pub fn policies(&mut self) -> Result<Vec<MixedProfile>> {
        (0..self.game.num_states()).map(|s| Ok(self.stage(s)?.strategies.clone())).collect()
    }

    /// One environment transition followed by one table update.
    pub fn step(&mut self) -> Result<()> {
        let s = self.state;
        let epsilon = self.schedule.epsilon(self.step);
        let strategies = self.stage(s)?.strategies.clone();
        let mut profile = [0usize; 2];
        for (agent, choice) in profile.iter_mut().enumerate() {
            *choice = if self.rng.random::<f64>() < epsilon {
                self.rng.random_range(0..self.game.actions()[agent])
            } else {
                sample_categorical(&mut self.rng, strategies.strategy(agent))
            };
        }
        let joint = self.game.space().encode(&profile);
        let reward = self.game.reward(0, s, joint);
        let next = sample_categorical(&mut self.rng, self.game.transition_row(s, joint));
        let target = reward + self.discount * self.stage(next)?.value;

        let idx = s * self.q.joint_actions + joint;
        let alpha = self.schedule.alpha(self.visits[idx]);
        self.visits[idx] += 1;
        let old = self.q.get(0, s, joint);
        self.q.set(0, s, joint, (1.0 - alpha) * old + alpha * target);
        self.cache[s] = None;
        if !self.q.tables[0][idx].is_finite() {
            return Err(Error::Diverged { step: self.step, reason: "non-finite Q entry".into() });
        }
        self.state = next;
        self.step += 1;
        Ok(())
    }

    /// Runs the remaining schedule, recording state values every `record_every` steps.
    pub fn run(mut self, record_every: usize) -> Result<MinimaxQResult> {
        let mut curve = Vec::new();
        while self.step < self.schedule.max_steps {
            self.step()?;
            if record_every > 0 && self.step.is_multiple_of(record_every) {
                curve.push(CurvePoint { step: self.step, values: vec![self.state_values()?] });
            }
        }
        let values = self.state_values()?;
        let policies = self.policies()?;
        Ok(MinimaxQResult { q: self.q, values, policies, curve })
    }
}

/// Trains minimax-Q for `schedule.max_steps` transitions on one continuing
/// trajectory starting in state 0.
pub fn minimax_q_train(game: &StochasticGame, schedule: &LearningSchedule) -> Result<MinimaxQResult> {
    let record_every = (schedule.max_steps / 100).max(1);
    MinimaxQ::new(game, schedule.clone())?.run(record_every)
}
