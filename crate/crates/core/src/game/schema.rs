//! JSON game documents.
//!
//! ```json
//! {"type": "matrix", "agents": 2, "actions": [2, 2],
//!  "payoffs": [[1, -1, -1, 1], [-1, 1, 1, -1]]}
//! ```
//!
//! Stochastic games give `payoffs[agent][state][joint]`,
//! `transition[state][joint][next]` and `discount`; POSGs add
//! `obs[agent][state]` and optionally `observations[agent]` (defaults to the
//! largest observation index plus one).

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActionSpace, Game, MatrixGame, PosgGame, StochasticGame, PROB_TOL, ZERO_SUM_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    Matrix,
    Stochastic,
    Posg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payoffs {
    /// `[agent][joint]`
    Matrix(Vec<Vec<f64>>),
    /// `[agent][state][joint]`
    PerState(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    #[serde(rename = "type")]
    pub kind: GameKind,
    pub agents: usize,
    pub actions: Vec<usize>,
    pub payoffs: Payoffs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discount: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observations: Option<Vec<usize>>,
    /// When true the loader also checks `u_1 + u_2 = 0`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub zero_sum: bool,
}

/// One failed invariant, located by tensor path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl GameDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks every game invariant and returns all violations, in document order.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.agents != self.actions.len() {
            out.push(Violation::new(
                "actions",
                format!("{} entries for {} agents", self.actions.len(), self.agents),
            ));
        }
        for (i, &n) in self.actions.iter().enumerate() {
            if n == 0 {
                out.push(Violation::new(format!("actions[{i}]"), "agent has no actions"));
            }
        }
        let space = match ActionSpace::new(self.actions.clone()) {
            Ok(s) => s,
            Err(e) => {
                if out.is_empty() {
                    out.push(Violation::new("actions", e.to_string()));
                }
                return out;
            }
        };
        let joint = space.joint_count();

        match self.kind {
            GameKind::Matrix => {
                self.validate_matrix(joint, &mut out);
                for (field, present) in [
                    ("transition", self.transition.is_some()),
                    ("discount", self.discount.is_some()),
                    ("obs", self.obs.is_some()),
                ] {
                    if present {
                        out.push(Violation::new(field, "not allowed for a matrix game"));
                    }
                }
            }
            GameKind::Stochastic | GameKind::Posg => {
                let states = self.validate_stochastic(joint, &mut out);
                if self.kind == GameKind::Posg {
                    self.validate_obs(states, &mut out);
                } else if self.obs.is_some() {
                    out.push(Violation::new("obs", "only allowed for a posg game"));
                }
            }
        }
        out
    }

    fn validate_matrix(&self, joint: usize, out: &mut Vec<Violation>) {
        let Payoffs::Matrix(p) = &self.payoffs else {
            out.push(Violation::new("payoffs", "matrix games need payoffs[agent][joint]"));
            return;
        };
        check_agent_count(p.len(), self.agents, out);
        for (i, tensor) in p.iter().enumerate() {
            if tensor.len() != joint {
                out.push(Violation::new(
                    format!("payoffs[{i}]"),
                    format!("expected {joint} entries, got {}", tensor.len()),
                ));
            }
        }
        if self.zero_sum {
            check_zero_sum(p.first(), p.get(1), self.agents, "payoffs", out);
        }
    }

    /// Returns the state count implied by the transition tensor.
    fn validate_stochastic(&self, joint: usize, out: &mut Vec<Violation>) -> usize {
        let states = match &self.transition {
            Some(t) => t.len(),
            None => {
                out.push(Violation::new("transition", "missing"));
                0
            }
        };
        if states == 0 && self.transition.is_some() {
            out.push(Violation::new("transition", "needs at least one state"));
        }
        if let Some(t) = &self.transition {
            'rows: for (s, per_action) in t.iter().enumerate() {
                if per_action.len() != joint {
                    out.push(Violation::new(
                        format!("transition[{s}]"),
                        format!("expected {joint} joint-action rows, got {}", per_action.len()),
                    ));
                    continue;
                }
                for (a, row) in per_action.iter().enumerate() {
                    let path = format!("transition[{s}][{a}]");
                    if row.len() != states {
                        out.push(Violation::new(
                            path,
                            format!("expected {states} next-state entries, got {}", row.len()),
                        ));
                        continue 'rows;
                    }
                    if let Some(k) = row.iter().position(|&p| p < 0.0) {
                        out.push(Violation::new(
                            format!("{path}[{k}]"),
                            format!("negative probability {}", row[k]),
                        ));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > PROB_TOL {
                        out.push(Violation::new(path, format!("row sums to {sum}, expected 1")));
                    }
                }
            }
        }
        match self.discount {
            None => out.push(Violation::new("discount", "missing")),
            Some(g) if !(g > 0.0 && g < 1.0) => out.push(Violation::new(
                "discount",
                format!("{g} is outside the open interval (0, 1)"),
            )),
            Some(_) => {}
        }
        match &self.payoffs {
            Payoffs::PerState(p) => {
                check_agent_count(p.len(), self.agents, out);
                for (i, per_state) in p.iter().enumerate() {
                    if per_state.len() != states {
                        out.push(Violation::new(
                            format!("payoffs[{i}]"),
                            format!("expected {states} states, got {}", per_state.len()),
                        ));
                        continue;
                    }
                    for (s, tensor) in per_state.iter().enumerate() {
                        if tensor.len() != joint {
                            out.push(Violation::new(
                                format!("payoffs[{i}][{s}]"),
                                format!("expected {joint} entries, got {}", tensor.len()),
                            ));
                        }
                    }
                }
                if self.zero_sum {
                    let flat = |x: Option<&Vec<Vec<f64>>>| x.map(|v| v.concat());
                    check_zero_sum(
                        flat(p.first()).as_ref(),
                        flat(p.get(1)).as_ref(),
                        self.agents,
                        "payoffs",
                        out,
                    );
                }
            }
            Payoffs::Matrix(_) => out.push(Violation::new(
                "payoffs",
                "stochastic games need payoffs[agent][state][joint]",
            )),
        }
        states
    }

    fn validate_obs(&self, states: usize, out: &mut Vec<Violation>) {
        let Some(obs) = &self.obs else {
            out.push(Violation::new("obs", "missing"));
            return;
        };
        check_agent_count(obs.len(), self.agents, out);
        if let Some(counts) = &self.observations {
            if counts.len() != self.agents {
                out.push(Violation::new(
                    "observations",
                    format!("{} entries for {} agents", counts.len(), self.agents),
                ));
            }
        }
        for (i, map) in obs.iter().enumerate() {
            if map.len() != states {
                out.push(Violation::new(
                    format!("obs[{i}]"),
                    format!("expected {states} entries, got {}", map.len()),
                ));
            }
            if let Some(limit) = self.observations.as_ref().and_then(|c| c.get(i)) {
                for (s, &o) in map.iter().enumerate() {
                    if o >= *limit {
                        out.push(Violation::new(
                            format!("obs[{i}][{s}]"),
                            format!("observation {o} outside 0..{limit}"),
                        ));
                    }
                }
            }
        }
    }

    /// Validates and builds the game; fails with the first violation.
    pub fn to_game(&self) -> Result<Game> {
        if let Some(v) = self.validate().into_iter().next() {
            return Err(Error::InvalidGame(v.to_string()));
        }
        match (&self.kind, &self.payoffs) {
            (GameKind::Matrix, Payoffs::Matrix(p)) => {
                MatrixGame::new(self.actions.clone(), p.clone()).map(Game::Matrix)
            }
            (_, Payoffs::PerState(p)) => {
                let transition = self.transition.as_ref().expect("validated");
                let states = transition.len();
                let flat: Vec<f64> = transition.iter().flatten().flatten().copied().collect();
                let rewards = p.iter().map(|per_state| per_state.concat()).collect();
                let base = StochasticGame::new(
                    states,
                    self.actions.clone(),
                    flat,
                    rewards,
                    self.discount.expect("validated"),
                )?;
                if self.kind == GameKind::Stochastic {
                    return Ok(Game::Stochastic(base));
                }
                let obs = self.obs.clone().expect("validated");
                let counts = self.observations.clone().unwrap_or_else(|| {
                    obs.iter()
                        .map(|m| m.iter().max().map_or(1, |&o| o + 1))
                        .collect()
                });
                PosgGame::new(base, counts, obs).map(Game::Posg)
            }
            _ => unreachable!("payoff layout checked by validate"),
        }
    }

    pub fn from_game(game: &Game) -> Self {
        match game {
            Game::Matrix(g) => Self {
                kind: GameKind::Matrix,
                agents: g.num_agents(),
                actions: g.actions().to_vec(),
                payoffs: Payoffs::Matrix(
                    (0..g.num_agents()).map(|i| g.payoffs(i).to_vec()).collect(),
                ),
                transition: None,
                discount: None,
                obs: None,
                observations: None,
                zero_sum: g.is_zero_sum(),
            },
            Game::Stochastic(g) => Self::from_stochastic(g, GameKind::Stochastic),
            Game::Posg(g) => {
                let mut doc = Self::from_stochastic(g.base(), GameKind::Posg);
                doc.obs = Some(g.obs_map().to_vec());
                doc.observations = Some(g.observation_counts().to_vec());
                doc
            }
        }
    }

    fn from_stochastic(g: &StochasticGame, kind: GameKind) -> Self {
        let joint = g.joint_action_count();
        let states = g.num_states();
        let payoffs = (0..g.num_agents())
            .map(|i| g.rewards(i).chunks(joint).map(<[f64]>::to_vec).collect())
            .collect();
        let transition = g
            .transition()
            .chunks(joint * states)
            .map(|per_state| per_state.chunks(states).map(<[f64]>::to_vec).collect())
            .collect();
        Self {
            kind,
            agents: g.num_agents(),
            actions: g.actions().to_vec(),
            payoffs: Payoffs::PerState(payoffs),
            transition: Some(transition),
            discount: Some(g.discount()),
            obs: None,
            observations: None,
            zero_sum: g.is_zero_sum(),
        }
    }
}

fn check_agent_count(got: usize, agents: usize, out: &mut Vec<Violation>) {
    if got != agents {
        out.push(Violation::new(
            "payoffs",
            format!("expected {agents} payoff tensors, got {got}"),
        ));
    }
}

fn check_zero_sum(
    first: Option<&Vec<f64>>,
    second: Option<&Vec<f64>>,
    agents: usize,
    what: &str,
    out: &mut Vec<Violation>,
) {
    if agents != 2 {
        out.push(Violation::new("zero_sum", "zero-sum games must have 2 agents"));
        return;
    }
    if let (Some(a), Some(b)) = (first, second) {
        if let Some(k) = a.iter().zip(b).position(|(x, y)| (x + y).abs() > ZERO_SUM_TOL) {
            out.push(Violation::new(
                format!("{what}[*][{k}]"),
                format!("u_1 + u_2 = {} is not zero", a[k] + b[k]),
            ));
        }
    }
}

/// Reads, validates and builds a game from a JSON file.
pub fn load_game(path: impl AsRef<Path>) -> Result<Game> {
    GameDocument::load(path)?.to_game()
}
