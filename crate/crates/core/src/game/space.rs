use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Games larger than this many payoff entries are rejected.
pub const MAX_ENTRIES: usize = 1_000_000;

/// The product action set `A_1 × … × A_N` with its canonical flattening.
///
/// Joint actions are encoded mixed-radix, row-major, agent 0 most
/// significant: for actions `[2, 3]` the profile `(1, 2)` has index `1*3 + 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ActionSpace {
    counts: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl ActionSpace {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Shape("a game needs at least one agent".into()));
        }
        if let Some(i) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Shape(format!("agent {i} has no actions")));
        }
        let mut strides = vec![1; counts.len()];
        let mut total: usize = 1;
        for i in (0..counts.len()).rev() {
            strides[i] = total;
            total = total
                .checked_mul(counts[i])
                .filter(|&t| t <= MAX_ENTRIES)
                .ok_or_else(|| {
                    Error::Unsupported(format!(
                        "joint action space {counts:?} exceeds {MAX_ENTRIES} entries"
                    ))
                })?;
        }
        Ok(Self { counts, strides, total })
    }

    pub fn num_agents(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn actions_of(&self, agent: usize) -> usize {
        self.counts[agent]
    }

    /// `∏ |A_i|`.
    pub fn joint_count(&self) -> usize {
        self.total
    }

    pub fn encode(&self, profile: &[usize]) -> usize {
        debug_assert_eq!(profile.len(), self.counts.len());
        profile.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        (0..self.counts.len()).map(|i| self.action_of(index, i)).collect()
    }

    /// Action of `agent` inside joint action `index`.
    #[inline]
    pub fn action_of(&self, index: usize, agent: usize) -> usize {
        (index / self.strides[agent]) % self.counts[agent]
    }

    /// Joint action obtained from `index` by replacing `agent`'s action.
    #[inline]
    pub fn with_action(&self, index: usize, agent: usize, action: usize) -> usize {
        let current = self.action_of(index, agent);
        index + action * self.strides[agent] - current * self.strides[agent]
    }
}

impl TryFrom<Vec<usize>> for ActionSpace {
    type Error = Error;

    fn try_from(counts: Vec<usize>) -> Result<Self> {
        ActionSpace::new(counts)
    }
}

impl From<ActionSpace> for Vec<usize> {
    fn from(space: ActionSpace) -> Self {
        space.counts
    }
}

/// `∏_{i} |A_i|` for a list of per-agent action counts.
pub fn joint_action_count(actions: &[usize]) -> usize {
    actions.iter().product()
}
