//! The restoration MDP: action sets, transition distributions,
//! reachability-driven construction and exact backward induction.

mod actions;
mod build;
mod solve;
mod transition;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::NetworkError;

pub use actions::enumerate_actions;
pub use build::{build_mdp, BuildOptions, MdpStats, RestorationMdp, DEFAULT_STATE_LIMIT};
pub use solve::{cost, goal_mask, solve, Goal, Solution, TIE_TOLERANCE};
pub use transition::transition_distribution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("an action must name at least one branch")]
    EmptyAction,
    #[error("action {action} cannot be applied in state {state}")]
    NotApplicable { action: Action, state: String },
    #[error("failure profile has {got} entries, network has {expected} branches")]
    ProfileLength { expected: usize, got: usize },
    #[error("state space exceeds the limit of {0} states")]
    StateLimitExceeded(usize),
    #[error("state {0} is not a goal state and has no actions")]
    DeadEnd(String),
    #[error("goal mask has {got} entries, MDP has {expected} states")]
    GoalLength { expected: usize, got: usize },
}

/// A set of branches closed simultaneously. Kept sorted and duplicate-free,
/// so the derived ordering is lexicographic on the index list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Action(Vec<usize>);

impl Action {
    pub fn new(branches: impl IntoIterator<Item = usize>) -> Result<Self, MdpError> {
        let mut list: Vec<usize> = branches.into_iter().collect();
        list.sort_unstable();
        list.dedup();
        if list.is_empty() {
            return Err(MdpError::EmptyAction);
        }
        Ok(Self(list))
    }

    pub fn branches(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, branch: usize) -> bool {
        self.0.binary_search(&branch).is_ok()
    }

    pub fn is_proper_subset_of(&self, other: &Action) -> bool {
        self.len() < other.len() && self.0.iter().all(|&j| other.contains(j))
    }
}

impl TryFrom<Vec<usize>> for Action {
    type Error = MdpError;

    fn try_from(list: Vec<usize>) -> Result<Self, Self::Error> {
        Action::new(list)
    }
}

impl From<Action> for Vec<usize> {
    fn from(action: Action) -> Self {
        action.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, j) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{j}")?;
        }
        f.write_str("}")
    }
}
