//! Operator loop over a solved restoration MDP: recommend, observe,
//! advance, and re-solve when the goal changes.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fragility::{FailureProfile, FragilityError};
use crate::mdp::{
    build_mdp, goal_mask, solve, Action, BuildOptions, Goal, MdpError, MdpStats, RestorationMdp,
    Solution,
};
use crate::network::{
    ActionRules, BranchStatus, Network, NetworkDocument, NetworkError, SystemState,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Fragility(#[from] FragilityError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error("outcome reported for branch {0}, which is not part of the action")]
    OutcomeOutsideAction(usize),
    #[error("no outcome reported for branch {0} of the action")]
    MissingOutcome(usize),
    #[error("action {action} is not available in state {state}")]
    InfeasibleAction { action: Action, state: String },
    #[error("outcome {outcome} has zero probability under the failure profile")]
    ImpossibleOutcome { outcome: String },
    #[error("history step {step}: {source}")]
    History {
        step: usize,
        #[source]
        source: Box<PlannerError>,
    },
    #[error("snapshot current state {stored} does not match replayed state {replayed}")]
    SnapshotMismatch { stored: String, replayed: String },
}

/// Field result for one closed branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "E")]
    Energized,
    #[serde(rename = "D")]
    Damaged,
}

impl Outcome {
    fn status(self) -> BranchStatus {
        match self {
            Outcome::Energized => BranchStatus::Energized,
            Outcome::Damaged => BranchStatus::Damaged,
        }
    }
}

/// An applied action and the per-branch result reported from the field.
///
/// Serialized as `{"action":[1,4],"outcomes":{"1":"D","4":"E"}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub action: Action,
    pub outcomes: BTreeMap<usize, Outcome>,
}

impl Observation {
    pub fn new(action: Action, outcomes: BTreeMap<usize, Outcome>) -> Self {
        Self { action, outcomes }
    }

    /// Every branch of the action energized.
    pub fn all_energized(action: Action) -> Self {
        let outcomes = action
            .branches()
            .iter()
            .map(|&j| (j, Outcome::Energized))
            .collect();
        Self { action, outcomes }
    }

    fn check_keys(&self) -> Result<(), PlannerError> {
        if let Some(&j) = self.outcomes.keys().find(|&&j| !self.action.contains(j)) {
            return Err(PlannerError::OutcomeOutsideAction(j));
        }
        if let Some(&j) = self
            .action
            .branches()
            .iter()
            .find(|j| !self.outcomes.contains_key(j))
        {
            return Err(PlannerError::MissingOutcome(j));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recommendation {
    Act(Action),
    /// The current state is a goal state; nothing left to do.
    Terminal,
}

impl Recommendation {
    pub fn action(&self) -> Option<&Action> {
        match self {
            Recommendation::Act(a) => Some(a),
            Recommendation::Terminal => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WhatIf {
    pub successor: SystemState,
    pub remaining_steps: f64,
    pub next: Recommendation,
}

/// Serializable construction options of a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionOptions {
    #[serde(default = "default_true")]
    pub simplify: bool,
    #[serde(default)]
    pub forbid_source_island_merge: bool,
    /// Status string of the starting state, e.g. `"EUUUUU"` when branch 0
    /// is known to be intact and closed. All-unknown when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
}

fn default_true() -> bool {
    true
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            simplify: true,
            forbid_source_island_merge: false,
            initial: None,
        }
    }
}

impl SessionOptions {
    pub fn build_options(&self, branch_count: usize) -> Result<BuildOptions, NetworkError> {
        let initial = match &self.initial {
            Some(text) => {
                let s: SystemState = text.parse()?;
                if s.len() != branch_count {
                    return Err(NetworkError::StateLength {
                        expected: branch_count,
                        got: s.len(),
                    });
                }
                Some(s)
            }
            None => None,
        };
        let mut rules = ActionRules::default();
        rules.forbid_source_island_merge = self.forbid_source_island_merge;
        Ok(BuildOptions {
            simplify: self.simplify,
            rules,
            initial,
            ..Default::default()
        })
    }
}

/// Persisted form of a session: enough to rebuild it by replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub network: NetworkDocument,
    pub p_f: FailureProfile,
    #[serde(default)]
    pub goal: Goal,
    #[serde(default)]
    pub options: SessionOptions,
    pub history: Vec<Observation>,
    pub current: String,
}

/// A live restoration run.
#[derive(Debug, Clone)]
pub struct Session {
    network: Arc<Network>,
    profile: FailureProfile,
    options: SessionOptions,
    mdp: Arc<RestorationMdp>,
    goal: Goal,
    goal_mask: Vec<bool>,
    solution: Solution,
    current: usize,
    history: Vec<Observation>,
}

impl Session {
    /// Builds and solves the MDP for `network` and `profile`.
    pub fn start(
        network: Arc<Network>,
        profile: FailureProfile,
        options: SessionOptions,
        goal: Goal,
    ) -> Result<Self, PlannerError> {
        let build = options.build_options(network.branch_count())?;
        Self::with_build_options(network, profile, options, &build, goal)
    }

    /// Like [`Session::start`], with full control over the build (for
    /// example to install a state-validity hook).
    pub fn with_build_options(
        network: Arc<Network>,
        profile: FailureProfile,
        options: SessionOptions,
        build: &BuildOptions,
        goal: Goal,
    ) -> Result<Self, PlannerError> {
        let mdp = Arc::new(build_mdp(&network, &profile, build)?);
        let goal_mask = goal_mask(&mdp, &network, &goal)?;
        let solution = solve(&mdp, &goal_mask)?;
        Ok(Self {
            network,
            profile,
            options,
            mdp,
            goal,
            goal_mask,
            solution,
            current: 0,
            history: Vec::new(),
        })
    }

    /// Rebuilds a session by applying `history` from the initial state.
    pub fn replay(
        network: Arc<Network>,
        profile: FailureProfile,
        options: SessionOptions,
        goal: Goal,
        history: &[Observation],
    ) -> Result<Self, PlannerError> {
        let mut session = Self::start(network, profile, options, goal)?;
        for (step, obs) in history.iter().enumerate() {
            session
                .apply_observation(obs.clone())
                .map_err(|e| PlannerError::History {
                    step,
                    source: Box::new(e),
                })?;
        }
        Ok(session)
    }

    pub fn from_snapshot(snapshot: SessionSnapshot) -> Result<Self, PlannerError> {
        let network = Arc::new(Network::from_document(snapshot.network)?);
        let session = Self::replay(
            network,
            snapshot.p_f,
            snapshot.options,
            snapshot.goal,
            &snapshot.history,
        )?;
        let replayed = session.current_state().to_string();
        if replayed != snapshot.current {
            return Err(PlannerError::SnapshotMismatch {
                stored: snapshot.current,
                replayed,
            });
        }
        Ok(session)
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            network: self.network.to_document(),
            p_f: self.profile.clone(),
            goal: self.goal.clone(),
            options: self.options.clone(),
            history: self.history.clone(),
            current: self.current_state().to_string(),
        }
    }

    pub fn network(&self) -> &Arc<Network> {
        &self.network
    }

    pub fn profile(&self) -> &FailureProfile {
        &self.profile
    }

    pub fn options(&self) -> &SessionOptions {
        &self.options
    }

    pub fn mdp(&self) -> &RestorationMdp {
        &self.mdp
    }

    pub fn stats(&self) -> MdpStats {
        self.mdp.stats()
    }

    pub fn goal(&self) -> &Goal {
        &self.goal
    }

    pub fn solution(&self) -> &Solution {
        &self.solution
    }

    pub fn history(&self) -> &[Observation] {
        &self.history
    }

    pub fn current_index(&self) -> usize {
        self.current
    }

    pub fn current_state(&self) -> &SystemState {
        self.mdp.state(self.current)
    }

    /// Expected remaining steps from the current state.
    pub fn current_value(&self) -> f64 {
        self.solution.values[self.current]
    }

    /// Expected steps from the initial state.
    pub fn initial_value(&self) -> f64 {
        self.solution.values[0]
    }

    pub fn is_goal(&self) -> bool {
        self.goal_mask[self.current]
    }

    /// Actions the operator may apply in the current state.
    pub fn available_actions(&self) -> &[Action] {
        self.mdp.actions(self.current)
    }

    fn recommendation_at(&self, state: usize) -> Recommendation {
        match self.solution.action(&self.mdp, state) {
            Some(a) if !self.goal_mask[state] => Recommendation::Act(a.clone()),
            _ => Recommendation::Terminal,
        }
    }

    pub fn recommend(&self) -> Recommendation {
        self.recommendation_at(self.current)
    }

    /// Resolves `obs` against state `from` without mutating anything.
    fn successor_of(&self, from: usize, obs: &Observation) -> Result<usize, PlannerError> {
        obs.check_keys()?;
        let state = self.mdp.state(from);
        if self.mdp.action_position(from, &obs.action).is_none() {
            return Err(PlannerError::InfeasibleAction {
                action: obs.action.clone(),
                state: state.to_string(),
            });
        }
        let mut next = state.clone();
        for (&j, outcome) in &obs.outcomes {
            next.set(j, outcome.status());
        }
        self.mdp
            .state_index(&next)
            .ok_or_else(|| PlannerError::ImpossibleOutcome {
                outcome: next.to_string(),
            })
    }

    /// Moves the session along an observed transition. Any action from the
    /// current state's action set is accepted, not only the recommended one.
    pub fn apply_observation(&mut self, obs: Observation) -> Result<&SystemState, PlannerError> {
        let next = self.successor_of(self.current, &obs)?;
        self.current = next;
        self.history.push(obs);
        Ok(self.current_state())
    }

    /// Read-only: where `obs` would lead and what would follow.
    pub fn what_if(&self, obs: &Observation) -> Result<WhatIf, PlannerError> {
        let next = self.successor_of(self.current, obs)?;
        Ok(WhatIf {
            successor: self.mdp.state(next).clone(),
            remaining_steps: self.solution.values[next],
            next: self.recommendation_at(next),
        })
    }

    /// Recommended actions from the current state if every closure succeeds.
    pub fn expected_sequence(&self) -> Vec<Action> {
        let mut at = self.current;
        let mut sequence = Vec::new();
        while let Recommendation::Act(action) = self.recommendation_at(at) {
            let obs = Observation::all_energized(action.clone());
            match self.successor_of(at, &obs) {
                Ok(next) => at = next,
                // all-energized has zero probability; the nominal path ends
                Err(_) => {
                    sequence.push(action);
                    break;
                }
            }
            sequence.push(action);
        }
        sequence
    }

    /// Switches the goal and re-solves over the existing state space.
    pub fn set_goal(&mut self, goal: Goal) -> Result<(), PlannerError> {
        let mask = goal_mask(&self.mdp, &self.network, &goal)?;
        let solution = solve(&self.mdp, &mask)?;
        self.goal = goal;
        self.goal_mask = mask;
        self.solution = solution;
        Ok(())
    }

    /// Minimizes the expected time until bus `bus_id` is energized.
    pub fn retarget(&mut self, bus_id: &str) -> Result<(), PlannerError> {
        self.set_goal(Goal::TargetBus(bus_id.to_string()))
    }
}
