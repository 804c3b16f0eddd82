use std::collections::{HashMap, VecDeque};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::fragility::FailureProfile;
use crate::network::{ActionRules, Network, SystemState};

use super::{enumerate_actions, transition_distribution, Action, MdpError};

pub const DEFAULT_STATE_LIMIT: usize = 5_000_000;

#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Expand with `A'(s)` instead of the full `A(s)`.
    pub simplify: bool,
    pub rules: ActionRules,
    /// Starting state; all-unknown when `None`.
    pub initial: Option<SystemState>,
    pub state_limit: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            simplify: true,
            rules: ActionRules::default(),
            initial: None,
            state_limit: DEFAULT_STATE_LIMIT,
        }
    }
}

/// Reachable restoration states with their actions and successor
/// distributions. State 0 is the initial state.
#[derive(Debug, Clone)]
pub struct RestorationMdp {
    branch_count: usize,
    simplified: bool,
    states: Vec<SystemState>,
    index: HashMap<u128, usize>,
    actions: Vec<Vec<Action>>,
    transitions: Vec<Vec<Vec<(usize, f64)>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdpStats {
    pub states: usize,
    /// Number of (state, action) pairs.
    pub actions: usize,
    pub transitions: usize,
    pub terminals: usize,
    /// Longest action path from the initial state.
    pub max_depth: usize,
}

/// Breadth-first expansion from the initial state. Only reachable states
/// are ever created; states are deduplicated on their packed encoding.
pub fn build_mdp(
    net: &Network,
    p_f: &FailureProfile,
    options: &BuildOptions,
) -> Result<RestorationMdp, MdpError> {
    let m = net.branch_count();
    if p_f.len() != m {
        return Err(MdpError::ProfileLength {
            expected: m,
            got: p_f.len(),
        });
    }
    let initial = options
        .initial
        .clone()
        .unwrap_or_else(|| SystemState::all_unknown(m));
    if initial.len() != m {
        return Err(crate::network::NetworkError::StateLength {
            expected: m,
            got: initial.len(),
        }
        .into());
    }

    let mut mdp = RestorationMdp {
        branch_count: m,
        simplified: options.simplify,
        states: Vec::new(),
        index: HashMap::new(),
        actions: Vec::new(),
        transitions: Vec::new(),
    };
    mdp.insert(initial);
    let mut frontier = VecDeque::from([0usize]);

    while let Some(at) = frontier.pop_front() {
        let state = mdp.states[at].clone();
        let actions = enumerate_actions(net, &options.rules, &state, options.simplify)?;
        let mut per_action = Vec::with_capacity(actions.len());
        for action in &actions {
            let dist = transition_distribution(&state, action, p_f)?;
            let mut edges = Vec::with_capacity(dist.len());
            for (next, p) in dist {
                let target = match mdp.index.get(&next.packed()) {
                    Some(&i) => i,
                    None => {
                        if mdp.states.len() >= options.state_limit {
                            return Err(MdpError::StateLimitExceeded(options.state_limit));
                        }
                        let i = mdp.insert(next);
                        frontier.push_back(i);
                        i
                    }
                };
                edges.push((target, p));
            }
            per_action.push(edges);
        }
        mdp.actions[at] = actions;
        mdp.transitions[at] = per_action;
    }
    Ok(mdp)
}

impl RestorationMdp {
    fn insert(&mut self, state: SystemState) -> usize {
        let i = self.states.len();
        self.index.insert(state.packed(), i);
        self.states.push(state);
        self.actions.push(Vec::new());
        self.transitions.push(Vec::new());
        i
    }

    pub fn branch_count(&self) -> usize {
        self.branch_count
    }

    pub fn is_simplified(&self) -> bool {
        self.simplified
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &SystemState {
        &self.states[i]
    }

    pub fn state_index(&self, s: &SystemState) -> Option<usize> {
        if s.len() != self.branch_count {
            return None;
        }
        self.index.get(&s.packed()).copied()
    }

    pub fn actions(&self, i: usize) -> &[Action] {
        &self.actions[i]
    }

    /// Successor `(state index, probability)` pairs of action number
    /// `action` in state `i`.
    pub fn successors(&self, i: usize, action: usize) -> &[(usize, f64)] {
        &self.transitions[i][action]
    }

    pub fn action_position(&self, i: usize, action: &Action) -> Option<usize> {
        self.actions[i].binary_search(action).ok()
    }

    /// A state is terminal when no action can be applied in it.
    pub fn is_terminal(&self, i: usize) -> bool {
        self.actions[i].is_empty()
    }

    pub fn terminal_flags(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.is_terminal(i)).collect()
    }

    /// State indices ordered so every successor precedes its predecessors.
    pub fn topological_from_leaves(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| (self.states[i].unknown_count(), i));
        order
    }

    pub fn stats(&self) -> MdpStats {
        let mut depth = vec![0usize; self.len()];
        for &i in self.topological_from_leaves().iter().rev() {
            for edges in &self.transitions[i] {
                for &(t, _) in edges {
                    depth[t] = depth[t].max(depth[i] + 1);
                }
            }
        }
        MdpStats {
            states: self.len(),
            actions: self.actions.iter().map(Vec::len).sum(),
            transitions: self.transitions.iter().flatten().map(Vec::len).sum(),
            terminals: (0..self.len()).filter(|&i| self.is_terminal(i)).count(),
            max_depth: depth.into_iter().max().unwrap_or(0),
        }
    }

    /// Writes one line per state:
    ///
    /// `<index> <packed hex> <status> <T|N>` followed by
    /// ` | <action> <succ>:<prob> ...` for each action, probabilities in
    /// scientific notation with 17 significant digits.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (i, state) in self.states.iter().enumerate() {
            write!(
                out,
                "{i} {:#x} {state} {}",
                state.packed(),
                if self.is_terminal(i) { 'T' } else { 'N' }
            )?;
            for (action, edges) in self.actions[i].iter().zip(&self.transitions[i]) {
                write!(out, " | {action}")?;
                for &(t, p) in edges {
                    write!(out, " {t}:{p:.16e}")?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
