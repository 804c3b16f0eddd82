//! Static grid model: buses, branches, per-branch statuses and the
//! feasibility rules that decide which branches may be energized together.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::DisjointSet;

/// Largest supported branch count. States are packed two bits per branch
/// into a `u128`.
pub const MAX_BRANCHES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("malformed network document: {0}")]
    Parse(String),
    #[error("network has no branches")]
    NoBranches,
    #[error("network has {0} branches, at most {MAX_BRANCHES} are supported")]
    TooManyBranches(usize),
    #[error("duplicate bus id `{0}`")]
    DuplicateBus(String),
    #[error("duplicate branch index {0}")]
    DuplicateBranch(usize),
    #[error("branch indices must be contiguous from 0; index {0} is missing")]
    NonContiguous(usize),
    #[error("branch {branch} references unknown bus `{bus}`")]
    DanglingEndpoint { branch: usize, bus: String },
    #[error("branch {0} connects a bus to itself")]
    SelfLoop(usize),
    #[error("network has no source bus")]
    NoSource,
    #[error("unknown bus `{0}`")]
    UnknownBus(String),
    #[error("branch index {index} out of range for {count} branches")]
    BranchOutOfRange { index: usize, count: usize },
    #[error("state has {got} statuses but the network has {expected} branches")]
    StateLength { expected: usize, got: usize },
    #[error("invalid status string `{0}`: expected only U, E and D")]
    BadStatus(String),
    #[error("branch {0} is not in the feasible branch set of this state")]
    NotFeasible(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Load,
    TransmissionSource,
    DerSource,
}

impl BusKind {
    pub fn is_source(self) -> bool {
        !matches!(self, BusKind::Load)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    pub kind: BusKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub index: usize,
    pub endpoints: [String; 2],
    #[serde(default)]
    pub normally_open: bool,
}

/// Wire form of a network, before validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
}

/// A validated grid graph.
#[derive(Debug, Clone)]
pub struct Network {
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    bus_index: HashMap<String, usize>,
    ends: Vec<[usize; 2]>,
    incident: Vec<Vec<usize>>,
    warnings: Vec<String>,
}

/// Parses and validates a network document.
pub fn load_network(document: &str) -> Result<Network, NetworkError> {
    let doc: NetworkDocument =
        serde_json::from_str(document).map_err(|e| NetworkError::Parse(e.to_string()))?;
    Network::from_document(doc)
}

impl Network {
    pub fn from_document(doc: NetworkDocument) -> Result<Self, NetworkError> {
        let NetworkDocument {
            buses,
            mut branches,
        } = doc;
        if branches.is_empty() {
            return Err(NetworkError::NoBranches);
        }
        if branches.len() > MAX_BRANCHES {
            return Err(NetworkError::TooManyBranches(branches.len()));
        }

        let mut bus_index = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            if bus_index.insert(bus.id.clone(), i).is_some() {
                return Err(NetworkError::DuplicateBus(bus.id.clone()));
            }
        }
        if !buses.iter().any(|b| b.kind.is_source()) {
            return Err(NetworkError::NoSource);
        }

        branches.sort_by_key(|b| b.index);
        for pair in branches.windows(2) {
            if pair[0].index == pair[1].index {
                return Err(NetworkError::DuplicateBranch(pair[0].index));
            }
        }
        for (expected, branch) in branches.iter().enumerate() {
            if branch.index != expected {
                return Err(NetworkError::NonContiguous(expected));
            }
        }

        let mut ends = Vec::with_capacity(branches.len());
        let mut incident = vec![Vec::new(); buses.len()];
        for branch in &branches {
            let mut pair = [0usize; 2];
            for (slot, id) in pair.iter_mut().zip(branch.endpoints.iter()) {
                *slot = *bus_index
                    .get(id)
                    .ok_or_else(|| NetworkError::DanglingEndpoint {
                        branch: branch.index,
                        bus: id.clone(),
                    })?;
            }
            if pair[0] == pair[1] {
                return Err(NetworkError::SelfLoop(branch.index));
            }
            incident[pair[0]].push(branch.index);
            incident[pair[1]].push(branch.index);
            ends.push(pair);
        }

        let mut net = Self {
            buses,
            branches,
            bus_index,
            ends,
            incident,
            warnings: Vec::new(),
        };
        if !net.is_connected() {
            net.warnings
                .push("network is not connected with every branch closed".to_string());
        }
        Ok(net)
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            buses: self.buses.clone(),
            branches: self.branches.clone(),
        }
    }

    fn is_connected(&self) -> bool {
        let mut ds = DisjointSet::new(self.buses.len());
        for &[a, b] in &self.ends {
            ds.union(a, b);
        }
        (1..self.buses.len()).all(|i| ds.same(0, i))
    }

    /// Number of branches, `m`.
    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Non-fatal validation findings.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn bus_position(&self, id: &str) -> Result<usize, NetworkError> {
        self.bus_index
            .get(id)
            .copied()
            .ok_or_else(|| NetworkError::UnknownBus(id.to_string()))
    }

    /// Bus positions of a branch's endpoints.
    pub fn branch_ends(&self, j: usize) -> Result<[usize; 2], NetworkError> {
        self.check_index(j)?;
        Ok(self.ends[j])
    }

    /// Branches incident to the bus at `position`.
    pub fn incident_branches(&self, position: usize) -> &[usize] {
        &self.incident[position]
    }

    fn check_index(&self, j: usize) -> Result<(), NetworkError> {
        if j < self.branches.len() {
            Ok(())
        } else {
            Err(NetworkError::BranchOutOfRange {
                index: j,
                count: self.branches.len(),
            })
        }
    }

    fn check_state(&self, s: &SystemState) -> Result<(), NetworkError> {
        if s.len() == self.branch_count() {
            Ok(())
        } else {
            Err(NetworkError::StateLength {
                expected: self.branch_count(),
                got: s.len(),
            })
        }
    }

    fn share_bus(&self, j: usize, k: usize) -> bool {
        let [a, b] = self.ends[j];
        let [c, d] = self.ends[k];
        a == c || a == d || b == c || b == d
    }

    /// `C(j)`: every other branch sharing an endpoint bus with `j`.
    pub fn connected_branches(&self, j: usize) -> Result<BTreeSet<usize>, NetworkError> {
        self.check_index(j)?;
        Ok(self.ends[j]
            .iter()
            .flat_map(|&bus| self.incident[bus].iter().copied())
            .filter(|&k| k != j)
            .collect())
    }

    /// True iff an endpoint of branch `j` is a source bus.
    pub fn source_adjacent(&self, j: usize) -> Result<bool, NetworkError> {
        self.check_index(j)?;
        Ok(self.ends[j]
            .iter()
            .any(|&bus| self.buses[bus].kind.is_source()))
    }

    /// `A^b(s)`: unknown branches touching a source bus or an energized branch.
    pub fn feasible_branch_actions(
        &self,
        s: &SystemState,
    ) -> Result<BTreeSet<usize>, NetworkError> {
        self.check_state(s)?;
        let live = self.live_buses(s);
        Ok((0..self.branch_count())
            .filter(|&j| s.get(j) == BranchStatus::Unknown)
            .filter(|&j| self.ends[j].iter().any(|&bus| live[bus]))
            .collect())
    }

    /// Buses that are sources or touch an energized branch.
    fn live_buses(&self, s: &SystemState) -> Vec<bool> {
        let mut live: Vec<bool> = self.buses.iter().map(|b| b.kind.is_source()).collect();
        for (j, &[a, b]) in self.ends.iter().enumerate() {
            if s.get(j) == BranchStatus::Energized {
                live[a] = true;
                live[b] = true;
            }
        }
        live
    }

    /// Disjoint sets seeded with the energized branches of `s` (and, when
    /// island merging is forbidden, with every source bus tied together).
    pub(crate) fn energized_forest(&self, s: &SystemState, rules: &ActionRules) -> DisjointSet {
        let mut ds = DisjointSet::new(self.buses.len());
        if rules.forbid_source_island_merge {
            let mut sources = self
                .buses
                .iter()
                .enumerate()
                .filter(|(_, b)| b.kind.is_source())
                .map(|(i, _)| i);
            if let Some(first) = sources.next() {
                for other in sources {
                    ds.union(first, other);
                }
            }
        }
        for (j, &[a, b]) in self.ends.iter().enumerate() {
            if s.get(j) == BranchStatus::Energized {
                ds.union(a, b);
            }
        }
        ds
    }

    /// Whether branch `j` can join a partial action: electrically distant
    /// from every member and not closing a loop in `forest`, which already
    /// holds the energized branches and the members.
    pub(crate) fn extends(&self, members: &[usize], forest: &mut DisjointSet, j: usize) -> bool {
        if members.iter().any(|&k| self.share_bus(j, k)) {
            return false;
        }
        let [a, b] = self.ends[j];
        !forest.same(a, b)
    }

    /// Checks the simultaneous-energization constraints for action `a` in
    /// state `s`: pairwise electrical distance, no loop in the union of the
    /// energized forest and `a`, the island rule, and the validity hook.
    pub fn action_valid(
        &self,
        rules: &ActionRules,
        s: &SystemState,
        a: &[usize],
    ) -> Result<bool, NetworkError> {
        let feasible = self.feasible_branch_actions(s)?;
        if let Some(&j) = a.iter().find(|j| !feasible.contains(j)) {
            return Err(NetworkError::NotFeasible(j));
        }
        for (i, &j) in a.iter().enumerate() {
            if a[i + 1..].iter().any(|&k| k == j || self.share_bus(j, k)) {
                return Ok(false);
            }
        }
        let mut forest = self.energized_forest(s, rules);
        for &j in a {
            let [x, y] = self.ends[j];
            if !forest.union(x, y) {
                return Ok(false);
            }
        }
        Ok(rules.accepts(self, &s.with_energized(a)))
    }

    /// True iff the energized branches of `s` form a forest in which every
    /// tree touches a source bus.
    pub fn energized_forest_ok(&self, s: &SystemState) -> bool {
        if s.len() != self.branch_count() {
            return false;
        }
        let mut ds = DisjointSet::new(self.buses.len());
        for (j, &[a, b]) in self.ends.iter().enumerate() {
            if s.get(j) == BranchStatus::Energized && !ds.union(a, b) {
                return false;
            }
        }
        let mut fed = vec![false; self.buses.len()];
        for (i, bus) in self.buses.iter().enumerate() {
            if bus.kind.is_source() {
                let root = ds.find(i);
                fed[root] = true;
            }
        }
        (0..self.branch_count())
            .filter(|&j| s.get(j) == BranchStatus::Energized)
            .all(|j| {
                let root = ds.find(self.ends[j][0]);
                fed[root]
            })
    }

    /// True iff some branch incident to bus `position` is energized.
    pub fn bus_energized(&self, position: usize, s: &SystemState) -> bool {
        self.incident[position]
            .iter()
            .any(|&j| s.get(j) == BranchStatus::Energized)
    }
}

/// Extra state check applied to every candidate action. Receives the
/// state with the action's branches marked energized. Must be monotone:
/// de-energizing branches of an accepted state keeps it accepted.
pub type StateValidity = dyn Fn(&Network, &SystemState) -> bool + Send + Sync;

/// Configurable parts of the feasibility rules.
#[derive(Clone, Default)]
pub struct ActionRules {
    /// Reject actions that join two energized trees each fed by a source.
    pub forbid_source_island_merge: bool,
    validity: Option<Arc<StateValidity>>,
}

impl ActionRules {
    pub fn with_validity(mut self, hook: Arc<StateValidity>) -> Self {
        self.validity = Some(hook);
        self
    }

    pub(crate) fn accepts(&self, net: &Network, s: &SystemState) -> bool {
        self.validity.as_ref().is_none_or(|hook| hook(net, s))
    }
}

impl fmt::Debug for ActionRules {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActionRules")
            .field(
                "forbid_source_island_merge",
                &self.forbid_source_island_merge,
            )
            .field("validity", &self.validity.as_ref().map(|_| "<hook>"))
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BranchStatus {
    Unknown,
    Energized,
    Damaged,
}

impl BranchStatus {
    pub fn code(self) -> u8 {
        match self {
            BranchStatus::Unknown => 0,
            BranchStatus::Energized => 1,
            BranchStatus::Damaged => 2,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            BranchStatus::Unknown => 'U',
            BranchStatus::Energized => 'E',
            BranchStatus::Damaged => 'D',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'U' => Some(BranchStatus::Unknown),
            'E' => Some(BranchStatus::Energized),
            'D' => Some(BranchStatus::Damaged),
            _ => None,
        }
    }
}

/// Per-branch status vector; one MDP state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState(Vec<BranchStatus>);

impl SystemState {
    pub fn all_unknown(m: usize) -> Self {
        Self(vec![BranchStatus::Unknown; m])
    }

    pub fn from_statuses(statuses: Vec<BranchStatus>) -> Self {
        Self(statuses)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> BranchStatus {
        self.0[j]
    }

    pub fn set(&mut self, j: usize, status: BranchStatus) {
        self.0[j] = status;
    }

    pub fn statuses(&self) -> &[BranchStatus] {
        &self.0
    }

    pub fn unknown_count(&self) -> usize {
        self.0
            .iter()
            .filter(|&&s| s == BranchStatus::Unknown)
            .count()
    }

    /// Two bits per branch, branch 0 in the lowest bits (U=0, E=1, D=2).
    pub fn packed(&self) -> u128 {
        self.0
            .iter()
            .enumerate()
            .fold(0u128, |acc, (j, s)| acc | (u128::from(s.code()) << (2 * j)))
    }

    pub(crate) fn with_energized(&self, branches: &[usize]) -> Self {
        let mut next = self.clone();
        for &j in branches {
            next.0[j] = BranchStatus::Energized;
        }
        next
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for SystemState {
    type Err = NetworkError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        text.chars()
            .map(BranchStatus::from_symbol)
            .collect::<Option<Vec<_>>>()
            .map(SystemState)
            .ok_or_else(|| NetworkError::BadStatus(text.to_string()))
    }
}
