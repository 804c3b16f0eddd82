//! Post-earthquake restoration planning for medium-voltage distribution
//! networks.
//!
//! A network's branches are each unknown, energized or damaged. Closing
//! the breakers of a set of branches resolves them according to their
//! failure probabilities, which come from fragility curves evaluated at the
//! recorded peak ground acceleration. The reachable status vectors form an
//! acyclic Markov decision process; [`mdp::solve`] finds the policy with the
//! fewest expected restoration steps, and [`planner::Session`] walks an
//! operator through it as field results come in.

mod forest;

pub mod fragility;
pub mod mdp;
pub mod network;
pub mod planner;
pub mod scenario;

pub use fragility::{
    assign_pga, evaluate_fragility, failure_profile, standard_normal_cdf, FailureProfile,
    FragilityCurve, FragilityDocument, FragilityError, PgaMapping, PgaRecord,
};
pub use mdp::{
    build_mdp, cost, enumerate_actions, goal_mask, solve, transition_distribution, Action,
    BuildOptions, Goal, MdpError, MdpStats, RestorationMdp, Solution,
};
pub use network::{
    load_network, ActionRules, Branch, BranchStatus, Bus, BusKind, Network, NetworkDocument,
    NetworkError, SystemState,
};
pub use planner::{
    Observation, Outcome, PlannerError, Recommendation, Session, SessionOptions, SessionSnapshot,
    WhatIf,
};
pub use scenario::{NetworkSource, Scenario, ScenarioDocument, ScenarioError};
