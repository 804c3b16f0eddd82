use serde::{Deserialize, Serialize};

use crate::network::Network;

use super::{Action, MdpError, RestorationMdp};

/// Values within this distance count as tied; ties go to the
/// lexicographically smallest action.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// What the episode is trying to reach.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    /// Run until no restoration action is left.
    #[default]
    FullRestoration,
    /// Stop as soon as the given bus is energized, or when stuck.
    TargetBus(String),
}

/// Goal membership per state. For a target bus the goal is the set of
/// states where some branch at that bus is energized, closed under the
/// terminal states so that dead ends also end the episode.
pub fn goal_mask(mdp: &RestorationMdp, net: &Network, goal: &Goal) -> Result<Vec<bool>, MdpError> {
    let terminal = mdp.terminal_flags();
    match goal {
        Goal::FullRestoration => Ok(terminal),
        Goal::TargetBus(id) => {
            let bus = net.bus_position(id)?;
            Ok(mdp
                .states()
                .iter()
                .zip(terminal)
                .map(|(s, t)| t || net.bus_energized(bus, s))
                .collect())
        }
    }
}

/// Step cost: 0 in a goal state, 1 elsewhere.
pub fn cost(state: usize, goal: &[bool]) -> f64 {
    if goal[state] {
        0.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Expected remaining steps per state.
    pub values: Vec<f64>,
    /// Index into `mdp.actions(state)` of the optimal action; `None` on
    /// goal states.
    pub policy: Vec<Option<usize>>,
}

impl Solution {
    pub fn action<'m>(&self, mdp: &'m RestorationMdp, state: usize) -> Option<&'m Action> {
        self.policy[state].map(|k| &mdp.actions(state)[k])
    }
}

/// Exact backward induction over the acyclic state graph.
pub fn solve(mdp: &RestorationMdp, goal: &[bool]) -> Result<Solution, MdpError> {
    if goal.len() != mdp.len() {
        return Err(MdpError::GoalLength {
            expected: mdp.len(),
            got: goal.len(),
        });
    }
    let mut values = vec![0.0; mdp.len()];
    let mut policy = vec![None; mdp.len()];
    for i in mdp.topological_from_leaves() {
        if goal[i] {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for k in 0..mdp.actions(i).len() {
            let expected: f64 = mdp
                .successors(i, k)
                .iter()
                .map(|&(t, p)| p * values[t])
                .sum();
            let q = cost(i, goal) + expected;
            if best.is_none_or(|(_, v)| q < v - TIE_TOLERANCE) {
                best = Some((k, q));
            }
        }
        let (k, v) = best.ok_or_else(|| MdpError::DeadEnd(mdp.state(i).to_string()))?;
        values[i] = v;
        policy[i] = Some(k);
    }
    Ok(Solution { values, policy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragility::FailureProfile;
    use crate::mdp::{build_mdp, BuildOptions};
    use crate::network::load_network;

    fn series() -> Network {
        load_network(
            r#"{"buses":[{"id":"s","kind":"transmission_source"},{"id":"a","kind":"load"},
                         {"id":"b","kind":"load"}],
                "branches":[{"index":0,"endpoints":["s","a"]},{"index":1,"endpoints":["a","b"]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn series_feeder_value() {
        // v = 1 + 0.8 * (1 + 0) + 0.2 * 0
        let net = series();
        let mdp = build_mdp(
            &net,
            &FailureProfile::uniform(2, 0.2).unwrap(),
            &BuildOptions::default(),
        )
        .unwrap();
        let goal = goal_mask(&mdp, &net, &Goal::FullRestoration).unwrap();
        let sol = solve(&mdp, &goal).unwrap();
        assert!((sol.values[0] - 1.8).abs() < 1e-15);
        assert_eq!(sol.action(&mdp, 0).unwrap().branches(), &[0]);
    }

    #[test]
    fn terminal_initial_state() {
        let net = series();
        let options = BuildOptions {
            initial: Some("DU".parse().unwrap()),
            ..Default::default()
        };
        let mdp = build_mdp(&net, &FailureProfile::uniform(2, 0.2).unwrap(), &options).unwrap();
        assert_eq!(mdp.len(), 1);
        let goal = goal_mask(&mdp, &net, &Goal::FullRestoration).unwrap();
        let sol = solve(&mdp, &goal).unwrap();
        assert_eq!(sol.values, [0.0]);
        assert_eq!(sol.policy, [None]);
    }

    #[test]
    fn costs() {
        let goal = [false, true];
        assert_eq!(cost(0, &goal), 1.0);
        assert_eq!(cost(1, &goal), 0.0);
    }

    #[test]
    fn target_bus_goal() {
        let net = series();
        let mdp = build_mdp(
            &net,
            &FailureProfile::uniform(2, 0.2).unwrap(),
            &BuildOptions::default(),
        )
        .unwrap();
        let goal = goal_mask(&mdp, &net, &Goal::TargetBus("a".into())).unwrap();
        let sol = solve(&mdp, &goal).unwrap();
        assert_eq!(sol.values[0], 1.0);
        assert!(matches!(
            goal_mask(&mdp, &net, &Goal::TargetBus("zz".into())),
            Err(MdpError::Network(_))
        ));
    }

    #[test]
    fn dead_end_outside_goal_is_an_error() {
        let net = series();
        let mdp = build_mdp(
            &net,
            &FailureProfile::uniform(2, 0.2).unwrap(),
            &BuildOptions::default(),
        )
        .unwrap();
        let nothing = vec![false; mdp.len()];
        assert!(matches!(solve(&mdp, &nothing), Err(MdpError::DeadEnd(_))));
    }

    #[test]
    fn ties_pick_smallest_action() {
        // two symmetric feeders from one source bus: {0} and {1} tie
        let net = load_network(
            r#"{"buses":[{"id":"s","kind":"transmission_source"},{"id":"a","kind":"load"},
                         {"id":"b","kind":"load"}],
                "branches":[{"index":0,"endpoints":["s","a"]},{"index":1,"endpoints":["s","b"]}]}"#,
        )
        .unwrap();
        let mdp = build_mdp(
            &net,
            &FailureProfile::uniform(2, 0.3).unwrap(),
            &BuildOptions::default(),
        )
        .unwrap();
        let goal = goal_mask(&mdp, &net, &Goal::FullRestoration).unwrap();
        let sol = solve(&mdp, &goal).unwrap();
        assert_eq!(sol.action(&mdp, 0).unwrap().branches(), &[0]);
        assert_eq!(sol.values[0], 2.0);
    }
}
