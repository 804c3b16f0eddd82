//! Checks against the two bundled 6-bus reference networks.

use std::path::PathBuf;
use std::sync::Arc;

use resto_core::{
    build_mdp, goal_mask, load_network, solve, transition_distribution, Action, BuildOptions,
    FailureProfile, Goal, Network, Observation, Outcome, Recommendation, Scenario, Session,
    SessionOptions, SystemState,
};
use resto_testkit::{RawNetwork, RefGoal, Reference};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn toy() -> Network {
    load_network(&std::fs::read_to_string(fixture("toy6.network.json")).unwrap()).unwrap()
}

fn raw(net: &Network) -> RawNetwork {
    RawNetwork {
        source: net.buses().iter().map(|b| b.kind.is_source()).collect(),
        edges: (0..net.branch_count())
            .map(|j| {
                let [a, b] = net.branch_ends(j).unwrap();
                (a, b)
            })
            .collect(),
    }
}

fn act(list: &[usize]) -> Action {
    Action::new(list.iter().copied()).unwrap()
}

fn obs(list: &[(usize, Outcome)]) -> Observation {
    Observation::new(
        act(&list.iter().map(|x| x.0).collect::<Vec<_>>()),
        list.iter().copied().collect(),
    )
}

const E: Outcome = Outcome::Energized;
const D: Outcome = Outcome::Damaged;

#[test]
fn toy_initial_transition() {
    let p_f = FailureProfile::uniform(6, 0.2).unwrap();
    let dist = transition_distribution(&SystemState::all_unknown(6), &act(&[0, 5]), &p_f).unwrap();
    let got: Vec<(String, f64)> = dist.iter().map(|(s, p)| (s.to_string(), *p)).collect();
    let want = [
        ("EUUUUE", 0.64),
        ("EUUUUD", 0.16),
        ("DUUUUE", 0.16),
        ("DUUUUD", 0.04),
    ];
    for ((s, p), (ws, wp)) in got.iter().zip(want) {
        assert_eq!(s, ws);
        assert!((p - wp).abs() <= 1e-12);
    }
}

#[test]
fn toy_state_spaces_and_value() {
    let net = toy();
    let p_f = FailureProfile::uniform(6, 0.2).unwrap();
    let mut values = Vec::new();
    let mut sizes = Vec::new();
    for simplify in [true, false] {
        let options = BuildOptions {
            simplify,
            ..Default::default()
        };
        let mdp = build_mdp(&net, &p_f, &options).unwrap();
        let goal = goal_mask(&mdp, &net, &Goal::FullRestoration).unwrap();
        let sol = solve(&mdp, &goal).unwrap();
        sizes.push(mdp.len());
        values.push(sol.values[0]);
        assert_eq!(sol.action(&mdp, 0), Some(&act(&[0, 5])));
    }
    assert_eq!(sizes, [76, 188]);
    assert!((values[0] - values[1]).abs() < 1e-12);

    let rawnet = raw(&net);
    let p = [0.2; 6];
    let mut reference = Reference::new(&rawnet, &p, RefGoal::Full);
    assert!((reference.initial_value() - values[0]).abs() < 1e-12);
    assert!((values[0] - 3.176).abs() < 1e-12);
    assert_eq!(reference.reachable_count(true), 76);
    assert_eq!(reference.reachable_count(false), 188);
}

#[test]
fn toy_with_island_merging_forbidden() {
    let net = toy();
    let p_f = FailureProfile::uniform(6, 0.2).unwrap();
    let mut sizes = Vec::new();
    for simplify in [true, false] {
        let options = SessionOptions {
            simplify,
            forbid_source_island_merge: true,
            initial: None,
        };
        let session = Session::start(
            Arc::new(net.clone()),
            p_f.clone(),
            options,
            Goal::FullRestoration,
        )
        .unwrap();
        sizes.push(session.mdp().len());
        assert!((session.initial_value() - 2.65888).abs() < 1e-12);
    }
    assert_eq!(sizes, [57, 168]);
    let rawnet = raw(&net);
    let p = [0.2; 6];
    let mut reference = Reference::new(&rawnet, &p, RefGoal::Full).forbid_source_island_merge(true);
    assert!((reference.initial_value() - 2.65888).abs() < 1e-12);
}

#[test]
fn toy_dead_end_and_target() {
    let scenario = Scenario::from_file(&fixture("toy6.scenario.json")).unwrap();
    let mut session = scenario.start_session().unwrap();
    assert_eq!(session.recommend(), Recommendation::Act(act(&[0, 5])));

    let both_down = session.what_if(&obs(&[(0, D), (5, D)])).unwrap();
    assert_eq!(both_down.successor.to_string(), "DUUUUD");
    assert_eq!(both_down.remaining_steps, 0.0);
    assert_eq!(both_down.next, Recommendation::Terminal);

    session.retarget("b6").unwrap();
    let rawnet = raw(session.network());
    let p = [0.2; 6];
    let bus = session.network().bus_position("b6").unwrap();
    let mut reference = Reference::new(&rawnet, &p, RefGoal::Bus(bus));
    assert!((session.current_value() - reference.initial_value()).abs() < 1e-12);

    session.apply_observation(obs(&[(0, E), (5, E)])).unwrap();
    assert_eq!(session.current_state().to_string(), "EUUUUE");
    assert_eq!(session.recommend(), Recommendation::Terminal);
}

fn scenario(k: usize) -> Session {
    Scenario::from_file(&fixture(&format!("scenario-{k}.json")))
        .unwrap()
        .start_session()
        .unwrap()
}

#[test]
fn ring_scenarios_nominal_sequences() {
    let expected: [&[&[usize]]; 4] = [
        &[&[2], &[1, 4], &[3]],
        &[&[1], &[2, 3], &[4]],
        &[&[1], &[2, 3], &[5]],
        &[&[2], &[1, 4], &[5]],
    ];
    for (k, want) in (1..=4).zip(expected) {
        let session = scenario(k);
        let want: Vec<Action> = want.iter().map(|a| act(a)).collect();
        assert_eq!(session.expected_sequence(), want, "scenario {k}");
        assert_eq!(session.recommend(), Recommendation::Act(want[0].clone()));
    }
}

#[test]
fn ring_scenario_one_replan_and_traces() {
    let mut session = scenario(1);
    let p_f = session.profile().clone();
    let prob = |s: &SystemState, a: &[usize], to: &str| -> f64 {
        transition_distribution(s, &act(a), &p_f)
            .unwrap()
            .into_iter()
            .find(|(t, _)| t.to_string() == to)
            .map(|(_, p)| p)
            .unwrap()
    };
    let s0 = session.current_state().clone();
    assert!((prob(&s0, &[2], "EUEUUU") - 0.6).abs() < 1e-12);
    let s1: SystemState = "EUEUUU".parse().unwrap();
    assert!((prob(&s1, &[1, 4], "EEEUEU") - 0.18).abs() < 1e-12);
    assert!((prob(&s1, &[1, 4], "EDEUEU") - 0.42).abs() < 1e-12);

    session.apply_observation(obs(&[(2, E)])).unwrap();
    assert_eq!(session.recommend(), Recommendation::Act(act(&[1, 4])));
    session.apply_observation(obs(&[(1, D), (4, E)])).unwrap();
    assert_eq!(session.current_state().to_string(), "EDEUEU");
    assert_eq!(session.expected_sequence(), vec![act(&[5]), act(&[3])]);
    session.apply_observation(obs(&[(5, E)])).unwrap();
    session.apply_observation(obs(&[(3, E)])).unwrap();
    assert_eq!(session.current_state().to_string(), "EDEEEE");
    assert_eq!(session.recommend(), Recommendation::Terminal);

    let replayed = Session::replay(
        session.network().clone(),
        session.profile().clone(),
        session.options().clone(),
        Goal::FullRestoration,
        session.history(),
    )
    .unwrap();
    assert_eq!(replayed.current_state(), session.current_state());
}

#[test]
fn ring_branch_zero_is_the_only_first_move_from_all_unknown() {
    let scenario = Scenario::from_file(&fixture("scenario-1.json")).unwrap();
    let mut options = scenario.options.clone();
    options.initial = None;
    let session = Session::start(
        scenario.network.clone(),
        scenario.profile.clone(),
        options,
        Goal::FullRestoration,
    )
    .unwrap();
    let seq = session.expected_sequence();
    assert_eq!(seq, vec![act(&[0]), act(&[2]), act(&[1, 4]), act(&[3])]);
}
