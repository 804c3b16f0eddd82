//! Invariants over randomly generated grids, checked against the
//! exhaustive evaluator in `resto-testkit` where a value is involved.

use std::sync::Arc;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use resto_core::{
    build_mdp, enumerate_actions, evaluate_fragility, goal_mask, load_network, solve,
    transition_distribution, ActionRules, BranchStatus, BuildOptions, FailureProfile,
    FragilityCurve, Goal, Network, Observation, Outcome, Session, SessionOptions, SystemState,
};
use resto_testkit::{random_network, random_profile, RawNetwork, RefGoal, Reference};

struct Instance {
    raw: RawNetwork,
    net: Network,
    p_f: Vec<f64>,
}

fn instance(seed: u64, max_branches: usize, lo: f64, hi: f64) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed);
    let m = 1 + (seed as usize % max_branches);
    let raw = random_network(&mut rng, m);
    let net = load_network(&raw.to_json()).unwrap();
    let p_f = random_profile(&mut rng, m, lo, hi);
    Instance { raw, net, p_f }
}

fn options(simplify: bool) -> BuildOptions {
    BuildOptions {
        simplify,
        ..Default::default()
    }
}

fn non_unknown(s: &SystemState) -> usize {
    s.len() - s.unknown_count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transitions_are_normalized_and_move_down(seed in any::<u64>()) {
        let inst = instance(seed, 6, 0.0, 1.0);
        let p_f = FailureProfile::new(inst.p_f.clone()).unwrap();
        let mdp = build_mdp(&inst.net, &p_f, &options(true)).unwrap();
        for i in 0..mdp.len() {
            prop_assert!(inst.net.energized_forest_ok(mdp.state(i)));
            for (k, a) in mdp.actions(i).iter().enumerate() {
                let total: f64 = mdp.successors(i, k).iter().map(|x| x.1).sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
                for &(t, _) in mdp.successors(i, k) {
                    let (from, to) = (mdp.state(i), mdp.state(t));
                    prop_assert_eq!(to.unknown_count() + a.len(), from.unknown_count());
                }
            }
        }
    }

    #[test]
    fn values_bounded_and_consistent(seed in any::<u64>()) {
        let inst = instance(seed, 6, 0.05, 0.95);
        let p_f = FailureProfile::new(inst.p_f.clone()).unwrap();
        let mdp = build_mdp(&inst.net, &p_f, &options(true)).unwrap();
        let goal = goal_mask(&mdp, &inst.net, &Goal::FullRestoration).unwrap();
        let sol = solve(&mdp, &goal).unwrap();
        for (i, &in_goal) in goal.iter().enumerate() {
            let v = sol.values[i];
            let room = (mdp.state(i).len() - non_unknown(mdp.state(i))) as f64;
            prop_assert!(v >= 0.0 && v <= room + 1e-12);
            if in_goal {
                prop_assert_eq!(v, 0.0);
                continue;
            }
            let best = (0..mdp.actions(i).len())
                .map(|k| 1.0 + mdp.successors(i, k).iter().map(|&(t, p)| p * sol.values[t]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            prop_assert!((best - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn maximal_actions_preserve_value(seed in any::<u64>()) {
        let inst = instance(seed, 6, 0.05, 0.95);
        let p_f = FailureProfile::new(inst.p_f.clone()).unwrap();
        let mut values = Vec::new();
        for simplify in [true, false] {
            let mdp = build_mdp(&inst.net, &p_f, &options(simplify)).unwrap();
            let goal = goal_mask(&mdp, &inst.net, &Goal::FullRestoration).unwrap();
            values.push(solve(&mdp, &goal).unwrap().values[0]);
        }
        prop_assert!((values[0] - values[1]).abs() <= 1e-9);
    }

    #[test]
    fn connected_sets_are_symmetric(seed in any::<u64>()) {
        let inst = instance(seed, 8, 0.1, 0.9);
        let m = inst.net.branch_count();
        for i in 0..m {
            let ci = inst.net.connected_branches(i).unwrap();
            prop_assert!(!ci.contains(&i));
            for j in 0..m {
                let cj = inst.net.connected_branches(j).unwrap();
                prop_assert_eq!(ci.contains(&j), cj.contains(&i));
            }
        }
    }

    #[test]
    fn feasible_set_and_validity(seed in any::<u64>(), bits in any::<u64>()) {
        let inst = instance(seed, 7, 0.1, 0.9);
        let m = inst.net.branch_count();
        let s = SystemState::from_statuses(
            (0..m).map(|j| match (bits >> (2 * j)) & 3 {
                1 => BranchStatus::Energized,
                2 => BranchStatus::Damaged,
                _ => BranchStatus::Unknown,
            }).collect(),
        );
        let feasible = inst.net.feasible_branch_actions(&s).unwrap();
        for &j in &feasible {
            prop_assert_eq!(s.get(j), BranchStatus::Unknown);
        }
        let rules = ActionRules::default();
        let list: Vec<usize> = feasible.iter().copied().collect();
        for mask in 1u32..(1 << list.len().min(10)) {
            let a: Vec<usize> = (0..list.len()).filter(|i| mask & (1 << i) != 0).map(|i| list[i]).collect();
            let close = a.iter().enumerate().any(|(x, &i)| {
                let ci = inst.net.connected_branches(i).unwrap();
                a[x + 1..].iter().any(|j| ci.contains(j))
            });
            if close {
                prop_assert!(!inst.net.action_valid(&rules, &s, &a).unwrap());
            }
        }
    }

    #[test]
    fn fragility_is_monotone_and_scale_free(
        median in 0.01f64..3.0,
        beta in 0.05f64..1.5,
        x in 0.001f64..5.0,
        y in 0.001f64..5.0,
        k in 0.1f64..10.0,
    ) {
        let curve = FragilityCurve::new(median, beta).unwrap();
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let (a, b) = (evaluate_fragility(&curve, lo).unwrap(), evaluate_fragility(&curve, hi).unwrap());
        prop_assert!(a <= b);
        prop_assert!((0.0..=1.0).contains(&a));
        let scaled = FragilityCurve::new(median * k, beta).unwrap();
        let c = evaluate_fragility(&scaled, x * k).unwrap();
        prop_assert!((c - evaluate_fragility(&curve, x).unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn distance_rule_never_gains_actions() {
    // Dropping a branch from a valid action keeps it valid.
    for seed in 0..300 {
        let inst = instance(seed, 7, 0.1, 0.9);
        let p_f = FailureProfile::new(inst.p_f.clone()).unwrap();
        let mdp = build_mdp(&inst.net, &p_f, &options(false)).unwrap();
        let rules = ActionRules::default();
        for i in 0..mdp.len() {
            for a in mdp.actions(i) {
                for drop in 0..a.len() {
                    let mut sub = a.branches().to_vec();
                    sub.remove(drop);
                    if !sub.is_empty() {
                        assert!(inst.net.action_valid(&rules, mdp.state(i), &sub).unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn enumeration_matches_powerset_filter() {
    for seed in 0..300 {
        let inst = instance(seed, 7, 0.1, 0.9);
        let p_f = FailureProfile::new(inst.p_f.clone()).unwrap();
        let mdp = build_mdp(&inst.net, &p_f, &options(false)).unwrap();
        let reference = Reference::new(&inst.raw, &inst.p_f, RefGoal::Full);
        for s in mdp.states() {
            let raw: Vec<u8> = s.statuses().iter().map(|b| b.code()).collect();
            let want = reference.actions(&raw);
            let got: Vec<Vec<usize>> =
                enumerate_actions(&inst.net, &ActionRules::default(), s, false)
                    .unwrap()
                    .iter()
                    .map(|a| a.branches().to_vec())
                    .collect();
            let mut want = want;
            want.sort();
            assert_eq!(got, want, "seed {seed} state {s}");
        }
    }
}

#[test]
fn values_match_exhaustive_reference() {
    for seed in 0..300 {
        let inst = instance(seed, 5, 0.0, 1.0);
        let p_f = FailureProfile::new(inst.p_f.clone()).unwrap();
        let mdp = build_mdp(&inst.net, &p_f, &options(true)).unwrap();
        let goal = goal_mask(&mdp, &inst.net, &Goal::FullRestoration).unwrap();
        let sol = solve(&mdp, &goal).unwrap();
        let mut reference = Reference::new(&inst.raw, &inst.p_f, RefGoal::Full);
        assert!(
            (sol.values[0] - reference.initial_value()).abs() <= 1e-12,
            "seed {seed}"
        );
        for bus in 0..inst.raw.bus_count() {
            let goal = Goal::TargetBus(RawNetwork::bus_id(bus));
            let mask = goal_mask(&mdp, &inst.net, &goal).unwrap();
            let v = solve(&mdp, &mask).unwrap().values[0];
            let mut reference = Reference::new(&inst.raw, &inst.p_f, RefGoal::Bus(bus));
            assert!(
                (v - reference.initial_value()).abs() <= 1e-12,
                "seed {seed} bus {bus}"
            );
            assert!(v <= sol.values[0] + 1e-12);
        }
    }
}

fn sample_outcome(session: &Session, rng: &mut StdRng) -> Observation {
    use rand::Rng;
    let action = session.recommend().action().unwrap().clone();
    let outcomes = action
        .branches()
        .iter()
        .map(|&j| {
            let p = session.profile().get(j);
            let damaged = if p >= 1.0 {
                true
            } else if p <= 0.0 {
                false
            } else {
                rng.gen_bool(p)
            };
            (
                j,
                if damaged {
                    Outcome::Damaged
                } else {
                    Outcome::Energized
                },
            )
        })
        .collect();
    Observation::new(action, outcomes)
}

#[test]
fn episodes_finish_within_branch_count_and_replay() {
    let mut rng = StdRng::seed_from_u64(99);
    for seed in 0..200 {
        let inst = instance(seed, 7, 0.0, 1.0);
        let m = inst.net.branch_count();
        let p_f = FailureProfile::new(inst.p_f.clone()).unwrap();
        let mut session = Session::start(
            Arc::new(inst.net.clone()),
            p_f.clone(),
            SessionOptions::default(),
            Goal::FullRestoration,
        )
        .unwrap();

        let seq = session.expected_sequence();
        assert!(seq.len() <= m);
        for (x, a) in seq.iter().enumerate() {
            for b in &seq[x + 1..] {
                assert!(a.branches().iter().all(|j| !b.contains(*j)));
            }
        }

        let mut steps = 0;
        while !session.is_goal() {
            let obs = sample_outcome(&session, &mut rng);
            let before = session.current_state().clone();
            let dist = transition_distribution(&before, &obs.action, &p_f).unwrap();
            session.apply_observation(obs).unwrap();
            assert!(dist.iter().any(|(t, _)| t == session.current_state()));
            steps += 1;
        }
        assert!(steps <= m);

        let again = Session::replay(
            session.network().clone(),
            p_f.clone(),
            SessionOptions::default(),
            Goal::FullRestoration,
            session.history(),
        )
        .unwrap();
        assert_eq!(again.current_state(), session.current_state());
        let snap = serde_json::to_string(&session.snapshot()).unwrap();
        let restored = Session::from_snapshot(serde_json::from_str(&snap).unwrap()).unwrap();
        assert_eq!(restored.current_state(), session.current_state());
        assert_eq!(restored.history(), session.history());
    }
}

#[test]
fn target_bus_reached_within_branch_count() {
    let mut rng = StdRng::seed_from_u64(5);
    for seed in 0..200 {
        let inst = instance(seed, 6, 0.0, 1.0);
        let bus = (seed as usize) % inst.raw.bus_count();
        let mut session = Session::start(
            Arc::new(inst.net.clone()),
            FailureProfile::new(inst.p_f.clone()).unwrap(),
            SessionOptions::default(),
            Goal::TargetBus(RawNetwork::bus_id(bus)),
        )
        .unwrap();
        let mut steps = 0;
        while !session.is_goal() {
            let obs = sample_outcome(&session, &mut rng);
            session.apply_observation(obs).unwrap();
            steps += 1;
        }
        assert!(steps <= inst.net.branch_count());
    }
}
