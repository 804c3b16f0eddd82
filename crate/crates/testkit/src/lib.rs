//! Test support: random small grids and an exhaustive reference evaluator.
//!
//! Nothing here uses the engine. The evaluator works on raw edge lists and
//! status byte vectors, enumerates every valid action by filtering the
//! powerset of candidate branches, and recurses over every damage outcome.

use std::collections::HashMap;

use rand::Rng;
use serde_json::json;

pub const U: u8 = 0;
pub const E: u8 = 1;
pub const D: u8 = 2;

#[derive(Debug, Clone)]
pub struct RawNetwork {
    pub source: Vec<bool>,
    pub edges: Vec<(usize, usize)>,
}

impl RawNetwork {
    pub fn bus_count(&self) -> usize {
        self.source.len()
    }

    pub fn branch_count(&self) -> usize {
        self.edges.len()
    }

    pub fn bus_id(i: usize) -> String {
        format!("n{i}")
    }

    /// Network document in the engine's JSON schema.
    pub fn to_json(&self) -> String {
        let buses: Vec<_> = self
            .source
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let kind = match (s, i % 2) {
                    (false, _) => "load",
                    (true, 0) => "transmission_source",
                    (true, _) => "der_source",
                };
                json!({"id": Self::bus_id(i), "kind": kind})
            })
            .collect();
        let branches: Vec<_> = self
            .edges
            .iter()
            .enumerate()
            .map(|(j, &(a, b))| {
                json!({"index": j, "endpoints": [Self::bus_id(a), Self::bus_id(b)], "normally_open": false})
            })
            .collect();
        json!({"buses": buses, "branches": branches}).to_string()
    }
}

/// Connected random grid with `branches` branches on at most
/// `branches + 1` buses; at least one source bus.
pub fn random_network<R: Rng>(rng: &mut R, branches: usize) -> RawNetwork {
    assert!(branches >= 1);
    let buses = rng.gen_range(2..=branches + 1);
    let mut edges = Vec::with_capacity(branches);
    // random spanning tree, then extra edges (parallel ones allowed)
    for v in 1..buses {
        let u = rng.gen_range(0..v);
        edges.push((u, v));
    }
    while edges.len() < branches {
        let a = rng.gen_range(0..buses);
        let mut b = rng.gen_range(0..buses - 1);
        if b >= a {
            b += 1;
        }
        edges.push((a, b));
    }
    // shuffle branch numbering and orientation
    for i in (1..edges.len()).rev() {
        let k = rng.gen_range(0..=i);
        edges.swap(i, k);
    }
    for e in &mut edges {
        if rng.gen_bool(0.5) {
            *e = (e.1, e.0);
        }
    }
    let mut source: Vec<bool> = (0..buses).map(|_| rng.gen_bool(0.25)).collect();
    if !source.iter().any(|&s| s) {
        let k = rng.gen_range(0..buses);
        source[k] = true;
    }
    RawNetwork { source, edges }
}

pub fn random_profile<R: Rng>(rng: &mut R, branches: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..branches).map(|_| rng.gen_range(lo..=hi)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefGoal {
    Full,
    Bus(usize),
}

/// Exhaustive optimal expected-step evaluator.
pub struct Reference<'a> {
    net: &'a RawNetwork,
    p_f: &'a [f64],
    forbid_merge: bool,
    goal: RefGoal,
    memo: HashMap<Vec<u8>, f64>,
}

impl<'a> Reference<'a> {
    pub fn new(net: &'a RawNetwork, p_f: &'a [f64], goal: RefGoal) -> Self {
        Self {
            net,
            p_f,
            forbid_merge: false,
            goal,
            memo: HashMap::new(),
        }
    }

    pub fn forbid_source_island_merge(mut self, on: bool) -> Self {
        self.forbid_merge = on;
        self
    }

    fn live(&self, s: &[u8]) -> Vec<bool> {
        let mut live = self.net.source.clone();
        for (j, &(a, b)) in self.net.edges.iter().enumerate() {
            if s[j] == E {
                live[a] = true;
                live[b] = true;
            }
        }
        live
    }

    pub fn candidates(&self, s: &[u8]) -> Vec<usize> {
        let live = self.live(s);
        (0..self.net.branch_count())
            .filter(|&j| s[j] == U)
            .filter(|&j| {
                let (a, b) = self.net.edges[j];
                live[a] || live[b]
            })
            .collect()
    }

    /// Forest test by counting: a graph is acyclic iff its edge count
    /// equals its vertex count minus its number of components.
    fn is_forest(&self, edges: &[(usize, usize)]) -> bool {
        let n = self.net.bus_count() + 1;
        let node = |v: usize| {
            if self.forbid_merge && self.net.source[v] {
                n - 1
            } else {
                v
            }
        };
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            let (a, b) = (node(a), node(b));
            if a == b {
                return false;
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        edges.len() == n - components
    }

    pub fn valid(&self, s: &[u8], action: &[usize]) -> bool {
        for (i, &x) in action.iter().enumerate() {
            for &y in &action[i + 1..] {
                let (a, b) = self.net.edges[x];
                let (c, d) = self.net.edges[y];
                if a == c || a == d || b == c || b == d {
                    return false;
                }
            }
        }
        let mut edges: Vec<(usize, usize)> = (0..self.net.branch_count())
            .filter(|&j| s[j] == E)
            .map(|j| self.net.edges[j])
            .collect();
        edges.extend(action.iter().map(|&j| self.net.edges[j]));
        self.is_forest(&edges)
    }

    /// Every valid nonempty action, as sorted index lists.
    pub fn actions(&self, s: &[u8]) -> Vec<Vec<usize>> {
        let cand = self.candidates(s);
        (1u32..(1 << cand.len()))
            .map(|mask| {
                (0..cand.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| cand[i])
                    .collect::<Vec<_>>()
            })
            .filter(|a| self.valid(s, a))
            .collect()
    }

    fn in_goal(&self, s: &[u8], stuck: bool) -> bool {
        match self.goal {
            RefGoal::Full => stuck,
            RefGoal::Bus(bus) => {
                stuck
                    || self
                        .net
                        .edges
                        .iter()
                        .enumerate()
                        .any(|(j, &(a, b))| s[j] == E && (a == bus || b == bus))
            }
        }
    }

    /// Optimal expected number of steps from `s`.
    pub fn value(&mut self, s: &[u8]) -> f64 {
        if let Some(&v) = self.memo.get(s) {
            return v;
        }
        let actions = self.actions(s);
        let v = if self.in_goal(s, actions.is_empty()) {
            0.0
        } else {
            let mut best = f64::INFINITY;
            for a in &actions {
                let mut expected = 0.0;
                for outcome in 0u32..(1 << a.len()) {
                    let mut t = s.to_vec();
                    let mut p = 1.0;
                    for (pos, &j) in a.iter().enumerate() {
                        if outcome & (1 << pos) != 0 {
                            t[j] = D;
                            p *= self.p_f[j];
                        } else {
                            t[j] = E;
                            p *= 1.0 - self.p_f[j];
                        }
                    }
                    if p > 0.0 {
                        expected += p * self.value(&t);
                    }
                }
                best = best.min(1.0 + expected);
            }
            best
        };
        self.memo.insert(s.to_vec(), v);
        v
    }

    pub fn initial_value(&mut self) -> f64 {
        let s = vec![U; self.net.branch_count()];
        self.value(&s)
    }

    /// Distinct states reachable from all-unknown, expanding either every
    /// valid action or only the inclusion-maximal ones.
    pub fn reachable_count(&self, maximal_only: bool) -> usize {
        let start = vec![U; self.net.branch_count()];
        let mut seen = std::collections::HashSet::from([start.clone()]);
        let mut stack = vec![start];
        while let Some(s) = stack.pop() {
            let all = self.actions(&s);
            let chosen: Vec<&Vec<usize>> = all
                .iter()
                .filter(|a| {
                    !maximal_only
                        || !all
                            .iter()
                            .any(|b| b.len() > a.len() && a.iter().all(|j| b.contains(j)))
                })
                .collect();
            for a in chosen {
                for outcome in 0u32..(1 << a.len()) {
                    let mut t = s.clone();
                    let mut p = 1.0;
                    for (pos, &j) in a.iter().enumerate() {
                        let dmg = outcome & (1 << pos) != 0;
                        t[j] = if dmg { D } else { E };
                        p *= if dmg { self.p_f[j] } else { 1.0 - self.p_f[j] };
                    }
                    if p > 0.0 && seen.insert(t.clone()) {
                        stack.push(t);
                    }
                }
            }
        }
        seen.len()
    }
}
