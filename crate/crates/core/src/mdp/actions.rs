use crate::forest::DisjointSet;
use crate::network::{ActionRules, Network, NetworkError, SystemState};

use super::Action;

/// Feasible action sets of `s`, in lexicographic order.
///
/// With `simplify`, only the inclusion-maximal valid subsets of `A^b(s)`
/// are returned (`A'(s)`); otherwise every valid nonempty subset (`A(s)`).
///
/// Valid sets are downward closed under the distance and loop rules (and
/// the validity hook is required to be monotone), so a depth-first walk
/// that extends a set only with larger, compatible branches visits each
/// valid set exactly once, and a set is maximal iff no single branch of
/// `A^b(s)` can be added to it.
pub fn enumerate_actions(
    net: &Network,
    rules: &ActionRules,
    s: &SystemState,
    simplify: bool,
) -> Result<Vec<Action>, NetworkError> {
    let candidates: Vec<usize> = net.feasible_branch_actions(s)?.into_iter().collect();
    let mut walk = Walk {
        net,
        rules,
        state: s,
        candidates: &candidates,
        simplify,
        members: Vec::new(),
        found: Vec::new(),
    };
    let forest = net.energized_forest(s, rules);
    walk.descend(0, &forest);
    let mut found = walk.found;
    found.sort_unstable();
    Ok(found)
}

struct Walk<'a> {
    net: &'a Network,
    rules: &'a ActionRules,
    state: &'a SystemState,
    candidates: &'a [usize],
    simplify: bool,
    members: Vec<usize>,
    found: Vec<Action>,
}

impl Walk<'_> {
    fn compatible(&self, forest: &DisjointSet, j: usize) -> Option<DisjointSet> {
        let mut forest = forest.clone();
        if !self.net.extends(&self.members, &mut forest, j) {
            return None;
        }
        let [a, b] = self.net.branch_ends(j).ok()?;
        forest.union(a, b);
        let mut with = self.members.clone();
        with.push(j);
        self.rules
            .accepts(self.net, &self.state.with_energized(&with))
            .then_some(forest)
    }

    fn descend(&mut self, from: usize, forest: &DisjointSet) {
        for pos in from..self.candidates.len() {
            let j = self.candidates[pos];
            if let Some(next) = self.compatible(forest, j) {
                self.members.push(j);
                if !self.simplify || self.is_maximal(&next) {
                    self.found.push(Action(self.members.clone()));
                }
                self.descend(pos + 1, &next);
                self.members.pop();
            }
        }
    }

    fn is_maximal(&self, forest: &DisjointSet) -> bool {
        self.candidates
            .iter()
            .filter(|j| !self.members.contains(j))
            .all(|&j| self.compatible(forest, j).is_none())
    }
}
