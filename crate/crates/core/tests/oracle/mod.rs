//! Brute-force reference implementations over explicit state spaces.
//!
//! Nothing here uses the crate's landmark, heuristic or search code; states
//! are sorted fact-index vectors and successors are computed directly from
//! the ground action lists.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use landrec_core::{Goal, PlanningInstance};

pub type Facts = Vec<u32>;

fn holds(state: &Facts, f: u32) -> bool {
    state.binary_search(&f).is_ok()
}

fn satisfied(state: &Facts, goal: &[u32]) -> bool {
    goal.iter().all(|&g| holds(state, g))
}

fn successors(instance: &PlanningInstance, state: &Facts) -> Vec<(usize, Facts)> {
    let mut out = Vec::new();
    for (i, a) in instance.actions().iter().enumerate() {
        if !a.pre.iter().all(|p| holds(state, p.0)) {
            continue;
        }
        let mut next: Facts = state
            .iter()
            .copied()
            .filter(|f| !a.del.iter().any(|d| d.0 == *f))
            .collect();
        next.extend(a.add.iter().map(|f| f.0));
        next.sort_unstable();
        next.dedup();
        out.push((i, next));
    }
    out
}

pub fn initial(instance: &PlanningInstance) -> Facts {
    instance.initial().facts().map(|f| f.0).collect()
}

/// Goal fact indices, or `None` for a goal with pruned atoms.
pub fn goal_facts(goal: &Goal) -> Option<Facts> {
    (!goal.has_unreachable_atoms()).then(|| goal.facts().iter().map(|f| f.0).collect())
}

/// The full reachable state graph.
pub struct StateGraph {
    pub states: Vec<Facts>,
    pub edges: Vec<Vec<u32>>,
}

impl StateGraph {
    /// `None` when more than `limit` states are reachable.
    pub fn explore(instance: &PlanningInstance, limit: usize) -> Option<StateGraph> {
        let root = initial(instance);
        let mut index = HashMap::from([(root.clone(), 0u32)]);
        let mut states = vec![root];
        let mut edges = Vec::new();
        let mut i = 0;
        while i < states.len() {
            let mut out = Vec::new();
            for (_, next) in successors(instance, &states[i]) {
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        if states.len() >= limit {
                            return None;
                        }
                        let id = states.len() as u32;
                        index.insert(next.clone(), id);
                        states.push(next);
                        id
                    }
                };
                out.push(id);
            }
            edges.push(out);
            i += 1;
        }
        Some(StateGraph { states, edges })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Whether a goal state is reachable from the initial state through
    /// states in which `avoid` is false.
    pub fn goal_reachable_avoiding(&self, goal: &[u32], avoid: Option<u32>) -> bool {
        let blocked = |s: u32| avoid.is_some_and(|f| holds(&self.states[s as usize], f));
        if blocked(0) {
            return false;
        }
        let mut seen = vec![false; self.states.len()];
        seen[0] = true;
        let mut queue = VecDeque::from([0u32]);
        while let Some(s) = queue.pop_front() {
            if satisfied(&self.states[s as usize], goal) {
                return true;
            }
            for &t in &self.edges[s as usize] {
                if !seen[t as usize] && !blocked(t) {
                    seen[t as usize] = true;
                    queue.push_back(t);
                }
            }
        }
        false
    }

    /// Every fact that is true somewhere along every path to the goal:
    /// the exact fact landmarks of the explicit state space.
    pub fn exact_landmarks(&self, num_facts: usize, goal: &[u32]) -> Vec<u32> {
        (0..num_facts as u32)
            .filter(|&f| !self.goal_reachable_avoiding(goal, Some(f)))
            .collect()
    }
}

/// Length of a shortest plan, `None` if the goal is unreachable, or
/// `Err(())` when more than `limit` states would be visited.
pub fn shortest_plan_length(instance: &PlanningInstance, goal: &[u32], limit: usize) -> Result<Option<usize>, ()> {
    let root = initial(instance);
    let mut depth = HashMap::from([(root.clone(), 0usize)]);
    let mut queue = VecDeque::from([root]);
    while let Some(s) = queue.pop_front() {
        let d = depth[&s];
        if satisfied(&s, goal) {
            return Ok(Some(d));
        }
        for (_, next) in successors(instance, &s) {
            if !depth.contains_key(&next) {
                if depth.len() >= limit {
                    return Err(());
                }
                depth.insert(next.clone(), d + 1);
                queue.push_back(next);
            }
        }
    }
    Ok(None)
}

/// Replays action indices from the initial state; `None` if some action is
/// inapplicable, otherwise whether the goal holds at the end.
pub fn replay(instance: &PlanningInstance, actions: &[usize], goal: &[u32]) -> Option<bool> {
    let mut s = initial(instance);
    for &i in actions {
        let (_, next) = successors(instance, &s).into_iter().find(|(j, _)| *j == i)?;
        s = next;
    }
    Some(satisfied(&s, goal))
}
