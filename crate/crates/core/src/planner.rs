//! Forward state-space search over a grounded task.
//!
//! Greedy best-first search (additive or goal-count heuristic) produces the
//! sample plans; uniform-cost search returns length-optimal plans on small
//! tasks. Open-list ties are broken by a seeded RNG, so different seeds give
//! different, reproducible plans.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use hashbrown::hash_map::Entry;
use hashbrown::HashMap;
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::task::{ActionId, Goal, Plan, PlanningInstance, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    GreedyBestFirst,
    /// Breadth-first with unit costs; optimal, meant for small tasks.
    UniformCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    Additive,
    GoalCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub strategy: Strategy,
    pub heuristic: Heuristic,
    /// Maximum number of generated search nodes.
    pub node_cap: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategy: Strategy::GreedyBestFirst,
            heuristic: Heuristic::Additive,
            node_cap: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("goal is unreachable: search space exhausted")]
    Unsolvable,
    #[error("node cap of {cap} reached")]
    NodeCap { cap: usize },
    #[error("node cap must be positive")]
    InvalidConfig,
}

/// Sum over goal facts of their relaxed achievement cost from `state`, with
/// every action costing 1. `None` when some goal fact is relaxed-unreachable.
pub fn additive_heuristic(instance: &PlanningInstance, state: &State, goal: &Goal) -> Option<u32> {
    AdditiveEvaluator::new(instance).evaluate(state, goal)
}

struct AdditiveEvaluator<'a> {
    instance: &'a PlanningInstance,
    cost: Vec<u32>,
    unsatisfied: Vec<u32>,
    accumulated: Vec<u32>,
    heap: BinaryHeap<Reverse<(u32, u32)>>,
}

impl<'a> AdditiveEvaluator<'a> {
    fn new(instance: &'a PlanningInstance) -> Self {
        AdditiveEvaluator {
            instance,
            cost: vec![u32::MAX; instance.num_facts()],
            unsatisfied: vec![0; instance.num_actions()],
            accumulated: vec![0; instance.num_actions()],
            heap: BinaryHeap::new(),
        }
    }

    fn relax(&mut self, action: ActionId, cost: u32) {
        for &g in &self.instance.action(action).add {
            if cost < self.cost[g.index()] {
                self.cost[g.index()] = cost;
                self.heap.push(Reverse((cost, g.0)));
            }
        }
    }

    fn evaluate(&mut self, state: &State, goal: &Goal) -> Option<u32> {
        if goal.has_unreachable_atoms() {
            return None;
        }
        if goal.as_set().is_subset(&state.0) {
            return Some(0);
        }
        let inst = self.instance;
        self.cost.iter_mut().for_each(|c| *c = u32::MAX);
        self.heap.clear();
        for (i, a) in inst.actions().iter().enumerate() {
            self.unsatisfied[i] = a.pre.len() as u32;
            self.accumulated[i] = 0;
        }
        for f in state.facts() {
            self.cost[f.index()] = 0;
            self.heap.push(Reverse((0, f.0)));
        }
        for a in inst.actions().iter().filter(|a| a.pre.is_empty()) {
            self.relax(a.id, a.cost());
        }
        while let Some(Reverse((c, f))) = self.heap.pop() {
            if c > self.cost[f as usize] {
                continue;
            }
            for &a in inst.consumers(crate::task::FactId(f)) {
                let i = a.index();
                self.unsatisfied[i] -= 1;
                self.accumulated[i] = self.accumulated[i].saturating_add(c);
                if self.unsatisfied[i] == 0 {
                    let ca = self.accumulated[i].saturating_add(inst.action(a).cost());
                    self.relax(a, ca);
                }
            }
        }
        goal.facts().iter().try_fold(0u32, |acc, g| {
            let c = self.cost[g.index()];
            (c != u32::MAX).then(|| acc.saturating_add(c))
        })
    }
}

fn goal_count(state: &State, goal: &Goal) -> Option<u32> {
    if goal.has_unreachable_atoms() {
        return None;
    }
    Some(goal.facts().iter().filter(|&&g| !state.contains(g)).count() as u32)
}

struct Node {
    parent: u32,
    action: Option<ActionId>,
}

struct SearchSpace {
    nodes: Vec<Node>,
    states: Vec<State>,
    index: HashMap<State, u32>,
}

impl SearchSpace {
    fn new(root: State) -> Self {
        let mut index = HashMap::new();
        index.insert(root.clone(), 0);
        SearchSpace {
            nodes: vec![Node {
                parent: u32::MAX,
                action: None,
            }],
            states: vec![root],
            index,
        }
    }

    /// Registers `state` unless already seen; returns its new node id.
    fn insert(&mut self, state: State, parent: u32, action: ActionId) -> Option<u32> {
        match self.index.entry(state) {
            Entry::Occupied(_) => None,
            Entry::Vacant(v) => {
                let id = self.nodes.len() as u32;
                self.states.push(v.key().clone());
                v.insert(id);
                self.nodes.push(Node {
                    parent,
                    action: Some(action),
                });
                Some(id)
            }
        }
    }

    fn plan_to(&self, mut id: u32) -> Plan {
        let mut actions = Vec::new();
        while let Some(a) = self.nodes[id as usize].action {
            actions.push(a);
            id = self.nodes[id as usize].parent;
        }
        actions.reverse();
        Plan::new(actions)
    }
}

/// Solves the instance's own goal.
pub fn solve(instance: &PlanningInstance, config: &SearchConfig) -> Result<Plan, SearchError> {
    solve_for(instance, instance.goal(), config)
}

/// Solves `goal` from the initial state of `instance`. Every returned plan
/// is valid; uniform-cost plans are also shortest.
pub fn solve_for(instance: &PlanningInstance, goal: &Goal, config: &SearchConfig) -> Result<Plan, SearchError> {
    if config.node_cap == 0 {
        return Err(SearchError::InvalidConfig);
    }
    if goal.has_unreachable_atoms() {
        return Err(SearchError::Unsolvable);
    }
    let root = instance.initial().clone();
    if goal.is_satisfied_by(&root) {
        return Ok(Plan::default());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    match config.strategy {
        Strategy::UniformCost => breadth_first(instance, goal, config, root, &mut rng),
        Strategy::GreedyBestFirst => greedy(instance, goal, config, root, &mut rng),
    }
}

fn applicable(instance: &PlanningInstance, state: &State, out: &mut Vec<ActionId>) {
    out.clear();
    out.extend(
        instance
            .actions()
            .iter()
            .filter(|a| state.is_applicable(a))
            .map(|a| a.id),
    );
}

fn breadth_first(
    instance: &PlanningInstance,
    goal: &Goal,
    config: &SearchConfig,
    root: State,
    rng: &mut ChaCha8Rng,
) -> Result<Plan, SearchError> {
    let mut space = SearchSpace::new(root);
    let mut queue = VecDeque::from([0u32]);
    let mut ops = Vec::new();
    while let Some(id) = queue.pop_front() {
        let state = space.states[id as usize].clone();
        applicable(instance, &state, &mut ops);
        ops.shuffle(rng);
        for &a in &ops {
            let next = state.successor(instance.action(a));
            let done = goal.is_satisfied_by(&next);
            if let Some(child) = space.insert(next, id, a) {
                if done {
                    return Ok(space.plan_to(child));
                }
                if space.nodes.len() > config.node_cap {
                    return Err(SearchError::NodeCap { cap: config.node_cap });
                }
                queue.push_back(child);
            }
        }
    }
    Err(SearchError::Unsolvable)
}

fn greedy(
    instance: &PlanningInstance,
    goal: &Goal,
    config: &SearchConfig,
    root: State,
    rng: &mut ChaCha8Rng,
) -> Result<Plan, SearchError> {
    let mut additive = AdditiveEvaluator::new(instance);
    let mut h = |s: &State| match config.heuristic {
        Heuristic::Additive => additive.evaluate(s, goal),
        Heuristic::GoalCount => goal_count(s, goal),
    };
    let Some(h0) = h(&root) else {
        return Err(SearchError::Unsolvable);
    };
    let mut space = SearchSpace::new(root);
    let mut open = BinaryHeap::new();
    open.push(Reverse((h0, rng.next_u64(), 0u32)));
    let mut ops = Vec::new();
    while let Some(Reverse((_, _, id))) = open.pop() {
        let state = space.states[id as usize].clone();
        applicable(instance, &state, &mut ops);
        for &a in &ops {
            let next = state.successor(instance.action(a));
            let done = goal.is_satisfied_by(&next);
            let Some(hv) = (if done { Some(0) } else { h(&next) }) else {
                continue;
            };
            if let Some(child) = space.insert(next, id, a) {
                if done {
                    return Ok(space.plan_to(child));
                }
                if space.nodes.len() > config.node_cap {
                    return Err(SearchError::NodeCap { cap: config.node_cap });
                }
                open.push(Reverse((hv, rng.next_u64(), child)));
            }
        }
    }
    Err(SearchError::Unsolvable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_atom_list, parse_domain, parse_problem};
    use crate::task::{ground, GroundingOptions};
    use crate::testdata::{BLOCKS, BLOCKS_3_TOWER};

    fn tower() -> PlanningInstance {
        let d = parse_domain(BLOCKS).unwrap();
        let p = parse_problem(BLOCKS_3_TOWER, &d).unwrap();
        ground(&d, &p, &GroundingOptions::default()).unwrap()
    }

    #[test]
    fn tower_optimal_length_four() {
        let t = tower();
        let cfg = SearchConfig {
            strategy: Strategy::UniformCost,
            ..Default::default()
        };
        let plan = solve(&t, &cfg).unwrap();
        assert_eq!(plan.len(), 4);
        assert!(t.validate_plan(&plan).valid);
    }

    #[test]
    fn greedy_plans_validate_and_are_deterministic() {
        let t = tower();
        for seed in 0..10 {
            for heuristic in [Heuristic::Additive, Heuristic::GoalCount] {
                let cfg = SearchConfig {
                    heuristic,
                    seed,
                    ..Default::default()
                };
                let p = solve(&t, &cfg).unwrap();
                assert!(t.validate_plan(&p).valid);
                assert_eq!(p, solve(&t, &cfg).unwrap());
            }
        }
    }

    #[test]
    fn trivial_and_unreachable_goals() {
        let t = tower();
        let done = t.goal_from_atoms(&parse_atom_list("(ontable a)").unwrap()).unwrap();
        assert_eq!(solve_for(&t, &done, &SearchConfig::default()).unwrap(), Plan::default());
        let never = t.goal_from_atoms(&parse_atom_list("(on a a)").unwrap()).unwrap();
        assert_eq!(
            solve_for(&t, &never, &SearchConfig::default()),
            Err(SearchError::Unsolvable)
        );
        let cfg = SearchConfig {
            node_cap: 0,
            ..Default::default()
        };
        assert_eq!(solve(&t, &cfg), Err(SearchError::InvalidConfig));
        let cfg = SearchConfig {
            node_cap: 2,
            strategy: Strategy::UniformCost,
            ..Default::default()
        };
        assert_eq!(solve(&t, &cfg), Err(SearchError::NodeCap { cap: 2 }));
    }

    #[test]
    fn really_unreachable_without_relaxed_dead_end() {
        // (q) and (r) are each reachable, but using one destroys the other.
        let d = parse_domain(
            "(define (domain z) (:predicates (p) (q) (r))
               (:action a :parameters () :precondition (p) :effect (and (q) (not (p))))
               (:action b :parameters () :precondition (p) :effect (and (r) (not (p)))))",
        )
        .unwrap();
        let p = parse_problem(
            "(define (problem z1) (:domain z) (:init (p)) (:goal (and (q) (r))))",
            &d,
        )
        .unwrap();
        let t = ground(&d, &p, &GroundingOptions::default()).unwrap();
        assert_eq!(additive_heuristic(&t, t.initial(), t.goal()), Some(2));
        for strategy in [Strategy::GreedyBestFirst, Strategy::UniformCost] {
            let cfg = SearchConfig {
                strategy,
                ..Default::default()
            };
            assert_eq!(solve(&t, &cfg), Err(SearchError::Unsolvable));
        }
    }

    #[test]
    fn additive_values() {
        let t = tower();
        assert_eq!(additive_heuristic(&t, t.initial(), t.goal()), Some(4));
        let done = t.goal_from_atoms(&parse_atom_list("(clear a)").unwrap()).unwrap();
        assert_eq!(additive_heuristic(&t, t.initial(), &done), Some(0));
        let one = t.goal_from_atoms(&parse_atom_list("(holding a)").unwrap()).unwrap();
        assert_eq!(additive_heuristic(&t, t.initial(), &one), Some(1));
        let never = t.goal_from_atoms(&parse_atom_list("(on a a)").unwrap()).unwrap();
        assert_eq!(additive_heuristic(&t, t.initial(), &never), None);
    }
}
