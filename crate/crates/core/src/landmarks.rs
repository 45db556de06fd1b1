//! Fact landmarks via delete-relaxation exclusion tests.
//!
//! A fact `f` outside the initial state is reported as a landmark of goal `G`
//! when `G` becomes unreachable under delete relaxation once every action
//! adding `f` is removed. Every plan must then execute some achiever of `f`,
//! so `f` holds at some point along it. Goal facts are always landmarks.
//! Initial-state facts that are not goal facts are left out: they hold at
//! time zero under every hypothesis and carry no evidence.

use alloc::vec;
use alloc::vec::Vec;

use crate::bitset::BitSet;
use crate::task::{ActionId, FactId, Goal, PlanningInstance, TaskError};

/// Layered delete-relaxed reachability from the initial state.
#[derive(Debug, Clone)]
pub struct RelaxedPlanningGraph {
    /// Cumulative fact layers; `fact_layers[i] ⊆ fact_layers[i + 1]`.
    pub fact_layers: Vec<BitSet>,
    /// Actions that first become applicable in fact layer `i`.
    pub action_layers: Vec<Vec<ActionId>>,
    pub goal_reachable: bool,
}

impl RelaxedPlanningGraph {
    pub fn fixpoint(&self) -> &BitSet {
        self.fact_layers.last().expect("graph has at least the initial layer")
    }
}

/// Builds the relaxed planning graph to its fixpoint, ignoring delete effects
/// and every action in `excluded` (a set over action ids).
pub fn build_rpg(instance: &PlanningInstance, goal: &Goal, excluded: &BitSet) -> RelaxedPlanningGraph {
    let mut unsatisfied: Vec<u32> = instance.actions().iter().map(|a| a.pre.len() as u32).collect();
    let mut reached = instance.initial().0.clone();
    let mut frontier: Vec<FactId> = instance.initial().facts().collect();
    let mut fact_layers = vec![reached.clone()];
    let mut action_layers = Vec::new();
    let mut first = true;

    loop {
        let mut layer = Vec::new();
        if first {
            layer.extend(
                instance
                    .actions()
                    .iter()
                    .filter(|a| a.pre.is_empty() && !excluded.contains(a.id.index()))
                    .map(|a| a.id),
            );
            first = false;
        }
        for f in frontier.drain(..) {
            for &a in instance.consumers(f) {
                let c = &mut unsatisfied[a.index()];
                *c -= 1;
                if *c == 0 && !excluded.contains(a.index()) {
                    layer.push(a);
                }
            }
        }
        if layer.is_empty() {
            break;
        }
        for &a in &layer {
            for &f in &instance.action(a).add {
                if reached.insert(f.index()) {
                    frontier.push(f);
                }
            }
        }
        action_layers.push(layer);
        if frontier.is_empty() {
            break;
        }
        fact_layers.push(reached.clone());
    }

    let goal_reachable = !goal.has_unreachable_atoms() && goal.as_set().is_subset(&reached);
    RelaxedPlanningGraph {
        fact_layers,
        action_layers,
        goal_reachable,
    }
}

/// Reusable buffers for repeated relaxed reachability tests.
struct Explorer<'a> {
    instance: &'a PlanningInstance,
    unsatisfied: Vec<u32>,
    reached: BitSet,
    queue: Vec<FactId>,
}

impl<'a> Explorer<'a> {
    fn new(instance: &'a PlanningInstance) -> Self {
        Explorer {
            instance,
            unsatisfied: vec![0; instance.num_actions()],
            reached: BitSet::new(instance.num_facts()),
            queue: Vec::new(),
        }
    }

    /// True if `goal` is relaxed-reachable when `blocked` can never be added.
    fn reachable_without(&mut self, goal: &Goal, blocked: Option<FactId>) -> bool {
        let inst = self.instance;
        for (c, a) in self.unsatisfied.iter_mut().zip(inst.actions()) {
            *c = a.pre.len() as u32;
        }
        self.reached.clear();
        self.queue.clear();
        let mut remaining = goal.facts().len();
        let fire = |a: ActionId, reached: &mut BitSet, queue: &mut Vec<FactId>, remaining: &mut usize| {
            let action = inst.action(a);
            if blocked.is_some_and(|b| action.add.contains(&b)) {
                return;
            }
            for &f in &action.add {
                if reached.insert(f.index()) {
                    queue.push(f);
                    if goal.as_set().contains(f.index()) {
                        *remaining -= 1;
                    }
                }
            }
        };
        for f in inst.initial().facts() {
            self.reached.insert(f.index());
            self.queue.push(f);
            if goal.as_set().contains(f.index()) {
                remaining -= 1;
            }
        }
        for a in inst.actions().iter().filter(|a| a.pre.is_empty()) {
            fire(a.id, &mut self.reached, &mut self.queue, &mut remaining);
        }
        while let Some(f) = self.queue.pop() {
            if remaining == 0 {
                return true;
            }
            for &a in inst.consumers(f) {
                let c = &mut self.unsatisfied[a.index()];
                *c -= 1;
                if *c == 0 {
                    fire(a, &mut self.reached, &mut self.queue, &mut remaining);
                }
            }
        }
        remaining == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LandmarkKind {
    GoalFact,
    Derived,
}

/// The hypothesis has no relaxed plan, so it has no landmarks either.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("goal hypothesis is unreachable from the initial state")]
pub struct Unsolvable;

/// Fact landmarks of one goal, sorted by fact id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandmarkSet {
    landmarks: Vec<(FactId, LandmarkKind)>,
    set: BitSet,
}

impl LandmarkSet {
    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FactId, LandmarkKind)> + '_ {
        self.landmarks.iter().copied()
    }

    pub fn facts(&self) -> impl Iterator<Item = FactId> + '_ {
        self.landmarks.iter().map(|&(f, _)| f)
    }

    pub fn contains(&self, f: FactId) -> bool {
        self.set.contains(f.index())
    }

    pub fn as_set(&self) -> &BitSet {
        &self.set
    }
}

/// Extracts the goal facts plus every derived landmark found by the
/// exclusion test. Sound but not complete.
pub fn extract_landmarks(instance: &PlanningInstance, goal: &Goal) -> Result<LandmarkSet, Unsolvable> {
    if goal.has_unreachable_atoms() {
        return Err(Unsolvable);
    }
    let mut explorer = Explorer::new(instance);
    if !explorer.reachable_without(goal, None) {
        return Err(Unsolvable);
    }
    let mut landmarks: Vec<(FactId, LandmarkKind)> =
        goal.facts().iter().map(|&f| (f, LandmarkKind::GoalFact)).collect();
    for i in 0..instance.num_facts() {
        let f = FactId(i as u32);
        if instance.initial().contains(f) || goal.as_set().contains(i) {
            continue;
        }
        if !explorer.reachable_without(goal, Some(f)) {
            landmarks.push((f, LandmarkKind::Derived));
        }
    }
    landmarks.sort_unstable();
    let set = BitSet::from_indices(instance.num_facts(), landmarks.iter().map(|(f, _)| f.index()));
    Ok(LandmarkSet { landmarks, set })
}

/// Landmarks evidenced by the observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AchievedSet {
    pub achieved: BitSet,
}

impl AchievedSet {
    pub fn len(&self) -> usize {
        self.achieved.len()
    }

    pub fn is_empty(&self) -> bool {
        self.achieved.is_empty()
    }
}

/// A landmark counts as achieved when it holds initially or appears in the
/// precondition or add list of some observed action. Observation order is
/// irrelevant.
pub fn achieved_landmarks(
    landmarks: &LandmarkSet,
    instance: &PlanningInstance,
    observations: &[ActionId],
) -> Result<AchievedSet, TaskError> {
    let mut achieved = landmarks.set.clone();
    achieved.intersect_with(&instance.initial().0);
    for &o in observations {
        if o.index() >= instance.num_actions() {
            return Err(TaskError::UnknownAction(alloc::format!("#{}", o.0)));
        }
        let a = instance.action(o);
        for &f in a.pre.iter().chain(&a.add) {
            if landmarks.contains(f) {
                achieved.insert(f.index());
            }
        }
    }
    Ok(AchievedSet { achieved })
}
