//! Grounded STRIPS tasks: grounding, state transitions and plan validation.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::{HashMap, HashSet};

use crate::bitset::BitSet;
use crate::pddl::{self, Domain, GroundAtom, Problem, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactId(pub u32);

impl FactId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub u32);

impl ActionId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A ground operator. Fact lists are sorted and `add` and `del` are disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub id: ActionId,
    /// Ground signature, e.g. `(stack a b)`.
    pub name: String,
    pub pre: Vec<FactId>,
    pub add: Vec<FactId>,
    pub del: Vec<FactId>,
}

impl Action {
    /// Every action has unit cost.
    pub const fn cost(&self) -> u32 {
        1
    }
}

/// A set of positive facts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State(pub BitSet);

impl State {
    pub fn contains(&self, f: FactId) -> bool {
        self.0.contains(f.index())
    }

    pub fn facts(&self) -> impl Iterator<Item = FactId> + '_ {
        self.0.iter().map(|i| FactId(i as u32))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_applicable(&self, action: &Action) -> bool {
        action.pre.iter().all(|&f| self.contains(f))
    }

    /// Successor without the precondition check.
    pub fn successor(&self, action: &Action) -> State {
        let mut next = self.0.clone();
        for f in &action.del {
            next.remove(f.index());
        }
        for f in &action.add {
            next.insert(f.index());
        }
        State(next)
    }
}

/// A conjunctive goal. Atoms that grounding pruned as unreachable under
/// delete relaxation are kept by name in `unreachable`; such a goal can never
/// be achieved.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Goal {
    facts: Vec<FactId>,
    set: BitSet,
    unreachable: Vec<String>,
}

impl Goal {
    pub fn new(num_facts: usize, mut facts: Vec<FactId>, unreachable: Vec<String>) -> Self {
        facts.sort_unstable();
        facts.dedup();
        let set = BitSet::from_indices(num_facts, facts.iter().map(|f| f.index()));
        Goal {
            facts,
            set,
            unreachable,
        }
    }

    pub fn facts(&self) -> &[FactId] {
        &self.facts
    }

    pub fn as_set(&self) -> &BitSet {
        &self.set
    }

    pub fn unreachable_atoms(&self) -> &[String] {
        &self.unreachable
    }

    pub fn has_unreachable_atoms(&self) -> bool {
        !self.unreachable.is_empty()
    }

    pub fn is_satisfied_by(&self, state: &State) -> bool {
        self.unreachable.is_empty() && self.set.is_subset(&state.0)
    }

    /// Number of atoms including unreachable ones.
    pub fn len(&self) -> usize {
        self.facts.len() + self.unreachable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Plan {
    pub actions: Vec<ActionId>,
}

impl Plan {
    pub fn new(actions: Vec<ActionId>) -> Self {
        Plan { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Outcome of [`PlanningInstance::validate_plan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanValidation {
    pub valid: bool,
    /// First failing step; `plan.len()` when every step applies but the goal
    /// does not hold at the end.
    pub failure: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroundError {
    #[error("grounding produced more than {cap} actions")]
    ActionCap { cap: usize },
    #[error("problem is for domain `{problem}`, not `{domain}`")]
    DomainMismatch { domain: String, problem: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error("unknown ground action `{0}`")]
    UnknownAction(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("`{predicate}` expects {expected} arguments, found {found}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("action `{action}` is not applicable; missing {}", missing.join(", "))]
    PreconditionViolation { action: String, missing: Vec<String> },
    #[error(transparent)]
    Parse(#[from] pddl::ParseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundingOptions {
    /// Abort once more ground actions than this have been produced.
    pub action_cap: usize,
    /// Bind distinct parameters of one operator to distinct objects.
    pub distinct_parameters: bool,
}

impl Default for GroundingOptions {
    fn default() -> Self {
        GroundingOptions {
            action_cap: 1_000_000,
            distinct_parameters: true,
        }
    }
}

/// A grounded task ⟨facts, actions, initial state, goal⟩. Immutable once built.
#[derive(Debug, Clone)]
pub struct PlanningInstance {
    pub domain_name: String,
    pub problem_name: String,
    facts: Vec<GroundAtom>,
    fact_names: Vec<String>,
    fact_index: HashMap<GroundAtom, FactId>,
    actions: Vec<Action>,
    action_index: HashMap<String, ActionId>,
    initial: State,
    goal: Goal,
    achievers: Vec<Vec<ActionId>>,
    consumers: Vec<Vec<ActionId>>,
    arity: BTreeMap<String, usize>,
    objects: HashSet<String>,
}

impl PlanningInstance {
    pub fn num_facts(&self) -> usize {
        self.facts.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn fact(&self, f: FactId) -> &GroundAtom {
        &self.facts[f.index()]
    }

    /// Rendered as `(pred arg ...)`.
    pub fn fact_name(&self, f: FactId) -> &str {
        &self.fact_names[f.index()]
    }

    pub fn fact_id(&self, atom: &GroundAtom) -> Option<FactId> {
        self.fact_index.get(atom).copied()
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action(&self, a: ActionId) -> &Action {
        &self.actions[a.index()]
    }

    pub fn initial(&self) -> &State {
        &self.initial
    }

    pub fn goal(&self) -> &Goal {
        &self.goal
    }

    /// Actions that add `f`.
    pub fn achievers(&self, f: FactId) -> &[ActionId] {
        &self.achievers[f.index()]
    }

    /// Actions that require `f`.
    pub fn consumers(&self, f: FactId) -> &[ActionId] {
        &self.consumers[f.index()]
    }

    pub fn empty_state(&self) -> State {
        State(BitSet::new(self.num_facts()))
    }

    pub fn state_from(&self, facts: impl IntoIterator<Item = FactId>) -> State {
        State(BitSet::from_indices(
            self.num_facts(),
            facts.into_iter().map(FactId::index),
        ))
    }

    /// Looks up an action by its ground signature, e.g. `(STACK A B)`.
    pub fn action_by_signature(&self, text: &str) -> Result<ActionId, TaskError> {
        let atom = pddl::parse_atom(text).map_err(|_| TaskError::UnknownAction(text.trim().to_owned()))?;
        self.resolve_action(&atom)
    }

    pub fn resolve_action(&self, atom: &GroundAtom) -> Result<ActionId, TaskError> {
        let name = format!("{atom}");
        self.action_index
            .get(&name)
            .copied()
            .ok_or(TaskError::UnknownAction(name))
    }

    /// Builds a goal over this task's facts, validating every symbol.
    pub fn goal_from_atoms(&self, atoms: &[GroundAtom]) -> Result<Goal, TaskError> {
        let mut facts = Vec::new();
        let mut unreachable = Vec::new();
        for atom in atoms {
            let expected = *self
                .arity
                .get(&atom.predicate)
                .ok_or_else(|| TaskError::UnknownPredicate(atom.predicate.clone()))?;
            if expected != atom.args.len() {
                return Err(TaskError::Arity {
                    predicate: atom.predicate.clone(),
                    expected,
                    found: atom.args.len(),
                });
            }
            if let Some(o) = atom.args.iter().find(|o| !self.objects.contains(o.as_str())) {
                return Err(TaskError::UnknownObject(o.clone()));
            }
            match self.fact_id(atom) {
                Some(f) => facts.push(f),
                None => {
                    let name = format!("{atom}");
                    if !unreachable.contains(&name) {
                        unreachable.push(name);
                    }
                }
            }
        }
        Ok(Goal::new(self.num_facts(), facts, unreachable))
    }

    /// A copy of this instance with a different goal.
    pub fn with_goal(&self, goal: Goal) -> PlanningInstance {
        PlanningInstance { goal, ..self.clone() }
    }

    /// `(state ∖ del) ∪ add`, failing if a precondition is missing.
    pub fn apply(&self, state: &State, a: ActionId) -> Result<State, TaskError> {
        let action = self
            .actions
            .get(a.index())
            .ok_or_else(|| TaskError::UnknownAction(format!("#{}", a.0)))?;
        let missing: Vec<String> = action
            .pre
            .iter()
            .filter(|&&f| !state.contains(f))
            .map(|&f| self.fact_name(f).to_owned())
            .collect();
        if !missing.is_empty() {
            return Err(TaskError::PreconditionViolation {
                action: action.name.clone(),
                missing,
            });
        }
        Ok(state.successor(action))
    }

    pub fn validate_plan(&self, plan: &Plan) -> PlanValidation {
        self.validate_plan_for(plan, &self.goal)
    }

    pub fn validate_plan_for(&self, plan: &Plan, goal: &Goal) -> PlanValidation {
        let mut state = self.initial.clone();
        for (i, &a) in plan.actions.iter().enumerate() {
            match self.apply(&state, a) {
                Ok(next) => state = next,
                Err(_) => {
                    return PlanValidation {
                        valid: false,
                        failure: Some(i),
                    }
                }
            }
        }
        if goal.is_satisfied_by(&state) {
            PlanValidation {
                valid: true,
                failure: None,
            }
        } else {
            PlanValidation {
                valid: false,
                failure: Some(plan.len()),
            }
        }
    }

    /// One action signature per line.
    /// Comma-separated atoms, including any pruned ones.
    pub fn render_goal(&self, goal: &Goal) -> String {
        let mut parts: Vec<&str> = goal.facts().iter().map(|&f| self.fact_name(f)).collect();
        parts.extend(goal.unreachable_atoms().iter().map(String::as_str));
        parts.join(",")
    }

    pub fn render_plan(&self, plan: &Plan) -> String {
        let mut out = String::new();
        for &a in &plan.actions {
            out.push_str(&self.action(a).name);
            out.push('\n');
        }
        out
    }

    /// Parses one parenthesized ground action per line; blank lines and
    /// `;` comments are skipped.
    pub fn parse_plan(&self, text: &str) -> Result<Plan, TaskError> {
        let mut actions = Vec::new();
        for line in text.lines() {
            let line = line.split(';').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            actions.push(self.action_by_signature(line)?);
        }
        Ok(Plan::new(actions))
    }
}

impl fmt::Display for PlanningInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}: {} facts, {} actions",
            self.domain_name,
            self.problem_name,
            self.num_facts(),
            self.num_actions()
        )
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Param(usize),
    Object(u32),
}

struct LiftedAtom {
    pred: u32,
    slots: Vec<Slot>,
}

struct CompiledOperator {
    name: String,
    /// Candidate objects per parameter.
    candidates: Vec<Vec<u32>>,
    allowed: Vec<BitSet>,
    pre: Vec<LiftedAtom>,
    add: Vec<LiftedAtom>,
    del: Vec<LiftedAtom>,
}

/// Ground atom during grounding: `[predicate, arg0, arg1, ...]`.
type Key = Vec<u32>;

fn instantiate(atom: &LiftedAtom, binding: &[u32]) -> Key {
    let mut key = Vec::with_capacity(atom.slots.len() + 1);
    key.push(atom.pred);
    key.extend(atom.slots.iter().map(|s| match *s {
        Slot::Param(i) => binding[i],
        Slot::Object(o) => o,
    }));
    key
}

struct Grounder<'a> {
    ops: Vec<CompiledOperator>,
    reachable: HashSet<Key>,
    by_pred: Vec<Vec<Key>>,
    options: &'a GroundingOptions,
}

impl Grounder<'_> {
    /// Enumerates every binding of `op` whose preconditions are all reachable.
    fn bindings(&self, op: &CompiledOperator, out: &mut Vec<Vec<u32>>) {
        let mut binding = vec![u32::MAX; op.candidates.len()];
        self.match_pre(op, 0, &mut binding, out);
    }

    fn consistent(&self, op: &CompiledOperator, binding: &[u32], param: usize, obj: u32) -> bool {
        op.allowed[param].contains(obj as usize)
            && (!self.options.distinct_parameters || binding.iter().enumerate().all(|(j, &b)| j == param || b != obj))
    }

    fn match_pre(&self, op: &CompiledOperator, i: usize, binding: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let Some(atom) = op.pre.get(i) else {
            self.fill_free(op, 0, binding, out);
            return;
        };
        for key in &self.by_pred[atom.pred as usize] {
            let mut newly = Vec::new();
            let mut ok = true;
            for (slot, &obj) in atom.slots.iter().zip(&key[1..]) {
                match *slot {
                    Slot::Object(o) => ok = o == obj,
                    Slot::Param(p) if binding[p] == u32::MAX => {
                        ok = self.consistent(op, binding, p, obj);
                        if ok {
                            binding[p] = obj;
                            newly.push(p);
                        }
                    }
                    Slot::Param(p) => ok = binding[p] == obj,
                }
                if !ok {
                    break;
                }
            }
            if ok {
                self.match_pre(op, i + 1, binding, out);
            }
            for p in newly {
                binding[p] = u32::MAX;
            }
        }
    }

    fn fill_free(&self, op: &CompiledOperator, p: usize, binding: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if p == binding.len() {
            out.push(binding.clone());
            return;
        }
        if binding[p] != u32::MAX {
            self.fill_free(op, p + 1, binding, out);
            return;
        }
        for &obj in &op.candidates[p] {
            if self.consistent(op, binding, p, obj) {
                binding[p] = obj;
                self.fill_free(op, p + 1, binding, out);
                binding[p] = u32::MAX;
            }
        }
    }

    fn add_atom(&mut self, key: Key) {
        if !self.reachable.contains(&key) {
            self.by_pred[key[0] as usize].push(key.clone());
            self.reachable.insert(key);
        }
    }
}

/// Grounds `problem` over `domain`.
///
/// Only actions reachable from the initial state under delete relaxation are
/// produced, and only facts they (or the initial state) can make true are
/// interned. Fact and action ids follow declaration order, so the result is
/// deterministic.
pub fn ground(domain: &Domain, problem: &Problem, options: &GroundingOptions) -> Result<PlanningInstance, GroundError> {
    if problem.domain != domain.name {
        return Err(GroundError::DomainMismatch {
            domain: domain.name.clone(),
            problem: problem.domain.clone(),
        });
    }
    let mut objects: Vec<(&str, &str)> = domain
        .constants
        .iter()
        .map(|c| (c.name.as_str(), c.ty.as_str()))
        .collect();
    objects.extend(problem.objects.iter().map(|o| (o.name.as_str(), o.ty.as_str())));
    let object_id: HashMap<&str, u32> = objects.iter().enumerate().map(|(i, (n, _))| (*n, i as u32)).collect();
    let pred_id: HashMap<&str, u32> = domain
        .predicates
        .iter()
        .enumerate()
        .map(|(i, p)| (p.name.as_str(), i as u32))
        .collect();

    let mut ops = Vec::with_capacity(domain.operators.len());
    for op in &domain.operators {
        let candidates: Vec<Vec<u32>> = op
            .parameters
            .iter()
            .map(|p| {
                objects
                    .iter()
                    .enumerate()
                    .filter(|(_, (_, ty))| domain.is_subtype(ty, &p.ty))
                    .map(|(i, _)| i as u32)
                    .collect()
            })
            .collect();
        let allowed = candidates
            .iter()
            .map(|c| BitSet::from_indices(objects.len(), c.iter().map(|&o| o as usize)))
            .collect();
        let lift = |l: &pddl::Literal| LiftedAtom {
            pred: pred_id[l.predicate.as_str()],
            slots: l
                .terms
                .iter()
                .map(|t| match t {
                    Term::Var(v) => Slot::Param(op.parameters.iter().position(|p| &p.name == v).unwrap_or(0)),
                    Term::Const(c) => Slot::Object(object_id[c.as_str()]),
                })
                .collect(),
        };
        ops.push(CompiledOperator {
            name: op.name.clone(),
            candidates,
            allowed,
            pre: op.preconditions.iter().map(lift).collect(),
            add: op.add_effects.iter().map(lift).collect(),
            del: op.del_effects.iter().map(lift).collect(),
        });
    }

    let key_of = |a: &GroundAtom| -> Key {
        let mut k = vec![pred_id[a.predicate.as_str()]];
        k.extend(a.args.iter().map(|o| object_id[o.as_str()]));
        k
    };

    let mut g = Grounder {
        ops: Vec::new(),
        reachable: HashSet::new(),
        by_pred: vec![Vec::new(); domain.predicates.len()],
        options,
    };
    g.ops = ops;
    for a in &problem.init {
        g.add_atom(key_of(a));
    }

    // Relaxed fixpoint: ground every operator against the facts reached so
    // far until no new fact appears.
    let mut grounded: HashSet<(usize, Vec<u32>)> = HashSet::new();
    let mut order: Vec<(usize, Vec<u32>)> = Vec::new();
    loop {
        let mut fresh = Vec::new();
        for (oi, op) in g.ops.iter().enumerate() {
            let mut found = Vec::new();
            g.bindings(op, &mut found);
            for b in found {
                if grounded.contains(&(oi, b.clone())) {
                    continue;
                }
                for e in &op.add {
                    let k = instantiate(e, &b);
                    if !g.reachable.contains(&k) {
                        fresh.push(k);
                    }
                }
                grounded.insert((oi, b.clone()));
                order.push((oi, b));
                if order.len() > options.action_cap {
                    return Err(GroundError::ActionCap {
                        cap: options.action_cap,
                    });
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        for k in fresh {
            g.add_atom(k);
        }
    }

    // Dense fact ids in (predicate, arguments) order.
    let mut keys: Vec<Key> = g.reachable.iter().cloned().collect();
    keys.sort_unstable();
    let key_to_fact: HashMap<&Key, FactId> = keys.iter().enumerate().map(|(i, k)| (k, FactId(i as u32))).collect();
    let facts: Vec<GroundAtom> = keys
        .iter()
        .map(|k| GroundAtom {
            predicate: domain.predicates[k[0] as usize].name.clone(),
            args: k[1..].iter().map(|&o| objects[o as usize].0.to_owned()).collect(),
        })
        .collect();
    let fact_names: Vec<String> = facts.iter().map(|a| format!("{a}")).collect();
    let fact_index: HashMap<GroundAtom, FactId> = facts
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), FactId(i as u32)))
        .collect();

    order.sort_unstable();
    let mut actions = Vec::with_capacity(order.len());
    for (oi, b) in &order {
        let op = &g.ops[*oi];
        let ids = |atoms: &[LiftedAtom]| -> Vec<FactId> {
            let mut v: Vec<FactId> = atoms
                .iter()
                .filter_map(|a| key_to_fact.get(&instantiate(a, b)).copied())
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let pre = ids(&op.pre);
        let add = ids(&op.add);
        let mut del = ids(&op.del);
        del.retain(|f| add.binary_search(f).is_err());
        let mut name = format!("({}", op.name);
        for &o in b {
            name.push(' ');
            name.push_str(objects[o as usize].0);
        }
        name.push(')');
        actions.push(Action {
            id: ActionId(actions.len() as u32),
            name,
            pre,
            add,
            del,
        });
    }

    let n = facts.len();
    let mut achievers = vec![Vec::new(); n];
    let mut consumers = vec![Vec::new(); n];
    for a in &actions {
        for f in &a.add {
            achievers[f.index()].push(a.id);
        }
        for f in &a.pre {
            consumers[f.index()].push(a.id);
        }
    }
    let action_index = actions.iter().map(|a| (a.name.clone(), a.id)).collect();
    let initial = State(BitSet::from_indices(
        n,
        problem.init.iter().map(|a| fact_index[a].index()),
    ));

    let mut instance = PlanningInstance {
        domain_name: domain.name.clone(),
        problem_name: problem.name.clone(),
        facts,
        fact_names,
        fact_index,
        actions,
        action_index,
        initial,
        goal: Goal::new(n, Vec::new(), Vec::new()),
        achievers,
        consumers,
        arity: domain
            .predicates
            .iter()
            .map(|p| (p.name.clone(), p.params.len()))
            .collect(),
        objects: objects.iter().map(|(n, _)| (*n).to_owned()).collect(),
    };
    // Goal symbols were validated by the parser.
    instance.goal = instance
        .goal_from_atoms(&problem.goal)
        .unwrap_or_else(|_| Goal::new(n, Vec::new(), Vec::new()));
    Ok(instance)
}
