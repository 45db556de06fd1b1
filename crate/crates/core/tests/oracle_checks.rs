mod oracle;

use landrec_core::pddl::{parse_atom_list, parse_domain, parse_problem};
use landrec_core::planner::solve_for;
use landrec_core::{
    achieved_landmarks, extract_landmarks, ground, Goal, GroundingOptions, Heuristic, LandmarkKind, PlanningInstance,
    SearchConfig, SearchError, Strategy,
};
use oracle::{goal_facts, replay, shortest_plan_length, StateGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BLOCKS: &str = "
(define (domain blocks)
  (:requirements :strips)
  (:predicates (on ?x ?y) (ontable ?x) (clear ?x) (handempty) (holding ?x))
  (:action pick-up :parameters (?x)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (holding ?x) (not (ontable ?x)) (not (clear ?x)) (not (handempty))))
  (:action put-down :parameters (?x)
    :precondition (holding ?x)
    :effect (and (ontable ?x) (clear ?x) (handempty) (not (holding ?x))))
  (:action stack :parameters (?x ?y)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (on ?x ?y) (clear ?x) (handempty) (not (holding ?x)) (not (clear ?y))))
  (:action unstack :parameters (?x ?y)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y) (not (on ?x ?y)) (not (clear ?x)) (not (handempty)))))";

// Two one-way corridors; the key opens a door that is only reachable from
// the lower corridor.
const CORRIDORS: &str = "
(define (domain corridors)
  (:requirements :strips :typing)
  (:types cell)
  (:predicates (at ?c - cell) (next ?a ?b - cell) (door ?c - cell) (key-at ?c - cell) (has-key) (open))
  (:action step :parameters (?a ?b - cell)
    :precondition (and (at ?a) (next ?a ?b))
    :effect (and (at ?b) (not (at ?a))))
  (:action take :parameters (?c - cell)
    :precondition (and (at ?c) (key-at ?c))
    :effect (and (has-key) (not (key-at ?c))))
  (:action unlock :parameters (?c - cell)
    :precondition (and (at ?c) (door ?c) (has-key))
    :effect (open)))";

fn tower_config(blocks: &[String], rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut order = blocks.to_vec();
    order.shuffle(rng);
    let mut atoms = Vec::new();
    let mut below: Option<&String> = None;
    for b in &order {
        match below {
            Some(x) if rng.random_bool(0.6) => atoms.push(format!("(on {b} {x})")),
            _ => {
                if let Some(x) = below {
                    atoms.push(format!("(clear {x})"));
                }
                atoms.push(format!("(ontable {b})"));
            }
        }
        below = Some(b);
    }
    atoms.push(format!("(clear {})", below.unwrap()));
    atoms
}

fn random_blocks(seed: u64) -> PlanningInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=4);
    let blocks: Vec<String> = (0..n).map(|i| format!("b{i}")).collect();
    let init = tower_config(&blocks, &mut rng);
    let mut goal: Vec<String> = tower_config(&blocks, &mut rng)
        .into_iter()
        .filter(|a| !a.starts_with("(clear"))
        .collect();
    goal.shuffle(&mut rng);
    goal.truncate(rng.random_range(1..=goal.len()));
    let text = format!(
        "(define (problem r{seed}) (:domain blocks) (:objects {}) (:init (handempty) {}) (:goal (and {})))",
        blocks.join(" "),
        init.join(" "),
        goal.join(" ")
    );
    let d = parse_domain(BLOCKS).unwrap();
    let p = parse_problem(&text, &d).unwrap();
    ground(&d, &p, &GroundingOptions::default()).unwrap()
}

fn corridors(goal: &str) -> PlanningInstance {
    let d = parse_domain(CORRIDORS).unwrap();
    let text = format!(
        "(define (problem c) (:domain corridors)
           (:objects s u1 u2 l1 l2 - cell)
           (:init (at s) (next s u1) (next u1 u2) (next s l1) (next l1 l2) (next l2 u2)
                  (key-at l1) (door l2))
           (:goal (and {goal})))"
    );
    let p = parse_problem(&text, &d).unwrap();
    ground(&d, &p, &GroundingOptions::default()).unwrap()
}

fn instances() -> Vec<PlanningInstance> {
    let mut v: Vec<PlanningInstance> = (0..60).map(random_blocks).collect();
    v.push(corridors("(open)"));
    v.push(corridors("(at u2)"));
    v.push(corridors("(at u2) (has-key)"));
    v
}

fn check_sound(t: &PlanningInstance, graph: &StateGraph, goal: &Goal) {
    let facts = goal_facts(goal).unwrap();
    match extract_landmarks(t, goal) {
        Err(_) => assert!(!graph.goal_reachable_avoiding(&facts, None)),
        Ok(set) => {
            assert!(graph.goal_reachable_avoiding(&facts, None), "{t}");
            let exact = graph.exact_landmarks(t.num_facts(), &facts);
            for (f, kind) in set.iter() {
                assert!(exact.contains(&f.0), "{} is not a landmark of {t}", t.fact_name(f));
                if kind == LandmarkKind::Derived {
                    assert!(!t.initial().contains(f));
                }
            }
            for &g in goal.facts() {
                assert!(set.contains(g));
            }
        }
    }
}

#[test]
fn landmarks_pass_the_pruning_check() {
    for t in instances() {
        let graph = StateGraph::explore(&t, 100_000).unwrap();
        check_sound(&t, &graph, t.goal());
    }
}

#[test]
fn corridor_landmarks_are_complete() {
    let t = corridors("(open)");
    let set = extract_landmarks(&t, t.goal()).unwrap();
    let mut names: Vec<&str> = set.facts().map(|f| t.fact_name(f)).collect();
    names.sort();
    assert_eq!(names, ["(at l1)", "(at l2)", "(has-key)", "(open)"]);
}

#[test]
fn uniform_cost_is_optimal_and_plans_replay() {
    for (i, t) in instances().into_iter().enumerate() {
        let goal = goal_facts(t.goal()).unwrap();
        let best = shortest_plan_length(&t, &goal, 100_000).unwrap();
        let ucs = SearchConfig {
            strategy: Strategy::UniformCost,
            seed: i as u64,
            ..Default::default()
        };
        match (best, solve_for(&t, t.goal(), &ucs)) {
            (Some(n), Ok(plan)) => {
                assert_eq!(plan.len(), n, "{t}");
                let idx: Vec<usize> = plan.actions.iter().map(|a| a.index()).collect();
                assert_eq!(replay(&t, &idx, &goal), Some(true));
            }
            (None, Err(SearchError::Unsolvable)) => {}
            (b, r) => panic!("{t}: oracle {b:?}, planner {r:?}"),
        }
        for heuristic in [Heuristic::Additive, Heuristic::GoalCount] {
            let cfg = SearchConfig {
                heuristic,
                seed: i as u64,
                ..Default::default()
            };
            match solve_for(&t, t.goal(), &cfg) {
                Ok(plan) => {
                    assert!(best.is_some_and(|n| plan.len() >= n));
                    let idx: Vec<usize> = plan.actions.iter().map(|a| a.index()).collect();
                    assert_eq!(replay(&t, &idx, &goal), Some(true));
                }
                Err(e) => assert_eq!((best, e), (None, SearchError::Unsolvable)),
            }
        }
    }
}

#[test]
fn full_plans_achieve_every_landmark() {
    for (i, t) in instances().into_iter().enumerate() {
        let Ok(set) = extract_landmarks(&t, t.goal()) else {
            continue;
        };
        let cfg = SearchConfig {
            seed: i as u64,
            ..Default::default()
        };
        let plan = solve_for(&t, t.goal(), &cfg).unwrap();
        let achieved = achieved_landmarks(&set, &t, &plan.actions).unwrap();
        assert_eq!(achieved.len(), set.len());
    }
}

#[test]
fn pruned_goal_atoms() {
    let t = random_blocks(1);
    let atoms = parse_atom_list("(on b0 b0)").unwrap();
    let g = t.goal_from_atoms(&atoms).unwrap();
    assert!(goal_facts(&g).is_none());
    assert!(extract_landmarks(&t, &g).is_err());
}
