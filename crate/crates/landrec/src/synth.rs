//! Generators for small recognition tasks in four benchmark-style domains.

use std::fmt;

use landrec_core::pddl::{parse_atom_list, parse_domain, parse_problem};
use landrec_core::planner::solve_for;
use landrec_core::{ground, Goal, GroundingOptions, PlanningInstance, SearchConfig};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{fill_template, CaseFiles, LoadError, Meta};
use landrec_core::episodes::{derive_seed, project_observations};

pub const BLOCKS_WORLD: &str = "(define (domain blocks-world)
  (:requirements :strips)
  (:predicates (on ?x ?y) (ontable ?x) (clear ?x) (handempty) (holding ?x))
  (:action pick-up
    :parameters (?x)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (holding ?x) (not (ontable ?x)) (not (clear ?x)) (not (handempty))))
  (:action put-down
    :parameters (?x)
    :precondition (holding ?x)
    :effect (and (ontable ?x) (clear ?x) (handempty) (not (holding ?x))))
  (:action stack
    :parameters (?x ?y)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (on ?x ?y) (clear ?x) (handempty) (not (holding ?x)) (not (clear ?y))))
  (:action unstack
    :parameters (?x ?y)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y) (not (on ?x ?y)) (not (clear ?x)) (not (handempty)))))
";

pub const EASY_IPC_GRID: &str = "(define (domain easy-ipc-grid)
  (:requirements :strips :typing)
  (:types place key shape)
  (:predicates (conn ?x ?y - place) (key-shape ?k - key ?s - shape) (lock-shape ?x - place ?s - shape)
               (at ?k - key ?x - place) (at-robot ?x - place) (locked ?x - place) (open ?x - place)
               (holding ?k - key) (arm-empty))
  (:action unlock
    :parameters (?curpos ?lockpos - place ?key - key ?shape - shape)
    :precondition (and (conn ?curpos ?lockpos) (key-shape ?key ?shape) (lock-shape ?lockpos ?shape)
                       (at-robot ?curpos) (locked ?lockpos) (holding ?key))
    :effect (and (open ?lockpos) (not (locked ?lockpos))))
  (:action move
    :parameters (?curpos ?nextpos - place)
    :precondition (and (at-robot ?curpos) (conn ?curpos ?nextpos) (open ?nextpos))
    :effect (and (at-robot ?nextpos) (not (at-robot ?curpos))))
  (:action pickup
    :parameters (?curpos - place ?key - key)
    :precondition (and (at-robot ?curpos) (at ?key ?curpos) (arm-empty))
    :effect (and (holding ?key) (not (at ?key ?curpos)) (not (arm-empty))))
  (:action putdown
    :parameters (?curpos - place ?key - key)
    :precondition (and (at-robot ?curpos) (holding ?key))
    :effect (and (arm-empty) (at ?key ?curpos) (not (holding ?key)))))
";

pub const LOGISTICS: &str = "(define (domain logistics)
  (:requirements :strips :typing)
  (:types truck airplane - vehicle
          package vehicle - physobj
          airport location - place
          city place physobj - object)
  (:predicates (in-city ?loc - place ?city - city) (at ?obj - physobj ?loc - place) (in ?pkg - package ?veh - vehicle))
  (:action load-truck
    :parameters (?pkg - package ?truck - truck ?loc - place)
    :precondition (and (at ?truck ?loc) (at ?pkg ?loc))
    :effect (and (in ?pkg ?truck) (not (at ?pkg ?loc))))
  (:action load-airplane
    :parameters (?pkg - package ?airplane - airplane ?loc - place)
    :precondition (and (at ?pkg ?loc) (at ?airplane ?loc))
    :effect (and (in ?pkg ?airplane) (not (at ?pkg ?loc))))
  (:action unload-truck
    :parameters (?pkg - package ?truck - truck ?loc - place)
    :precondition (and (at ?truck ?loc) (in ?pkg ?truck))
    :effect (and (at ?pkg ?loc) (not (in ?pkg ?truck))))
  (:action unload-airplane
    :parameters (?pkg - package ?airplane - airplane ?loc - place)
    :precondition (and (in ?pkg ?airplane) (at ?airplane ?loc))
    :effect (and (at ?pkg ?loc) (not (in ?pkg ?airplane))))
  (:action drive-truck
    :parameters (?truck - truck ?loc-from - place ?loc-to - place ?city - city)
    :precondition (and (at ?truck ?loc-from) (in-city ?loc-from ?city) (in-city ?loc-to ?city))
    :effect (and (at ?truck ?loc-to) (not (at ?truck ?loc-from))))
  (:action fly-airplane
    :parameters (?airplane - airplane ?loc-from - airport ?loc-to - airport)
    :precondition (at ?airplane ?loc-from)
    :effect (and (at ?airplane ?loc-to) (not (at ?airplane ?loc-from)))))
";

pub const INTRUSION_DETECTION: &str = "(define (domain intrusion-detection)
  (:requirements :strips :typing)
  (:types host)
  (:predicates (recon-performed ?h - host) (access-obtained ?h - host) (root-obtained ?h - host)
               (information-gathered ?h - host) (files-downloaded ?h - host) (files-modified ?h - host)
               (logs-deleted ?h - host) (trojan-installed ?h - host) (services-stopped ?h - host)
               (vandalized ?h - host) (data-stolen ?h - host) (backdoor-open ?h - host)
               (service-denied ?h - host) (files-wiped ?h - host))
  (:action recon
    :parameters (?h - host)
    :precondition (and)
    :effect (recon-performed ?h))
  (:action break-into
    :parameters (?h - host)
    :precondition (recon-performed ?h)
    :effect (access-obtained ?h))
  (:action gain-root
    :parameters (?h - host)
    :precondition (access-obtained ?h)
    :effect (root-obtained ?h))
  (:action gather-information
    :parameters (?h - host)
    :precondition (access-obtained ?h)
    :effect (information-gathered ?h))
  (:action download-files
    :parameters (?h - host)
    :precondition (and (access-obtained ?h) (information-gathered ?h))
    :effect (files-downloaded ?h))
  (:action modify-files
    :parameters (?h - host)
    :precondition (root-obtained ?h)
    :effect (files-modified ?h))
  (:action delete-logs
    :parameters (?h - host)
    :precondition (root-obtained ?h)
    :effect (logs-deleted ?h))
  (:action install-trojan
    :parameters (?h - host)
    :precondition (root-obtained ?h)
    :effect (trojan-installed ?h))
  (:action stop-services
    :parameters (?h - host)
    :precondition (root-obtained ?h)
    :effect (services-stopped ?h))
  (:action vandalize
    :parameters (?h - host)
    :precondition (and (files-modified ?h) (logs-deleted ?h))
    :effect (vandalized ?h))
  (:action steal-data
    :parameters (?h - host)
    :precondition (and (files-downloaded ?h) (logs-deleted ?h))
    :effect (data-stolen ?h))
  (:action open-backdoor
    :parameters (?h - host)
    :precondition (and (trojan-installed ?h) (logs-deleted ?h))
    :effect (backdoor-open ?h))
  (:action deny-service
    :parameters (?h - host)
    :precondition (and (services-stopped ?h) (information-gathered ?h))
    :effect (service-denied ?h))
  (:action wipe-files
    :parameters (?h - host)
    :precondition (and (files-modified ?h) (services-stopped ?h))
    :effect (files-wiped ?h)))
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum SynthDomain {
    BlocksWorld,
    EasyIpcGrid,
    Logistics,
    IntrusionDetection,
}

impl SynthDomain {
    pub const ALL: [SynthDomain; 4] = [
        SynthDomain::BlocksWorld,
        SynthDomain::EasyIpcGrid,
        SynthDomain::Logistics,
        SynthDomain::IntrusionDetection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SynthDomain::BlocksWorld => "blocks-world",
            SynthDomain::EasyIpcGrid => "easy-ipc-grid",
            SynthDomain::Logistics => "logistics",
            SynthDomain::IntrusionDetection => "intrusion-detection",
        }
    }

    pub fn pddl(self) -> &'static str {
        match self {
            SynthDomain::BlocksWorld => BLOCKS_WORLD,
            SynthDomain::EasyIpcGrid => EASY_IPC_GRID,
            SynthDomain::Logistics => LOGISTICS,
            SynthDomain::IntrusionDetection => INTRUSION_DETECTION,
        }
    }
}

impl fmt::Display for SynthDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Problem size. `Tiny` tasks have a few hundred states at most.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scale {
    Tiny,
    Desk,
}

#[derive(Debug, thiserror::Error)]
#[error("could not generate a {domain} task from seed {seed}: {reason}")]
pub struct SynthError {
    pub domain: SynthDomain,
    pub seed: u64,
    pub reason: String,
}

/// A task with a goal placeholder and its candidate goals.
#[derive(Debug, Clone)]
pub struct SynthTask {
    pub domain: SynthDomain,
    pub name: String,
    /// Problem text whose goal is `(and <HYPOTHESIS>)`.
    pub template: String,
    /// Each hypothesis as a list of ground atoms.
    pub hypotheses: Vec<Vec<String>>,
}

impl SynthTask {
    pub fn domain_pddl(&self) -> &'static str {
        self.domain.pddl()
    }

    pub fn hypothesis_line(&self, i: usize) -> String {
        self.hypotheses[i].join(",")
    }

    /// Contents of a `hyps.dat` file.
    pub fn hyps_dat(&self) -> String {
        (0..self.hypotheses.len())
            .map(|i| self.hypothesis_line(i) + "\n")
            .collect()
    }

    /// The template with hypothesis `i` as its goal.
    pub fn problem_text(&self, i: usize) -> String {
        self.template.replace("<HYPOTHESIS>", &self.hypotheses[i].join(" "))
    }

    /// Grounds the template with an empty goal.
    pub fn instance(&self) -> PlanningInstance {
        let d = parse_domain(self.domain_pddl()).expect("built-in domain parses");
        let p = parse_problem(&fill_template(&self.template), &d).expect("generated problem parses");
        ground(&d, &p, &GroundingOptions::default()).expect("generated problem grounds")
    }

    pub fn goals(&self, instance: &PlanningInstance) -> Vec<Goal> {
        self.hypotheses
            .iter()
            .map(|h| goal_of(instance, h).expect("generated hypothesis is well-formed"))
            .collect()
    }
}

fn goal_of(instance: &PlanningInstance, atoms: &[String]) -> Option<Goal> {
    let atoms = parse_atom_list(&atoms.join(",")).ok()?;
    instance.goal_from_atoms(&atoms).ok()
}

struct Draft {
    objects: String,
    init: Vec<String>,
    candidates: Vec<Vec<String>>,
    goals: (usize, usize),
}

fn template(domain: SynthDomain, name: &str, objects: &str, init: &[String]) -> String {
    format!(
        "(define (problem {name})\n  (:domain {})\n  (:objects {objects})\n  (:init {})\n  (:goal (and <HYPOTHESIS>)))\n",
        domain.name(),
        init.join(" ")
    )
}

/// Draws a task. Candidate goals are kept only when they are solvable, not
/// already true, and neither a subset nor a superset of a kept goal.
pub fn generate_task(domain: SynthDomain, scale: Scale, seed: u64) -> Result<SynthTask, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draft = match domain {
        SynthDomain::BlocksWorld => blocks(scale, &mut rng),
        SynthDomain::EasyIpcGrid => grid(scale, &mut rng),
        SynthDomain::Logistics => logistics(scale, &mut rng),
        SynthDomain::IntrusionDetection => intrusion(scale, &mut rng),
    };
    let name = format!("{}-{seed}", domain.name());
    let mut task = SynthTask {
        domain,
        template: template(domain, &name, &draft.objects, &draft.init),
        name,
        hypotheses: Vec::new(),
    };
    let instance = task.instance();
    let want = rng.random_range(draft.goals.0..=draft.goals.1);
    let mut kept: Vec<Goal> = Vec::new();
    let search = SearchConfig {
        node_cap: 200_000,
        ..Default::default()
    };
    for mut atoms in draft.candidates {
        if kept.len() == want {
            break;
        }
        atoms.sort();
        atoms.dedup();
        let Some(goal) = goal_of(&instance, &atoms) else {
            continue;
        };
        if goal.is_satisfied_by(instance.initial()) || goal.has_unreachable_atoms() {
            continue;
        }
        let nested = kept
            .iter()
            .any(|k| k.as_set().is_subset(goal.as_set()) || goal.as_set().is_subset(k.as_set()));
        if nested || solve_for(&instance, &goal, &search).is_err() {
            continue;
        }
        kept.push(goal);
        task.hypotheses.push(atoms);
    }
    if task.hypotheses.len() < draft.goals.0 {
        return Err(SynthError {
            domain,
            seed,
            reason: format!("only {} usable goals", task.hypotheses.len()),
        });
    }
    Ok(task)
}

fn blocks_config(names: &[String], rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut order = names.to_vec();
    order.shuffle(rng);
    let mut atoms = Vec::new();
    for (i, b) in order.iter().enumerate() {
        if i > 0 && rng.random_bool(0.5) {
            atoms.push(format!("(on {b} {})", order[i - 1]));
        } else {
            if i > 0 {
                atoms.push(format!("(clear {})", order[i - 1]));
            }
            atoms.push(format!("(ontable {b})"));
        }
    }
    atoms.push(format!("(clear {})", order[order.len() - 1]));
    atoms
}

fn blocks(scale: Scale, rng: &mut ChaCha8Rng) -> Draft {
    let (n, goals, heights) = match scale {
        Scale::Tiny => (rng.random_range(2..=4), (1, 1), 2..=3),
        Scale::Desk => (rng.random_range(5..=6), (8, 10), 2..=4),
    };
    let names: Vec<String> = (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let mut init = vec!["(handempty)".to_owned()];
    init.extend(blocks_config(&names, rng));
    let candidates = (0..200)
        .map(|_| {
            let h = rng.random_range(heights.clone()).min(n);
            let mut word = names.clone();
            word.shuffle(rng);
            word.truncate(h);
            let mut atoms = vec![format!("(clear {})", word[0]), format!("(ontable {})", word[h - 1])];
            atoms.extend(word.windows(2).map(|w| format!("(on {} {})", w[0], w[1])));
            atoms
        })
        .collect();
    Draft {
        objects: names.join(" "),
        init,
        candidates,
        goals,
    }
}

fn grid(scale: Scale, rng: &mut ChaCha8Rng) -> Draft {
    let (w, h, keys, locks, goals) = match scale {
        Scale::Tiny => (3, 2, 1, 1, (1, 1)),
        Scale::Desk => (4, 4, 2, 2, (8, 10)),
    };
    let place = |x: usize, y: usize| format!("p{x}-{y}");
    let mut cells: Vec<String> = (0..w)
        .flat_map(|x| (0..h).map(move |y| (x, y)))
        .map(|(x, y)| place(x, y))
        .collect();
    let mut init = vec!["(arm-empty)".to_owned()];
    for x in 0..w {
        for y in 0..h {
            if x + 1 < w {
                init.push(format!("(conn {} {})", place(x, y), place(x + 1, y)));
                init.push(format!("(conn {} {})", place(x + 1, y), place(x, y)));
            }
            if y + 1 < h {
                init.push(format!("(conn {} {})", place(x, y), place(x, y + 1)));
                init.push(format!("(conn {} {})", place(x, y + 1), place(x, y)));
            }
        }
    }
    let all = cells.clone();
    cells.shuffle(rng);
    let start = cells[0].clone();
    init.push(format!("(at-robot {start})"));
    let locked = &cells[1..1 + locks];
    let free = &cells[1 + locks..];
    for c in &all {
        if locked.contains(c) {
            let s = rng.random_range(0..2);
            init.push(format!("(locked {c})"));
            init.push(format!("(lock-shape {c} s{s})"));
        } else {
            init.push(format!("(open {c})"));
        }
    }
    let mut key_at = Vec::new();
    for k in 0..keys {
        let s = rng.random_range(0..2);
        let at = free.choose(rng).unwrap().clone();
        init.push(format!("(key-shape k{k} s{s})"));
        init.push(format!("(at k{k} {at})"));
        key_at.push(at);
    }
    let candidates = (0..400)
        .map(|_| {
            let k = rng.random_range(0..keys);
            let p = all.choose(rng).unwrap();
            vec![format!("(at k{k} {p})")]
        })
        .filter(|g| {
            !key_at
                .iter()
                .enumerate()
                .any(|(k, at)| g[0] == format!("(at k{k} {at})"))
        })
        .collect();
    let keys_decl: Vec<String> = (0..keys).map(|k| format!("k{k}")).collect();
    Draft {
        objects: format!("{} - place {} - key s0 s1 - shape", all.join(" "), keys_decl.join(" ")),
        init,
        candidates,
        goals,
    }
}

fn logistics(scale: Scale, rng: &mut ChaCha8Rng) -> Draft {
    let (cities, packages, goals) = match scale {
        Scale::Tiny => (2, 1, (1, 1)),
        Scale::Desk => (4, 2, (8, 10)),
    };
    let mut init = Vec::new();
    let mut places = Vec::new();
    for c in 0..cities {
        init.push(format!("(in-city a{c} c{c})"));
        init.push(format!("(in-city l{c} c{c})"));
        let t = if rng.random_bool(0.5) { "a" } else { "l" };
        init.push(format!("(at t{c} {t}{c})"));
        places.push(format!("a{c}"));
        places.push(format!("l{c}"));
    }
    init.push(format!("(at pl0 a{})", rng.random_range(0..cities)));
    let mut origin = Vec::new();
    for p in 0..packages {
        let at = places.choose(rng).unwrap().clone();
        init.push(format!("(at o{p} {at})"));
        origin.push(at);
    }
    let mut candidates: Vec<Vec<String>> = vec![vec![]];
    for p in 0..packages {
        candidates = candidates
            .into_iter()
            .flat_map(|g| {
                let origin = &origin[p];
                (0..cities)
                    .map(|c| format!("l{c}"))
                    .filter(move |l| l != origin)
                    .map(move |l| {
                        let mut g = g.clone();
                        g.push(format!("(at o{p} {l})"));
                        g
                    })
            })
            .collect();
    }
    candidates.shuffle(rng);
    let decl = |prefix: &str, n: usize| (0..n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(" ");
    Draft {
        objects: format!(
            "{} - city {} - airport {} - location {} - truck pl0 - airplane {} - package",
            decl("c", cities),
            decl("a", cities),
            decl("l", cities),
            decl("t", cities),
            decl("o", packages)
        ),
        init,
        candidates,
        goals,
    }
}

const INTRUSION_GOALS: [&str; 5] = [
    "vandalized",
    "data-stolen",
    "backdoor-open",
    "service-denied",
    "files-wiped",
];

fn intrusion(scale: Scale, rng: &mut ChaCha8Rng) -> Draft {
    let (hosts, goals) = match scale {
        Scale::Tiny => (1, (1, 1)),
        Scale::Desk => (2, (8, 10)),
    };
    let names: Vec<String> = (0..hosts).map(|h| format!("h{h}")).collect();
    let mut candidates: Vec<Vec<String>> = names
        .iter()
        .flat_map(|h| INTRUSION_GOALS.iter().map(move |g| vec![format!("({g} {h})")]))
        .collect();
    candidates.shuffle(rng);
    Draft {
        objects: format!("{} - host", names.join(" ")),
        init: Vec::new(),
        candidates,
        goals,
    }
}

/// Problems in which the agent pursues hypothesis `true_goal` of `task`,
/// one per observability level. Lower levels observe subsets of the
/// actions seen at higher ones.
pub fn task_cases(task: &SynthTask, true_goal: usize, seed: u64, levels: &[u32]) -> Vec<(String, CaseFiles)> {
    let instance = task.instance();
    let goal = &task.goals(&instance)[true_goal];
    let search = SearchConfig {
        seed,
        node_cap: 200_000,
        ..Default::default()
    };
    let plan = solve_for(&instance, goal, &search).expect("generated hypotheses are solvable");
    levels
        .iter()
        .map(|&level| {
            let obs = project_observations(&plan, level, seed).expect("valid observability level");
            let mut meta = Meta::default();
            meta.set("domain", task.domain.name());
            meta.set("obs_level", level);
            let files = CaseFiles {
                domain: task.domain_pddl().to_owned(),
                problem: task.template.clone(),
                hyps: task.hyps_dat(),
                obs: obs.iter().map(|&a| format!("{}\n", instance.action(a).name)).collect(),
                real_hyp: task.hypothesis_line(true_goal) + "\n",
                meta,
            };
            (format!("{}/{}/{level:03}", task.domain.name(), task.name), files)
        })
        .collect()
}

/// `per_domain` tasks for each domain, each observed at every level in
/// `levels`, with a random true goal per task.
pub fn synth_dataset(
    domains: &[SynthDomain],
    per_domain: usize,
    scale: Scale,
    levels: &[u32],
    seed: u64,
) -> Vec<(String, CaseFiles)> {
    let mut out = Vec::new();
    for &d in domains {
        let mut made = 0;
        let mut attempt = 0u64;
        while made < per_domain {
            let task_seed = derive_seed(seed, d as u64 + 1, attempt);
            attempt += 1;
            let Ok(task) = generate_task(d, scale, task_seed) else {
                continue;
            };
            let true_goal = ChaCha8Rng::seed_from_u64(task_seed).random_range(0..task.hypotheses.len());
            out.extend(task_cases(&task, true_goal, task_seed, levels));
            made += 1;
        }
    }
    out
}

/// Writes [`synth_dataset`] under `dir`, one directory per problem.
pub fn write_dataset(dir: &std::path::Path, cases: &[(String, CaseFiles)]) -> Result<(), LoadError> {
    for (name, files) in cases {
        files.write(&dir.join(name))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_domain_generates_desk_tasks() {
        for d in SynthDomain::ALL {
            for seed in 0..3 {
                let t = generate_task(d, Scale::Desk, seed).unwrap();
                assert!((8..=10).contains(&t.hypotheses.len()), "{d}: {}", t.hypotheses.len());
                let inst = t.instance();
                assert_eq!(t.goals(&inst).len(), t.hypotheses.len());
            }
        }
    }

    #[test]
    fn tiny_tasks_have_one_goal() {
        for d in SynthDomain::ALL {
            let t = generate_task(d, Scale::Tiny, 5).unwrap();
            assert_eq!(t.hypotheses.len(), 1);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_task(SynthDomain::Logistics, Scale::Desk, 9).unwrap();
        let b = generate_task(SynthDomain::Logistics, Scale::Desk, 9).unwrap();
        assert_eq!(a.template, b.template);
        assert_eq!(a.hypotheses, b.hypotheses);
    }
}
