//! Landmark-based probabilistic goal recognition for STRIPS planning tasks.
//!
//! The crate is `no_std` (it needs `alloc`). It covers the whole algorithmic
//! pipeline: reading typed STRIPS PDDL, grounding it into a [`PlanningInstance`],
//! extracting fact landmarks per goal hypothesis, scoring observations against
//! those landmarks to obtain a posterior over goals, solving tasks with a small
//! forward-search planner, and estimating goal priors from repeated labeled
//! recognition episodes. File IO, concurrency and the command line live in the
//! `landrec` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bitset;
pub mod episodes;
pub mod landmarks;
pub mod metrics;
pub mod pddl;
pub mod planner;
pub mod ratio;
pub mod recognizer;
pub mod task;

#[cfg(test)]
mod testdata;

pub use bitset::BitSet;
pub use episodes::{
    estimate_prior, generate_samples, goal_similarity, make_distribution, project_observations, DistributionKind,
    GoalCounters, GoalDistribution, PriorEstimate, RepeatedProblem, Sample,
};
pub use landmarks::{
    achieved_landmarks, build_rpg, extract_landmarks, AchievedSet, LandmarkKind, LandmarkSet, RelaxedPlanningGraph,
};
pub use planner::{additive_heuristic, solve, solve_for, Heuristic, SearchConfig, SearchError, Strategy};
pub use ratio::Ratio;
pub use recognizer::{
    landmark_probability, likelihood, posterior, recognize, GoalPosterior, GoalRecognitionProblem, LandmarkModel,
    PriorDistribution, Recognition, RecognitionError,
};
pub use task::{
    ground, Action, ActionId, FactId, Goal, GroundError, GroundingOptions, Plan, PlanValidation, PlanningInstance,
    State, TaskError,
};
