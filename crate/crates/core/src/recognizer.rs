//! Posterior over goal hypotheses from landmark evidence.
//!
//! Each landmark of a goal is equally likely to be observed, so the
//! likelihood of the observations is the fraction of the goal's landmarks they
//! achieve. The posterior is that likelihood times the goal prior,
//! renormalized over all hypotheses.

use alloc::vec;
use alloc::vec::Vec;

use crate::landmarks::{achieved_landmarks, extract_landmarks, LandmarkSet};
use crate::ratio::Ratio;
use crate::task::{ActionId, Goal, PlanningInstance, TaskError};

/// Posteriors within this relative distance of the maximum are tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecognitionError {
    #[error("recognition problem has no goal hypotheses")]
    NoHypotheses,
    #[error("every goal hypothesis is unreachable from the initial state")]
    AllUnsolvable,
    #[error("true goal index {index} is outside the {count} hypotheses")]
    TrueGoalOutOfRange { index: usize, count: usize },
    #[error("prior covers {found} goals, expected {expected}")]
    PriorSize { expected: usize, found: usize },
    #[error("prior is not a probability distribution (sum {sum})")]
    InvalidPrior { sum: f64 },
    #[error(transparent)]
    Task(#[from] TaskError),
}

/// Prior goal probabilities, one per hypothesis in hypothesis order.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDistribution {
    probs: Vec<f64>,
}

impl PriorDistribution {
    pub fn uniform(n: usize) -> Self {
        PriorDistribution {
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Accepts non-negative entries that sum to 1 within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self, RecognitionError> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(RecognitionError::InvalidPrior { sum });
        }
        Ok(PriorDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }
}

/// ⟨task, hypotheses, observations⟩, optionally labeled with the true goal.
#[derive(Debug, Clone)]
pub struct GoalRecognitionProblem {
    pub instance: PlanningInstance,
    pub hypotheses: Vec<Goal>,
    pub observations: Vec<ActionId>,
    pub true_goal: Option<usize>,
}

impl GoalRecognitionProblem {
    pub fn new(
        instance: PlanningInstance,
        hypotheses: Vec<Goal>,
        observations: Vec<ActionId>,
        true_goal: Option<usize>,
    ) -> Result<Self, RecognitionError> {
        if hypotheses.is_empty() {
            return Err(RecognitionError::NoHypotheses);
        }
        if let Some(index) = true_goal.filter(|&i| i >= hypotheses.len()) {
            return Err(RecognitionError::TrueGoalOutOfRange {
                index,
                count: hypotheses.len(),
            });
        }
        if let Some(o) = observations.iter().find(|o| o.index() >= instance.num_actions()) {
            return Err(TaskError::UnknownAction(alloc::format!("#{}", o.0)).into());
        }
        Ok(GoalRecognitionProblem {
            instance,
            hypotheses,
            observations,
            true_goal,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalPosterior {
    pub probabilities: Vec<f64>,
    /// Hypotheses tied at the maximum, ascending.
    pub argmax: Vec<usize>,
    /// The evidence was zero for every hypothesis with nonzero prior, so the
    /// priors were returned unchanged.
    pub degenerate: bool,
}

impl GoalPosterior {
    pub fn is_top(&self, goal: usize) -> bool {
        self.argmax.contains(&goal)
    }
}

/// Probability of observing any single landmark of the set: `1/|L|`.
/// `None` for an empty set.
pub fn landmark_probability(landmarks: &LandmarkSet) -> Option<Ratio> {
    (!landmarks.is_empty()).then(|| Ratio::new(1, landmarks.len() as u64))
}

/// Fraction of `landmarks` achieved by the observations, or zero for an
/// unsolvable hypothesis (`None`).
pub fn likelihood(
    instance: &PlanningInstance,
    landmarks: Option<&LandmarkSet>,
    observations: &[ActionId],
) -> Result<Ratio, TaskError> {
    let Some(set) = landmarks.filter(|s| !s.is_empty()) else {
        return Ok(Ratio::ZERO);
    };
    let achieved = achieved_landmarks(set, instance, observations)?;
    Ok(Ratio::new(achieved.len() as u64, set.len() as u64))
}

fn argmax(probs: &[f64]) -> Vec<usize> {
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| max - p <= TIE_TOLERANCE * max.abs())
        .map(|(i, _)| i)
        .collect()
}

/// `P(G|O) = α · P(O|G) · P(G)` with `α = 1 / Σ P(O|G')·P(G')`.
pub fn posterior(likelihoods: &[Ratio], priors: &PriorDistribution) -> Result<GoalPosterior, RecognitionError> {
    if priors.len() != likelihoods.len() {
        return Err(RecognitionError::PriorSize {
            expected: likelihoods.len(),
            found: priors.len(),
        });
    }
    let weights: Vec<f64> = likelihoods
        .iter()
        .zip(priors.probs())
        .map(|(l, p)| l.to_f64() * p)
        .collect();
    let z: f64 = weights.iter().sum();
    let (probabilities, degenerate) = if z > 0.0 {
        (weights.iter().map(|w| w / z).collect::<Vec<_>>(), false)
    } else {
        (priors.probs().to_vec(), true)
    };
    Ok(GoalPosterior {
        argmax: argmax(&probabilities),
        probabilities,
        degenerate,
    })
}

/// Landmark sets for a fixed task and hypothesis list. Extraction does not
/// depend on observations, so one model serves any number of episodes.
#[derive(Debug, Clone)]
pub struct LandmarkModel {
    sets: Vec<Option<LandmarkSet>>,
}

impl LandmarkModel {
    pub fn extract(instance: &PlanningInstance, hypotheses: &[Goal]) -> Self {
        LandmarkModel {
            sets: hypotheses.iter().map(|g| extract_landmarks(instance, g).ok()).collect(),
        }
    }

    pub fn from_sets(sets: Vec<Option<LandmarkSet>>) -> Self {
        LandmarkModel { sets }
    }

    /// `None` marks an unsolvable hypothesis.
    pub fn sets(&self) -> &[Option<LandmarkSet>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn likelihoods(&self, instance: &PlanningInstance, observations: &[ActionId]) -> Result<Vec<Ratio>, TaskError> {
        self.sets
            .iter()
            .map(|s| likelihood(instance, s.as_ref(), observations))
            .collect()
    }

    pub fn recognize(
        &self,
        instance: &PlanningInstance,
        observations: &[ActionId],
        priors: Option<&PriorDistribution>,
    ) -> Result<Recognition, RecognitionError> {
        if self.sets.is_empty() {
            return Err(RecognitionError::NoHypotheses);
        }
        if self.sets.iter().all(Option::is_none) {
            return Err(RecognitionError::AllUnsolvable);
        }
        let priors = match priors {
            Some(p) => p.clone(),
            None => PriorDistribution::uniform(self.sets.len()),
        };
        let likelihoods = self.likelihoods(instance, observations)?;
        let posterior = posterior(&likelihoods, &priors)?;
        Ok(Recognition {
            posterior,
            likelihoods,
            priors,
            landmark_counts: self
                .sets
                .iter()
                .map(|s| s.as_ref().map_or(0, LandmarkSet::len))
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recognition {
    pub posterior: GoalPosterior,
    /// `P(O|G)` per hypothesis.
    pub likelihoods: Vec<Ratio>,
    pub priors: PriorDistribution,
    /// `|L_G|` per hypothesis; zero for unsolvable ones.
    pub landmark_counts: Vec<usize>,
}

/// Extracts landmarks, scores the observations and returns the posterior.
/// Uniform priors are used when none are given.
pub fn recognize(
    problem: &GoalRecognitionProblem,
    priors: Option<&PriorDistribution>,
) -> Result<Recognition, RecognitionError> {
    LandmarkModel::extract(&problem.instance, &problem.hypotheses).recognize(
        &problem.instance,
        &problem.observations,
        priors,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_atom_list, parse_domain, parse_problem};
    use crate::task::{ground, GroundingOptions};
    use crate::testdata::{BLOCKS, BLOCKS_3_TOWER};

    fn r(n: u64, d: u64) -> Ratio {
        Ratio::new(n, d)
    }

    #[test]
    fn two_goals_half_and_quarter() {
        let p = posterior(&[r(1, 2), r(1, 4)], &PriorDistribution::uniform(2)).unwrap();
        assert!((p.probabilities[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.probabilities[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.argmax, [0]);
        assert!(!p.degenerate);
    }

    #[test]
    fn equal_likelihoods_return_priors() {
        let priors = PriorDistribution::new(vec![0.7, 0.2, 0.1]).unwrap();
        let p = posterior(&[r(1, 3), r(2, 6), r(3, 9)], &priors).unwrap();
        for (a, b) in p.probabilities.iter().zip(priors.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_evidence_is_degenerate() {
        let p = posterior(&[Ratio::ZERO; 4], &PriorDistribution::uniform(4)).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.probabilities, [0.25; 4]);
        assert_eq!(p.argmax, [0, 1, 2, 3]);
    }

    #[test]
    fn ties_within_relative_tolerance() {
        let priors = PriorDistribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        // 0.2 · (1/2) == 0.1 · 1 exactly in value, but not in float bits after scaling
        let p = posterior(&[r(1, 1), r(1, 2), Ratio::ZERO], &priors).unwrap();
        assert_eq!(p.argmax, [0, 1]);
    }

    #[test]
    fn prior_validation() {
        assert!(PriorDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(PriorDistribution::new(vec![1.5, -0.5]).is_err());
        assert_eq!(
            posterior(&[r(1, 2)], &PriorDistribution::uniform(2)),
            Err(RecognitionError::PriorSize { expected: 1, found: 2 })
        );
    }

    #[test]
    fn landmark_probability_is_uniform() {
        let d = parse_domain(BLOCKS).unwrap();
        let p = parse_problem(BLOCKS_3_TOWER, &d).unwrap();
        let t = ground(&d, &p, &GroundingOptions::default()).unwrap();
        let l = extract_landmarks(&t, t.goal()).unwrap();
        let each = landmark_probability(&l).unwrap();
        assert_eq!(each, r(1, l.len() as u64));
        // Summing |L| copies of 1/|L| gives exactly one.
        assert_eq!(Ratio::new(each.numer() * l.len() as u64, each.denom()), Ratio::ONE);
    }

    #[test]
    fn recognize_tower_against_alternative() {
        let d = parse_domain(BLOCKS).unwrap();
        let p = parse_problem(BLOCKS_3_TOWER, &d).unwrap();
        let t = ground(&d, &p, &GroundingOptions::default()).unwrap();
        let other = t.goal_from_atoms(&parse_atom_list("(on c a)").unwrap()).unwrap();
        let plan = t
            .parse_plan("(pick-up b)\n(stack b c)\n(pick-up a)\n(stack a b)")
            .unwrap();
        let problem =
            GoalRecognitionProblem::new(t.clone(), vec![t.goal().clone(), other], plan.actions, Some(0)).unwrap();
        let rec = recognize(&problem, None).unwrap();
        assert_eq!(rec.likelihoods[0], Ratio::ONE);
        assert_eq!(rec.posterior.argmax, [0]);
        assert_eq!(rec.priors.probs(), [0.5, 0.5]);

        let empty = GoalRecognitionProblem::new(t.clone(), vec![t.goal().clone()], vec![], None).unwrap();
        let rec = recognize(&empty, None).unwrap();
        assert_eq!(rec.likelihoods[0], Ratio::ZERO);
        assert!(rec.posterior.degenerate);
    }

    #[test]
    fn problem_invariants() {
        let d = parse_domain(BLOCKS).unwrap();
        let p = parse_problem(BLOCKS_3_TOWER, &d).unwrap();
        let t = ground(&d, &p, &GroundingOptions::default()).unwrap();
        assert!(matches!(
            GoalRecognitionProblem::new(t.clone(), vec![], vec![], None),
            Err(RecognitionError::NoHypotheses)
        ));
        assert!(matches!(
            GoalRecognitionProblem::new(t.clone(), vec![t.goal().clone()], vec![], Some(1)),
            Err(RecognitionError::TrueGoalOutOfRange { .. })
        ));
        let unreachable = t.goal_from_atoms(&parse_atom_list("(on a a)").unwrap()).unwrap();
        let problem = GoalRecognitionProblem::new(t.clone(), vec![unreachable], vec![], None).unwrap();
        assert_eq!(recognize(&problem, None).unwrap_err(), RecognitionError::AllUnsolvable);
    }
}
