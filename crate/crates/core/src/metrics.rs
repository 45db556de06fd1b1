//! Evaluation metrics over recognition outcomes.

use alloc::vec::Vec;

use crate::episodes::GoalDistribution;
use crate::recognizer::{GoalRecognitionProblem, LandmarkModel, PriorDistribution, RecognitionError};
use crate::task::{ActionId, PlanningInstance};

/// The top goals of one recognition and the goal actually pursued.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub argmax: Vec<usize>,
    pub true_goal: usize,
}

impl Outcome {
    pub fn correct(&self) -> bool {
        self.argmax.contains(&self.true_goal)
    }
}

/// Fraction of outcomes whose true goal is among the top goals. `None` when
/// there are no outcomes.
pub fn accuracy(results: &[Outcome]) -> Option<f64> {
    if results.is_empty() {
        return None;
    }
    Some(results.iter().filter(|o| o.correct()).count() as f64 / results.len() as f64)
}

/// Mean number of top goals.
pub fn spread(results: &[Outcome]) -> Option<f64> {
    if results.is_empty() {
        return None;
    }
    Some(results.iter().map(|o| o.argmax.len()).sum::<usize>() as f64 / results.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("distributions cover {left} and {right} goals")]
pub struct SupportMismatch {
    pub left: usize,
    pub right: usize,
}

/// Largest absolute difference between generating and estimated
/// probabilities.
pub fn max_norm(truth: &GoalDistribution, estimated: &PriorDistribution) -> Result<f64, SupportMismatch> {
    max_abs_diff(truth.probs(), estimated.probs())
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> Result<f64, SupportMismatch> {
    if a.len() != b.len() {
        return Err(SupportMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Change in the true goal's posterior when `priors` replace uniform priors,
/// using one landmark model for both.
pub fn delta_with(
    model: &LandmarkModel,
    instance: &PlanningInstance,
    observations: &[ActionId],
    true_goal: usize,
    priors: &PriorDistribution,
) -> Result<f64, RecognitionError> {
    let count = model.len();
    if true_goal >= count {
        return Err(RecognitionError::TrueGoalOutOfRange {
            index: true_goal,
            count,
        });
    }
    let with = model.recognize(instance, observations, Some(priors))?;
    let without = model.recognize(instance, observations, None)?;
    Ok(with.posterior.probabilities[true_goal] - without.posterior.probabilities[true_goal])
}

/// [`delta_with`] for a labeled problem; `None` if the problem has no label.
pub fn delta(problem: &GoalRecognitionProblem, priors: &PriorDistribution) -> Result<Option<f64>, RecognitionError> {
    let Some(g) = problem.true_goal else {
        return Ok(None);
    };
    let model = LandmarkModel::extract(&problem.instance, &problem.hypotheses);
    delta_with(&model, &problem.instance, &problem.observations, g, priors).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn o(argmax: &[usize], t: usize) -> Outcome {
        Outcome {
            argmax: argmax.to_vec(),
            true_goal: t,
        }
    }

    #[test]
    fn accuracy_and_spread() {
        assert_eq!(accuracy(&[]), None);
        let r = [o(&[0], 0), o(&[1], 1), o(&[0, 1, 2], 2), o(&[1], 0)];
        assert_eq!(accuracy(&r), Some(0.75));
        assert_eq!(accuracy(&r[3..]), Some(0.0));
        assert_eq!(spread(&[o(&[0], 0), o(&[0, 1, 2], 1)]), Some(2.0));
        assert_eq!(spread(&[o(&[2], 1)]), Some(1.0));
    }

    #[test]
    fn norms() {
        assert_eq!(max_abs_diff(&[0.2, 0.8], &[0.2, 0.8]), Ok(0.0));
        assert_eq!(max_abs_diff(&[0.5, 0.5], &[1.0, 0.0]), Ok(0.5));
        assert!(max_abs_diff(&[1.0], &[0.5, 0.5]).is_err());
        let d = GoalDistribution::explicit(vec![1.0, 0.0]).unwrap();
        let e = PriorDistribution::new(vec![0.918, 0.082]).unwrap();
        assert!((max_norm(&d, &e).unwrap() - 0.082).abs() < 1e-12);
    }
}
