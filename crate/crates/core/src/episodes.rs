//! Repeated recognition episodes: generating labeled samples from a hidden
//! goal distribution and estimating goal priors from them.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::planner::{solve_for, SearchConfig, SearchError};
use crate::ratio::Ratio;
use crate::recognizer::{LandmarkModel, PriorDistribution, RecognitionError};
use crate::task::{ActionId, Goal, Plan, PlanningInstance, TaskError};

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EpisodeError {
    #[error("preferred goal {index} is outside the {count} hypotheses")]
    PreferredOutOfRange { index: usize, count: usize },
    #[error("goal distribution covers {found} goals, expected {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("goal distribution is not a probability distribution (sum {sum})")]
    InvalidDistribution { sum: f64 },
    #[error("observability must be a percentage in 1..=100, got {0}")]
    InvalidObservability(u32),
    #[error("goal {index} ({goal}) cannot be planned for: {source}")]
    UnsolvableGoal {
        index: usize,
        goal: String,
        source: SearchError,
    },
    #[error("sample {sample} is labeled with goal {label}, outside the {count} hypotheses")]
    LabelOutOfRange { sample: usize, label: usize, count: usize },
    #[error("repeated problem has no samples")]
    NoSamples,
    #[error("ghost sample count must be at least 1")]
    ZeroGhostSamples,
    #[error(transparent)]
    Recognition(#[from] RecognitionError),
    #[error(transparent)]
    Task(#[from] TaskError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    /// All mass on the preferred goal.
    NormalSingle,
    /// Half the mass on the preferred goal, the rest decaying with
    /// similarity rank.
    NormalDiverse,
    Explicit(Vec<f64>),
}

/// The generator's goal distribution, kept apart from the samples it
/// produced.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalDistribution {
    probs: Vec<f64>,
    kind: DistributionKind,
    preferred: Option<usize>,
}

impl GoalDistribution {
    pub fn explicit(probs: Vec<f64>) -> Result<Self, EpisodeError> {
        let sum: f64 = probs.iter().sum();
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(EpisodeError::InvalidDistribution { sum });
        }
        Ok(GoalDistribution {
            kind: DistributionKind::Explicit(probs.clone()),
            probs,
            preferred: None,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn preferred(&self) -> Option<usize> {
        self.preferred
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Draws a hypothesis index.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc && p > 0.0 {
                return i;
            }
        }
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Jaccard index of two goals' atom sets; two empty goals count as equal.
pub fn goal_similarity(a: &Goal, b: &Goal) -> f64 {
    let pruned_common = a
        .unreachable_atoms()
        .iter()
        .filter(|x| b.unreachable_atoms().contains(x))
        .count();
    let pruned_union = a.unreachable_atoms().len() + b.unreachable_atoms().len() - pruned_common;
    let inter = a.as_set().intersection_len(b.as_set()) + pruned_common;
    let union = a.as_set().union_len(b.as_set()) + pruned_union;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn make_distribution(
    hypotheses: &[Goal],
    kind: DistributionKind,
    preferred: usize,
) -> Result<GoalDistribution, EpisodeError> {
    let n = hypotheses.len();
    if preferred >= n {
        return Err(EpisodeError::PreferredOutOfRange {
            index: preferred,
            count: n,
        });
    }
    let probs = match &kind {
        DistributionKind::NormalSingle => point_mass(n, preferred),
        DistributionKind::NormalDiverse if n == 1 => point_mass(n, preferred),
        DistributionKind::NormalDiverse => {
            let mut others: Vec<(usize, f64)> = (0..n)
                .filter(|&i| i != preferred)
                .map(|i| (i, goal_similarity(&hypotheses[preferred], &hypotheses[i])))
                .collect();
            others.sort_by(|x, y| y.1.total_cmp(&x.1));
            let sigma = n as f64 / 4.0;
            let weights: Vec<f64> = (0..others.len())
                .map(|r| libm::exp(-((r * r) as f64) / (2.0 * sigma * sigma)))
                .collect();
            let total: f64 = weights.iter().sum();
            let mut probs = vec![0.0; n];
            probs[preferred] = 0.5;
            for ((i, _), w) in others.iter().zip(&weights) {
                probs[*i] = 0.5 * w / total;
            }
            probs
        }
        DistributionKind::Explicit(p) => {
            if p.len() != n {
                return Err(EpisodeError::SizeMismatch {
                    expected: n,
                    found: p.len(),
                });
            }
            let mut d = GoalDistribution::explicit(p.clone())?;
            d.preferred = Some(preferred);
            return Ok(d);
        }
    };
    Ok(GoalDistribution {
        probs,
        kind,
        preferred: Some(preferred),
    })
}

fn point_mass(n: usize, at: usize) -> Vec<f64> {
    let mut p = vec![0.0; n];
    p[at] = 1.0;
    p
}

/// Number of actions observed out of `plan_len` at `percent` observability.
pub fn observed_count(plan_len: usize, percent: u32) -> usize {
    (plan_len * percent as usize).div_ceil(100)
}

/// Keeps `⌈percent·|plan|/100⌉` uniformly chosen actions in plan order. For
/// a fixed seed the kept set only grows with `percent`.
pub fn project_observations(plan: &Plan, percent: u32, seed: u64) -> Result<Vec<ActionId>, EpisodeError> {
    if percent == 0 || percent > 100 {
        return Err(EpisodeError::InvalidObservability(percent));
    }
    let mut idx: Vec<usize> = (0..plan.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.truncate(observed_count(plan.len(), percent));
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| plan.actions[i]).collect())
}

/// Mixes a base seed with a stream tag and an index.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0xd1b5_4a32_d192_ed03) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sample {
    pub observations: Vec<ActionId>,
    /// Index of the goal the observed agent pursued.
    pub label: usize,
}

/// A task, its goal hypotheses and labeled observation sequences.
#[derive(Debug, Clone)]
pub struct RepeatedProblem {
    pub instance: PlanningInstance,
    pub hypotheses: Vec<Goal>,
    pub samples: Vec<Sample>,
}

impl RepeatedProblem {
    pub fn new(instance: PlanningInstance, hypotheses: Vec<Goal>, samples: Vec<Sample>) -> Result<Self, EpisodeError> {
        if hypotheses.is_empty() {
            return Err(RecognitionError::NoHypotheses.into());
        }
        for (i, s) in samples.iter().enumerate() {
            if s.label >= hypotheses.len() {
                return Err(EpisodeError::LabelOutOfRange {
                    sample: i,
                    label: s.label,
                    count: hypotheses.len(),
                });
            }
            if let Some(o) = s.observations.iter().find(|o| o.index() >= instance.num_actions()) {
                return Err(TaskError::UnknownAction(alloc::format!("#{}", o.0)).into());
            }
        }
        Ok(RepeatedProblem {
            instance,
            hypotheses,
            samples,
        })
    }
}

/// Sampling settings shared by every sample of one repeated problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSpec {
    pub observability: u32,
    pub seed: u64,
    pub search: SearchConfig,
}

const GOAL_STREAM: u64 = 1;
const PLAN_STREAM: u64 = 2;
const OBS_STREAM: u64 = 3;

/// Sample `index` of a run; depends only on `spec` and `index`, so samples
/// can be produced in any order or in parallel.
pub fn generate_sample(
    instance: &PlanningInstance,
    hypotheses: &[Goal],
    dist: &GoalDistribution,
    spec: &SampleSpec,
    index: usize,
) -> Result<Sample, EpisodeError> {
    if dist.len() != hypotheses.len() {
        return Err(EpisodeError::SizeMismatch {
            expected: hypotheses.len(),
            found: dist.len(),
        });
    }
    let i = index as u64;
    let label = dist.draw(&mut ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, GOAL_STREAM, i)));
    let search = SearchConfig {
        seed: derive_seed(spec.seed, PLAN_STREAM, i),
        ..spec.search
    };
    let plan = solve_for(instance, &hypotheses[label], &search).map_err(|source| EpisodeError::UnsolvableGoal {
        index: label,
        goal: instance.render_goal(&hypotheses[label]),
        source,
    })?;
    let observations = project_observations(&plan, spec.observability, derive_seed(spec.seed, OBS_STREAM, i))?;
    Ok(Sample { observations, label })
}

/// Draws `n` goals from `dist`, plans for each and projects the plans.
pub fn generate_samples(
    instance: &PlanningInstance,
    hypotheses: &[Goal],
    dist: &GoalDistribution,
    n: usize,
    spec: &SampleSpec,
) -> Result<RepeatedProblem, EpisodeError> {
    let samples = (0..n)
        .map(|i| generate_sample(instance, hypotheses, dist, spec, i))
        .collect::<Result<Vec<_>, _>>()?;
    RepeatedProblem::new(instance.clone(), hypotheses.to_vec(), samples)
}

/// Per-goal counts of correct recognitions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GoalCounters {
    counts: Vec<u64>,
    processed: u64,
}

impl GoalCounters {
    pub fn new(num_goals: usize) -> Self {
        GoalCounters {
            counts: vec![0; num_goals],
            processed: 0,
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts one sample. When `label` is among the top goals every top goal
    /// is incremented; otherwise nothing changes. Returns whether it counted.
    pub fn record(&mut self, label: usize, argmax: &[usize]) -> bool {
        self.processed += 1;
        if !argmax.contains(&label) {
            return false;
        }
        for &g in argmax {
            self.counts[g] += 1;
        }
        true
    }

    pub fn merge(&mut self, other: &GoalCounters) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.processed += other.processed;
    }

    /// `(k + Γ_G) / (k·|𝒢| + ΣΓ)` for every goal.
    pub fn smoothed(&self, k: u64) -> Vec<Ratio> {
        let denom = k * self.counts.len() as u64 + self.total();
        self.counts.iter().map(|&c| Ratio::new(k + c, denom)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorEstimate {
    pub prior: PriorDistribution,
    /// The same prior as exact fractions.
    pub exact: Vec<Ratio>,
    pub counters: GoalCounters,
    /// Top goals of every sample under uniform priors, in sample order.
    pub argmax_sets: Vec<Vec<usize>>,
}

/// Top goals for one sample under uniform priors.
pub fn recognize_sample(
    model: &LandmarkModel,
    instance: &PlanningInstance,
    sample: &Sample,
) -> Result<Vec<usize>, EpisodeError> {
    Ok(model.recognize(instance, &sample.observations, None)?.posterior.argmax)
}

/// Folds per-sample argmax sets into counters and the smoothed prior.
pub fn prior_from_argmax_sets(
    num_goals: usize,
    samples: &[Sample],
    argmax_sets: Vec<Vec<usize>>,
    k: u64,
) -> Result<PriorEstimate, EpisodeError> {
    if k == 0 {
        return Err(EpisodeError::ZeroGhostSamples);
    }
    let mut counters = GoalCounters::new(num_goals);
    for (s, top) in samples.iter().zip(&argmax_sets) {
        counters.record(s.label, top);
    }
    let exact = counters.smoothed(k);
    let prior = PriorDistribution::new(exact.iter().map(Ratio::to_f64).collect())?;
    Ok(PriorEstimate {
        prior,
        exact,
        counters,
        argmax_sets,
    })
}

/// Supervised prior estimation with `k` ghost samples per goal.
pub fn estimate_prior(problem: &RepeatedProblem, k: u64) -> Result<PriorEstimate, EpisodeError> {
    if k == 0 {
        return Err(EpisodeError::ZeroGhostSamples);
    }
    if problem.samples.is_empty() {
        return Err(EpisodeError::NoSamples);
    }
    let model = LandmarkModel::extract(&problem.instance, &problem.hypotheses);
    let sets = problem
        .samples
        .iter()
        .map(|s| recognize_sample(&model, &problem.instance, s))
        .collect::<Result<Vec<_>, _>>()?;
    prior_from_argmax_sets(problem.hypotheses.len(), &problem.samples, sets, k)
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

    fn goals(t: &PlanningInstance, lines: &[&str]) -> Vec<Goal> {
        lines
            .iter()
            .map(|l| match *l {
                "" => Goal::new(t.num_facts(), vec![], vec![]),
                l => t.goal_from_atoms(&parse_atom_list(l).unwrap()).unwrap(),
            })
            .collect()
    }

    #[test]
    fn jaccard() {
        let t = tower();
        let g = goals(&t, &["(on a b),(on b c)", "(on b c),(on c a)", "(on c b)", ""]);
        assert_eq!(goal_similarity(&g[0], &g[0]), 1.0);
        assert_eq!(goal_similarity(&g[0], &g[2]), 0.0);
        assert!((goal_similarity(&g[0], &g[1]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(goal_similarity(&g[1], &g[0]), goal_similarity(&g[0], &g[1]));
        assert_eq!(goal_similarity(&g[3], &g[3]), 1.0);
    }

    #[test]
    fn distributions() {
        let t = tower();
        let g = goals(&t, &["(on a b),(on b c)", "(on c b)", "(on b c),(on c a)"]);
        let single = make_distribution(&g, DistributionKind::NormalSingle, 1).unwrap();
        assert_eq!(single.probs(), [0.0, 1.0, 0.0]);
        let diverse = make_distribution(&g, DistributionKind::NormalDiverse, 0).unwrap();
        let p = diverse.probs();
        assert_eq!(p[0], 0.5);
        assert!(p[2] > p[1]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let e = make_distribution(&g[..2], DistributionKind::Explicit(vec![0.6, 0.4]), 0).unwrap();
        assert_eq!(e.probs(), [0.6, 0.4]);
        assert!(make_distribution(&g[..2], DistributionKind::Explicit(vec![0.6, 0.6]), 0).is_err());
        assert!(make_distribution(&g, DistributionKind::Explicit(vec![0.6, 0.4]), 0).is_err());
        assert!(make_distribution(&g, DistributionKind::NormalSingle, 3).is_err());
        let one = make_distribution(&g[..1], DistributionKind::NormalDiverse, 0).unwrap();
        assert_eq!(one.probs(), [1.0]);
    }

    #[test]
    fn projection() {
        let plan = Plan::new((0..8).map(ActionId).collect());
        assert_eq!(project_observations(&plan, 100, 3).unwrap(), plan.actions);
        let half = project_observations(&plan, 50, 3).unwrap();
        assert_eq!(half.len(), 4);
        assert!(half.windows(2).all(|w| w[0] < w[1]));
        let tenth = project_observations(&plan, 10, 3).unwrap();
        assert!(tenth.iter().all(|a| half.contains(a)));
        let one = Plan::new(vec![ActionId(5)]);
        assert_eq!(project_observations(&one, 10, 0).unwrap(), [ActionId(5)]);
        assert!(project_observations(&Plan::default(), 30, 0).unwrap().is_empty());
        assert!(project_observations(&plan, 0, 0).is_err());
        assert!(project_observations(&plan, 101, 0).is_err());
    }

    #[test]
    fn line_seven_arithmetic() {
        let mut c = GoalCounters::new(3);
        c.counts = vec![8, 2, 0];
        assert_eq!(c.smoothed(1), [Ratio::new(9, 13), Ratio::new(3, 13), Ratio::new(1, 13)]);
        assert_eq!(GoalCounters::new(3).smoothed(1), [Ratio::new(1, 3); 3]);
    }

    #[test]
    fn counters_follow_the_guard() {
        let mut c = GoalCounters::new(3);
        assert!(c.record(0, &[0, 2]));
        assert!(!c.record(1, &[0]));
        assert!(c.record(1, &[1]));
        assert_eq!(c.counts(), [1, 1, 1]);
        assert_eq!(c.processed(), 3);
    }

    #[test]
    fn generated_samples_and_estimate() {
        let t = tower();
        let g = goals(&t, &["(on a b),(on b c)", "(on c b),(on b a)", "(holding c)"]);
        let dist = make_distribution(&g, DistributionKind::NormalSingle, 0).unwrap();
        let spec = SampleSpec {
            observability: 100,
            seed: 11,
            search: SearchConfig::default(),
        };
        let rp = generate_samples(&t, &g, &dist, 30, &spec).unwrap();
        assert_eq!(rp.samples.len(), 30);
        assert!(rp.samples.iter().all(|s| s.label == 0));
        let again = generate_samples(&t, &g, &dist, 30, &spec).unwrap();
        assert_eq!(rp.samples, again.samples);
        let est = estimate_prior(&rp, 1).unwrap();
        assert_eq!(est.exact[0], Ratio::new(31, 33));
        assert_eq!(est.argmax_sets.len(), 30);
        assert_eq!(estimate_prior(&rp, 0), Err(EpisodeError::ZeroGhostSamples));
    }

    #[test]
    fn unsolvable_drawn_goal_is_named() {
        let t = tower();
        let g = goals(&t, &["(on a b)", "(on a a)"]);
        let dist = make_distribution(&g, DistributionKind::NormalSingle, 1).unwrap();
        let spec = SampleSpec {
            observability: 100,
            seed: 0,
            search: SearchConfig::default(),
        };
        match generate_samples(&t, &g, &dist, 1, &spec) {
            Err(EpisodeError::UnsolvableGoal { index: 1, goal, .. }) => assert_eq!(goal, "(on a a)"),
            other => panic!("{other:?}"),
        }
    }
}
