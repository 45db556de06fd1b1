//! Batch evaluation over a dataset and the report formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use landrec_core::episodes::{
    derive_seed, generate_sample, make_distribution, prior_from_argmax_sets, recognize_sample, DistributionKind,
    EpisodeError, SampleSpec,
};
use landrec_core::metrics::max_norm;
use landrec_core::{LandmarkModel, RecognitionError, SearchConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{RecognitionCase, RecognitionDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PriorMode {
    /// Uniform priors.
    NoPriors,
    /// Priors estimated from samples that all pursue the true goal.
    NormalSingle,
    /// Priors estimated from samples where the true goal has half the mass.
    NormalDiverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalConfig {
    pub mode: PriorMode,
    pub k: u64,
    pub seed: u64,
    /// Samples per hypothesis when estimating priors.
    pub samples_per_goal: usize,
    pub search: SearchConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mode: PriorMode::NoPriors,
            k: 1,
            seed: 0,
            samples_per_goal: 10,
            search: SearchConfig {
                node_cap: 200_000,
                ..SearchConfig::default()
            },
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{name}: problem has no true goal label")]
    Unlabeled { name: String },
    #[error("{name}: {source}")]
    Recognition { name: String, source: RecognitionError },
    #[error("{name}: {source}")]
    Episode { name: String, source: EpisodeError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemRecord {
    pub name: String,
    pub domain: String,
    pub obs_level: u32,
    pub num_goals: usize,
    /// Mean landmark count over solvable hypotheses.
    pub num_landmarks: f64,
    pub num_obs: usize,
    /// Landmark extraction plus posterior computation, in seconds.
    pub time_s: f64,
    pub correct: bool,
    pub spread: usize,
    pub max_norm: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRecord {
    pub domain: String,
    pub obs_level: u32,
    pub problems: usize,
    pub num_goals: f64,
    pub num_landmarks: f64,
    pub num_obs: f64,
    pub time_s: f64,
    pub accuracy: f64,
    pub spread: f64,
    pub max_norm: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub problems: Vec<ProblemRecord>,
    /// One row per (domain, observability), sorted.
    pub aggregates: Vec<AggregateRecord>,
}

fn recognition_err(case: &RecognitionCase) -> impl FnOnce(RecognitionError) -> EvalError + '_ {
    |source| EvalError::Recognition {
        name: case.name.clone(),
        source,
    }
}

fn episode_err(case: &RecognitionCase) -> impl FnOnce(EpisodeError) -> EvalError + '_ {
    |source| EvalError::Episode {
        name: case.name.clone(),
        source,
    }
}

/// Evaluates one case. `index` selects the case's sampling seed.
pub fn evaluate_case(case: &RecognitionCase, config: &EvalConfig, index: usize) -> Result<ProblemRecord, EvalError> {
    let p = &case.problem;
    let label = p.true_goal.ok_or_else(|| EvalError::Unlabeled {
        name: case.name.clone(),
    })?;
    let t = &p.instance;

    let start = Instant::now();
    let model = LandmarkModel::extract(t, &p.hypotheses);
    let extraction = start.elapsed();
    let start = Instant::now();
    let uniform = model
        .recognize(t, &p.observations, None)
        .map_err(recognition_err(case))?;
    let mut elapsed = extraction + start.elapsed();

    let (result, max_norm_value, delta) = match config.mode {
        PriorMode::NoPriors => (uniform.posterior.clone(), None, None),
        PriorMode::NormalSingle | PriorMode::NormalDiverse => {
            let kind = match config.mode {
                PriorMode::NormalSingle => DistributionKind::NormalSingle,
                _ => DistributionKind::NormalDiverse,
            };
            let dist = make_distribution(&p.hypotheses, kind, label).map_err(episode_err(case))?;
            let spec = SampleSpec {
                observability: case.obs_level,
                seed: derive_seed(config.seed, 0x5eed, index as u64),
                search: config.search,
            };
            let n = config.samples_per_goal * p.hypotheses.len();
            let samples = (0..n)
                .into_par_iter()
                .map(|i| generate_sample(t, &p.hypotheses, &dist, &spec, i))
                .collect::<Result<Vec<_>, _>>()
                .map_err(episode_err(case))?;
            let tops = samples
                .par_iter()
                .map(|s| recognize_sample(&model, t, s))
                .collect::<Result<Vec<_>, _>>()
                .map_err(episode_err(case))?;
            let estimate =
                prior_from_argmax_sets(p.hypotheses.len(), &samples, tops, config.k).map_err(episode_err(case))?;
            let start = Instant::now();
            let with = model
                .recognize(t, &p.observations, Some(&estimate.prior))
                .map_err(recognition_err(case))?;
            elapsed = extraction + start.elapsed();
            let norm = max_norm(&dist, &estimate.prior).expect("same hypotheses");
            let delta = with.posterior.probabilities[label] - uniform.posterior.probabilities[label];
            (with.posterior, Some(norm), Some(delta))
        }
    };

    let solvable: Vec<usize> = model.sets().iter().flatten().map(|s| s.len()).collect();
    let num_landmarks = if solvable.is_empty() {
        0.0
    } else {
        solvable.iter().sum::<usize>() as f64 / solvable.len() as f64
    };
    Ok(ProblemRecord {
        name: case.name.clone(),
        domain: case.domain.clone(),
        obs_level: case.obs_level,
        num_goals: p.hypotheses.len(),
        num_landmarks,
        num_obs: p.observations.len(),
        time_s: elapsed.as_secs_f64(),
        correct: result.is_top(label),
        spread: result.argmax.len(),
        max_norm: max_norm_value,
        delta,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn mean_opt(xs: &[&ProblemRecord], f: impl Fn(&ProblemRecord) -> Option<f64>) -> Option<f64> {
    let v: Option<Vec<f64>> = xs.iter().map(|r| f(r)).collect();
    v.filter(|v| !v.is_empty()).map(|v| mean(v.into_iter()))
}

/// Per-(domain, observability) means of the problem records.
pub fn aggregate(problems: &[ProblemRecord]) -> Vec<AggregateRecord> {
    let mut groups: BTreeMap<(&str, u32), Vec<&ProblemRecord>> = BTreeMap::new();
    for r in problems {
        groups.entry((&r.domain, r.obs_level)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((domain, obs_level), rs)| AggregateRecord {
            domain: domain.to_owned(),
            obs_level,
            problems: rs.len(),
            num_goals: mean(rs.iter().map(|r| r.num_goals as f64)),
            num_landmarks: mean(rs.iter().map(|r| r.num_landmarks)),
            num_obs: mean(rs.iter().map(|r| r.num_obs as f64)),
            time_s: mean(rs.iter().map(|r| r.time_s)),
            accuracy: mean(rs.iter().map(|r| if r.correct { 1.0 } else { 0.0 })),
            spread: mean(rs.iter().map(|r| r.spread as f64)),
            max_norm: mean_opt(&rs, |r| r.max_norm),
            delta: mean_opt(&rs, |r| r.delta),
        })
        .collect()
}

/// Evaluates every case in parallel; records keep dataset order.
pub fn evaluate(dataset: &RecognitionDataset, config: &EvalConfig) -> Result<MetricsReport, EvalError> {
    let problems = dataset
        .cases
        .par_iter()
        .enumerate()
        .map(|(i, c)| evaluate_case(c, config, i))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregates = aggregate(&problems);
    Ok(MetricsReport { problems, aggregates })
}

/// A flat report row shared by the CSV and JSON-lines formats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub record: &'static str,
    pub name: String,
    pub domain: String,
    pub obs_level: u32,
    pub problems: usize,
    pub num_goals: f64,
    pub num_landmarks: f64,
    pub num_obs: f64,
    pub time_s: f64,
    pub correct: f64,
    pub spread: f64,
    pub max_norm: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Jsonl,
}

impl MetricsReport {
    pub fn rows(&self) -> Vec<Row> {
        let problems = self.problems.iter().map(|r| Row {
            record: "problem",
            name: r.name.clone(),
            domain: r.domain.clone(),
            obs_level: r.obs_level,
            problems: 1,
            num_goals: r.num_goals as f64,
            num_landmarks: r.num_landmarks,
            num_obs: r.num_obs as f64,
            time_s: r.time_s,
            correct: if r.correct { 1.0 } else { 0.0 },
            spread: r.spread as f64,
            max_norm: r.max_norm,
            delta: r.delta,
        });
        let aggregates = self.aggregates.iter().map(|a| Row {
            record: "aggregate",
            name: String::new(),
            domain: a.domain.clone(),
            obs_level: a.obs_level,
            problems: a.problems,
            num_goals: a.num_goals,
            num_landmarks: a.num_landmarks,
            num_obs: a.num_obs,
            time_s: a.time_s,
            correct: a.accuracy,
            spread: a.spread,
            max_norm: a.max_norm,
            delta: a.delta,
        });
        problems.chain(aggregates).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.rows() {
            w.serialize(row).expect("rows serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
    }

    pub fn to_jsonl(&self) -> String {
        self.rows()
            .iter()
            .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
            .collect()
    }

    /// Aggregate rows as an aligned text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<22} {:>4} {:>6} {:>6} {:>7} {:>6} {:>9} {:>7} {:>6} {:>8} {:>8}",
            "domain", "obs%", "probs", "|G|", "|L|", "|O|", "time(s)", "acc%", "S", "maxnorm", "delta"
        );
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |x| format!("{x:.4}"));
        for a in &self.aggregates {
            let _ = writeln!(
                out,
                "{:<22} {:>4} {:>6} {:>6.1} {:>7.1} {:>6.1} {:>9.4} {:>7.1} {:>6.2} {:>8} {:>8}",
                a.domain,
                a.obs_level,
                a.problems,
                a.num_goals,
                a.num_landmarks,
                a.num_obs,
                a.time_s,
                100.0 * a.accuracy,
                a.spread,
                opt(a.max_norm),
                opt(a.delta)
            );
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.to_table(),
            Format::Csv => self.to_csv(),
            Format::Jsonl => self.to_jsonl(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(domain: &str, level: u32, correct: bool, spread: usize) -> ProblemRecord {
        ProblemRecord {
            name: format!("{domain}-{level}"),
            domain: domain.to_owned(),
            obs_level: level,
            num_goals: 4,
            num_landmarks: 3.0,
            num_obs: 2,
            time_s: 0.5,
            correct,
            spread,
            max_norm: None,
            delta: Some(0.25),
        }
    }

    #[test]
    fn aggregates_group_and_average() {
        let rs = [
            rec("b", 10, true, 1),
            rec("a", 100, true, 1),
            rec("b", 10, false, 3),
            rec("b", 10, true, 2),
            rec("a", 100, false, 1),
        ];
        let ag = aggregate(&rs);
        assert_eq!(ag.len(), 2);
        assert_eq!((ag[0].domain.as_str(), ag[0].obs_level, ag[0].problems), ("a", 100, 2));
        assert_eq!(ag[0].accuracy, 0.5);
        assert_eq!(ag[1].spread, 2.0);
        assert!((ag[1].accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ag[1].max_norm, None);
        assert_eq!(ag[1].delta, Some(0.25));
    }

    #[test]
    fn formats_share_field_names() {
        let problems = vec![rec("a", 30, true, 1)];
        let report = MetricsReport {
            aggregates: aggregate(&problems),
            problems,
        };
        let csv = report.to_csv();
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "record,name,domain,obs_level,problems,num_goals,num_landmarks,num_obs,time_s,correct,spread,max_norm,delta"
        );
        assert_eq!(csv.lines().count(), 3);
        let first: serde_json::Value = serde_json::from_str(report.to_jsonl().lines().next().unwrap()).unwrap();
        assert_eq!(first["record"], "problem");
        assert_eq!(first["max_norm"], serde_json::Value::Null);
        assert!(report.to_table().contains("100.0"));
    }
}
