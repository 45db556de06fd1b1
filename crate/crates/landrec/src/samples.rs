//! Labeled sample sets on disk and prior files.
//!
//! A sample set directory holds a `meta` file (paths of the domain, problem
//! and hypotheses files, observability, seed, ghost-sample count), one
//! `sample_<i>.obs` and `sample_<i>.label` pair per sample, and the
//! generating distribution under `hidden/`, out of the estimator's way.

use std::fs;
use std::path::{Path, PathBuf};

use landrec_core::episodes::{DistributionKind, EpisodeError, GoalDistribution, RepeatedProblem, Sample};

use crate::dataset::{load_instance, match_hypothesis, parse_hypotheses, parse_observations, LoadError, Meta};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSetMeta {
    pub domain: PathBuf,
    pub problem: PathBuf,
    pub hypotheses: PathBuf,
    pub observability: u32,
    pub seed: u64,
    pub k: u64,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> LoadError + '_ {
    move |source| LoadError::Io {
        path: path.to_owned(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> LoadError {
    LoadError::Format {
        path: path.to_owned(),
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(io(path))
}

fn write(path: &Path, text: &str) -> Result<(), LoadError> {
    fs::write(path, text).map_err(io(path))
}

impl SampleSetMeta {
    fn to_meta(&self) -> Meta {
        let mut m = Meta::default();
        m.set("domain", self.domain.display());
        m.set("problem", self.problem.display());
        m.set("hypotheses", self.hypotheses.display());
        m.set("observability", self.observability);
        m.set("seed", self.seed);
        m.set("k", self.k);
        m
    }

    fn from_meta(path: &Path, m: &Meta) -> Result<Self, LoadError> {
        let get = |key: &str| m.get(key).ok_or_else(|| format_err(path, format!("missing `{key}`")));
        let num = |key: &str| -> Result<u64, LoadError> {
            get(key)?
                .parse()
                .map_err(|_| format_err(path, format!("`{key}` is not a number")))
        };
        Ok(SampleSetMeta {
            domain: get("domain")?.into(),
            problem: get("problem")?.into(),
            hypotheses: get("hypotheses")?.into(),
            observability: num("observability")? as u32,
            seed: num("seed")?,
            k: num("k")?,
        })
    }
}

/// One probability per line.
pub fn render_probabilities(probs: &[f64]) -> String {
    probs.iter().map(|p| format!("{p}\n")).collect()
}

pub fn parse_probabilities(path: &Path, text: &str) -> Result<Vec<f64>, LoadError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| format_err(path, format!("`{l}` is not a probability")))
        })
        .collect()
}

pub fn read_probabilities(path: &Path) -> Result<Vec<f64>, LoadError> {
    parse_probabilities(path, &read(path)?)
}

fn kind_name(kind: &DistributionKind) -> &'static str {
    match kind {
        DistributionKind::NormalSingle => "single",
        DistributionKind::NormalDiverse => "diverse",
        DistributionKind::Explicit(_) => "explicit",
    }
}

pub fn write_sample_set(
    dir: &Path,
    meta: &SampleSetMeta,
    problem: &RepeatedProblem,
    dist: &GoalDistribution,
) -> Result<(), LoadError> {
    let hidden = dir.join("hidden");
    fs::create_dir_all(&hidden).map_err(io(&hidden))?;
    write(&dir.join("meta"), &meta.to_meta().render())?;
    let mut m = Meta::default();
    m.set("kind", kind_name(dist.kind()));
    if let Some(p) = dist.preferred() {
        m.set("preferred", p);
    }
    write(&hidden.join("meta"), &m.render())?;
    write(&hidden.join("distribution"), &render_probabilities(dist.probs()))?;
    let t = &problem.instance;
    for (i, s) in problem.samples.iter().enumerate() {
        let obs: String = s
            .observations
            .iter()
            .map(|&a| format!("{}\n", t.action(a).name))
            .collect();
        write(&dir.join(format!("sample_{i}.obs")), &obs)?;
        let label = t.render_goal(&problem.hypotheses[s.label]) + "\n";
        write(&dir.join(format!("sample_{i}.label")), &label)?;
    }
    Ok(())
}

/// Reads a sample set and the task files its `meta` points to.
pub fn read_sample_set(dir: &Path) -> Result<(SampleSetMeta, RepeatedProblem), LoadError> {
    let meta_path = dir.join("meta");
    let meta = SampleSetMeta::from_meta(&meta_path, &Meta::parse(&read(&meta_path)?))?;
    let instance = load_instance(&meta.problem, &read(&meta.domain)?, &read(&meta.problem)?)?;
    let hypotheses = parse_hypotheses(&instance, &meta.hypotheses, &read(&meta.hypotheses)?)?;
    let mut samples = Vec::new();
    for i in 0.. {
        let obs_path = dir.join(format!("sample_{i}.obs"));
        if !obs_path.is_file() {
            break;
        }
        let label_path = dir.join(format!("sample_{i}.label"));
        let observations = parse_observations(&instance, &obs_path, &read(&obs_path)?)?;
        let label = match_hypothesis(&instance, &hypotheses, &label_path, &read(&label_path)?)?;
        samples.push(Sample { observations, label });
    }
    let problem = RepeatedProblem::new(instance, hypotheses, samples)
        .map_err(|e: EpisodeError| format_err(dir, e.to_string()))?;
    Ok((meta, problem))
}

/// The generating distribution stored with a sample set, if any.
pub fn read_hidden_distribution(dir: &Path) -> Result<Option<Vec<f64>>, LoadError> {
    let p = dir.join("hidden").join("distribution");
    if !p.is_file() {
        return Ok(None);
    }
    read_probabilities(&p).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_task, Scale, SynthDomain};
    use landrec_core::episodes::{generate_samples, make_distribution, SampleSpec};
    use landrec_core::SearchConfig;

    #[test]
    fn round_trip() {
        let task = generate_task(SynthDomain::BlocksWorld, Scale::Desk, 4).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let files = tmp.path();
        fs::write(files.join("domain.pddl"), task.domain_pddl()).unwrap();
        fs::write(files.join("template.pddl"), &task.template).unwrap();
        fs::write(files.join("hyps.dat"), task.hyps_dat()).unwrap();
        let inst = task.instance();
        let goals = task.goals(&inst);
        let dist = make_distribution(&goals, DistributionKind::NormalDiverse, 2).unwrap();
        let spec = SampleSpec {
            observability: 50,
            seed: 3,
            search: SearchConfig::default(),
        };
        let rp = generate_samples(&inst, &goals, &dist, 12, &spec).unwrap();
        let meta = SampleSetMeta {
            domain: files.join("domain.pddl"),
            problem: files.join("template.pddl"),
            hypotheses: files.join("hyps.dat"),
            observability: 50,
            seed: 3,
            k: 1,
        };
        let dir = files.join("set");
        write_sample_set(&dir, &meta, &rp, &dist).unwrap();
        let (m, back) = read_sample_set(&dir).unwrap();
        assert_eq!(m, meta);
        assert_eq!(back.samples, rp.samples);
        assert_eq!(read_hidden_distribution(&dir).unwrap().unwrap(), dist.probs());
    }
}
