//! Recognition datasets on disk.
//!
//! A problem is a directory (or a `.tar`, `.tar.gz` or `.tar.bz2` archive of
//! one) holding `domain.pddl`, `template.pddl` or `problem.pddl`, `hyps.dat`,
//! `obs.dat` and `real_hyp.dat`. An optional `meta` file of `key=value` lines
//! may name the `domain` label and the `obs_level`. A dataset is any
//! directory tree or archive containing such problems.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use landrec_core::pddl::{parse_atom_list, parse_domain, parse_problem, ParseError};
use landrec_core::{
    ground, ActionId, Goal, GoalRecognitionProblem, GroundError, GroundingOptions, PlanningInstance, RecognitionError,
    TaskError,
};

/// Observability levels used by the benchmark datasets, in percent.
pub const OBS_LEVELS: [u32; 5] = [10, 30, 50, 70, 100];

pub const PLACEHOLDER: &str = "<HYPOTHESIS>";

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: missing {file}", path.display())]
    Missing { path: PathBuf, file: &'static str },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: {source}", path.display())]
    Ground { path: PathBuf, source: GroundError },
    #[error("{}:{line}: {message}", path.display())]
    Hypothesis {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}:{line}: observed action {signature} is not an action of the grounded task", path.display())]
    Observation {
        path: PathBuf,
        line: usize,
        signature: String,
    },
    #[error("{}: real hypothesis matches no line of the hypotheses file", path.display())]
    RealHypothesis { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Recognition { path: PathBuf, source: RecognitionError },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{}: no recognition problems found", path.display())]
    Empty { path: PathBuf },
}

impl LoadError {
    fn io(path: &Path) -> impl FnOnce(io::Error) -> LoadError + '_ {
        move |source| LoadError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

/// `key=value` lines; blank lines and `#` comments are skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Meta(pub BTreeMap<String, String>);

impl Meta {
    pub fn parse(text: &str) -> Meta {
        Meta(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .filter_map(|l| l.split_once('='))
                .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
                .collect(),
        )
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_owned(), value.to_string());
    }
}

/// Substitutes an empty goal for the hypothesis placeholder.
pub fn fill_template(template: &str) -> String {
    template.replace(PLACEHOLDER, "(and)").replace("<hypothesis>", "(and)")
}

/// Parses and grounds a domain and problem text.
pub fn load_instance(path: &Path, domain: &str, problem: &str) -> Result<PlanningInstance, LoadError> {
    let parse = |source| LoadError::Parse {
        path: path.to_owned(),
        source,
    };
    let d = parse_domain(domain).map_err(parse)?;
    let p = parse_problem(&fill_template(problem), &d).map_err(parse)?;
    ground(&d, &p, &GroundingOptions::default()).map_err(|source| LoadError::Ground {
        path: path.to_owned(),
        source,
    })
}

fn goal_line(instance: &PlanningInstance, line: &str) -> Result<Goal, String> {
    let atoms = parse_atom_list(line).map_err(|e| e.to_string())?;
    if atoms.is_empty() {
        return Err("hypothesis has no facts".to_owned());
    }
    instance.goal_from_atoms(&atoms).map_err(|e: TaskError| e.to_string())
}

/// One goal per non-blank line of comma-separated atoms.
pub fn parse_hypotheses(instance: &PlanningInstance, path: &Path, text: &str) -> Result<Vec<Goal>, LoadError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            goal_line(instance, l).map_err(|message| LoadError::Hypothesis {
                path: path.to_owned(),
                line: i + 1,
                message,
            })
        })
        .collect()
}

/// One ground action signature per non-blank line.
pub fn parse_observations(instance: &PlanningInstance, path: &Path, text: &str) -> Result<Vec<ActionId>, LoadError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            instance.action_by_signature(l).map_err(|_| LoadError::Observation {
                path: path.to_owned(),
                line: i + 1,
                signature: l.trim().to_owned(),
            })
        })
        .collect()
}

fn same_goal(a: &Goal, b: &Goal) -> bool {
    let mut x = a.unreachable_atoms().to_vec();
    let mut y = b.unreachable_atoms().to_vec();
    x.sort();
    y.sort();
    a.facts() == b.facts() && x == y
}

/// Index of the hypothesis equal to the goal written in `text`.
pub fn match_hypothesis(
    instance: &PlanningInstance,
    hypotheses: &[Goal],
    path: &Path,
    text: &str,
) -> Result<usize, LoadError> {
    let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let goal = goal_line(instance, line).map_err(|message| LoadError::Hypothesis {
        path: path.to_owned(),
        line: 1,
        message,
    })?;
    hypotheses
        .iter()
        .position(|h| same_goal(h, &goal))
        .ok_or_else(|| LoadError::RealHypothesis { path: path.to_owned() })
}

/// A labeled recognition problem with its dataset coordinates.
#[derive(Debug, Clone)]
pub struct RecognitionCase {
    pub name: String,
    pub domain: String,
    pub obs_level: u32,
    pub problem: GoalRecognitionProblem,
}

#[derive(Debug, Clone, Default)]
pub struct RecognitionDataset {
    pub cases: Vec<RecognitionCase>,
}

impl RecognitionDataset {
    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }
}

/// The text files of one problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseFiles {
    pub domain: String,
    /// A problem, possibly with the hypothesis placeholder as its goal.
    pub problem: String,
    pub hyps: String,
    pub obs: String,
    pub real_hyp: String,
    pub meta: Meta,
}

impl CaseFiles {
    /// Reads a problem directory.
    pub fn read(dir: &Path) -> Result<CaseFiles, LoadError> {
        let read = |file: &'static str| -> Result<String, LoadError> {
            let p = dir.join(file);
            if !p.is_file() {
                return Err(LoadError::Missing {
                    path: dir.to_owned(),
                    file,
                });
            }
            fs::read_to_string(&p).map_err(LoadError::io(&p))
        };
        let problem = if dir.join("problem.pddl").is_file() {
            read("problem.pddl")?
        } else {
            read("template.pddl")?
        };
        let meta = match dir.join("meta") {
            p if p.is_file() => Meta::parse(&fs::read_to_string(&p).map_err(LoadError::io(&p))?),
            _ => Meta::default(),
        };
        Ok(CaseFiles {
            domain: read("domain.pddl")?,
            problem,
            hyps: read("hyps.dat")?,
            obs: read("obs.dat")?,
            real_hyp: read("real_hyp.dat")?,
            meta,
        })
    }

    /// Writes a problem directory, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<(), LoadError> {
        fs::create_dir_all(dir).map_err(LoadError::io(dir))?;
        let name = if self.problem.contains(PLACEHOLDER) {
            "template.pddl"
        } else {
            "problem.pddl"
        };
        for (file, text) in [
            ("domain.pddl", &self.domain),
            (name, &self.problem),
            ("hyps.dat", &self.hyps),
            ("obs.dat", &self.obs),
            ("real_hyp.dat", &self.real_hyp),
        ] {
            let p = dir.join(file);
            fs::write(&p, text).map_err(LoadError::io(&p))?;
        }
        if !self.meta.0.is_empty() {
            let p = dir.join("meta");
            fs::write(&p, self.meta.render()).map_err(LoadError::io(&p))?;
        }
        Ok(())
    }
}

/// Observability from a `meta` entry or else the last `_`/`-`/`/`-separated
/// token of `name` that is a standard level; 100 when neither says.
pub fn infer_obs_level(meta: &Meta, name: &str) -> Result<u32, String> {
    if let Some(v) = meta.get("obs_level") {
        return match v.trim_end_matches('%').parse::<u32>() {
            Ok(n) if (1..=100).contains(&n) => Ok(n),
            _ => Err(format!("invalid obs_level `{v}`")),
        };
    }
    Ok(name
        .split(|c: char| !c.is_ascii_alphanumeric())
        .rev()
        .find_map(|t| t.parse::<u32>().ok().filter(|n| OBS_LEVELS.contains(n)))
        .unwrap_or(100))
}

type InstanceCache = HashMap<(String, String), PlanningInstance>;

fn build_case(
    path: &Path,
    name: String,
    files: &CaseFiles,
    cache: &mut InstanceCache,
) -> Result<RecognitionCase, LoadError> {
    let key = (files.domain.clone(), fill_template(&files.problem));
    let instance = match cache.get(&key) {
        Some(i) => i.clone(),
        None => {
            let i = load_instance(path, &files.domain, &files.problem)?;
            cache.insert(key, i.clone());
            i
        }
    };
    let hypotheses = parse_hypotheses(&instance, &path.join("hyps.dat"), &files.hyps)?;
    let observations = parse_observations(&instance, &path.join("obs.dat"), &files.obs)?;
    let label = match_hypothesis(&instance, &hypotheses, &path.join("real_hyp.dat"), &files.real_hyp)?;
    let obs_level = infer_obs_level(&files.meta, &name).map_err(|message| LoadError::Format {
        path: path.to_owned(),
        message,
    })?;
    let domain = match files.meta.get("domain") {
        Some(d) => d.to_owned(),
        None => instance.domain_name.clone(),
    };
    let problem = GoalRecognitionProblem::new(instance, hypotheses, observations, Some(label)).map_err(|source| {
        LoadError::Recognition {
            path: path.to_owned(),
            source,
        }
    })?;
    Ok(RecognitionCase {
        name,
        domain,
        obs_level,
        problem,
    })
}

/// Builds a dataset from in-memory files, sorted by name.
pub fn dataset_from_files(files: &[(String, CaseFiles)]) -> Result<RecognitionDataset, LoadError> {
    let mut cache = HashMap::new();
    let mut cases = files
        .iter()
        .map(|(name, f)| build_case(Path::new(name), name.clone(), f, &mut cache))
        .collect::<Result<Vec<_>, _>>()?;
    cases.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(RecognitionDataset { cases })
}

fn archive_stem(path: &Path) -> Option<&str> {
    let name = path.file_name()?.to_str()?;
    [".tar.gz", ".tgz", ".tar.bz2", ".tbz2", ".tar"]
        .iter()
        .find_map(|ext| name.strip_suffix(ext))
}

fn unpack(path: &Path, into: &Path) -> Result<(), LoadError> {
    let file = File::open(path).map_err(LoadError::io(path))?;
    let name = path.to_string_lossy();
    let reader: Box<dyn Read> = if name.ends_with(".gz") || name.ends_with(".tgz") {
        Box::new(flate2::read::GzDecoder::new(file))
    } else if name.ends_with(".bz2") || name.ends_with(".tbz2") {
        Box::new(bzip2::read::BzDecoder::new(file))
    } else {
        Box::new(file)
    };
    tar::Archive::new(reader).unpack(into).map_err(LoadError::io(path))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, LoadError> {
    let mut v = fs::read_dir(dir)
        .map_err(LoadError::io(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(LoadError::io(dir))?;
    v.sort();
    Ok(v)
}

fn collect(
    path: &Path,
    name: &str,
    cases: &mut Vec<RecognitionCase>,
    cache: &mut InstanceCache,
) -> Result<(), LoadError> {
    if path.is_dir() {
        if path.join("hyps.dat").is_file() {
            let files = CaseFiles::read(path)?;
            cases.push(build_case(path, name.to_owned(), &files, cache)?);
            return Ok(());
        }
        for child in sorted_entries(path)? {
            let leaf = child.file_name().unwrap_or_default().to_string_lossy().into_owned();
            let child_name = if name.is_empty() {
                leaf
            } else {
                format!("{name}/{leaf}")
            };
            collect(&child, &child_name, cases, cache)?;
        }
    } else if let Some(stem) = archive_stem(path) {
        let tmp = tempfile::tempdir().map_err(LoadError::io(path))?;
        unpack(path, tmp.path())?;
        let archive_name = match name.rsplit_once('/') {
            Some((parent, _)) => format!("{parent}/{stem}"),
            None => stem.to_owned(),
        };
        collect(tmp.path(), &archive_name, cases, cache)?;
    }
    Ok(())
}

/// Loads every problem under `path`, sorted by name.
pub fn load_dataset(path: &Path) -> Result<RecognitionDataset, LoadError> {
    let mut cases = Vec::new();
    let root_name = if path.is_dir() {
        String::new()
    } else {
        path.file_name().unwrap_or_default().to_string_lossy().into_owned()
    };
    if !path.exists() {
        return Err(LoadError::Io {
            path: path.to_owned(),
            source: io::Error::from(io::ErrorKind::NotFound),
        });
    }
    collect(path, &root_name, &mut cases, &mut HashMap::new())?;
    if cases.is_empty() {
        return Err(LoadError::Empty { path: path.to_owned() });
    }
    cases.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(RecognitionDataset { cases })
}
