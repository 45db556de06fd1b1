use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use landrec::dataset::{
    load_dataset, load_instance, match_hypothesis, parse_hypotheses, parse_observations, LoadError, OBS_LEVELS,
};
use landrec::harness::{evaluate, EvalConfig, Format, PriorMode};
use landrec::samples::{read_probabilities, read_sample_set, render_probabilities, write_sample_set, SampleSetMeta};
use landrec::synth::{synth_dataset, write_dataset, Scale, SynthDomain};
use landrec_core::episodes::{
    estimate_prior, generate_samples, make_distribution, DistributionKind, EpisodeError, SampleSpec,
};
use landrec_core::{
    extract_landmarks, solve, LandmarkKind, LandmarkModel, PlanningInstance, PriorDistribution, RecognitionError,
    SearchConfig, Strategy,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "landrec", version, about = "Landmark-based probabilistic goal recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior over the hypotheses given observed actions.
    Recognize(RecognizeArgs),
    /// Fact landmarks of the problem goal or of each hypothesis.
    Landmarks(LandmarksArgs),
    /// Solve a planning problem.
    Plan(PlanArgs),
    /// Generate labeled samples from a goal distribution.
    GenSamples(GenSamplesArgs),
    /// Estimate goal priors from a sample set.
    EstimatePrior(EstimatePriorArgs),
    /// Evaluate recognition over a dataset.
    Evaluate(EvaluateArgs),
    /// Write a synthetic dataset.
    MakeDataset(MakeDatasetArgs),
}

#[derive(Args)]
struct TaskArgs {
    #[arg(long)]
    domain: PathBuf,
    /// Problem file.
    #[arg(long, conflicts_with = "template", required_unless_present = "template")]
    problem: Option<PathBuf>,
    /// Problem file whose goal is a hypothesis placeholder.
    #[arg(long)]
    template: Option<PathBuf>,
}

impl TaskArgs {
    fn problem_path(&self) -> &Path {
        self.problem
            .as_deref()
            .or(self.template.as_deref())
            .expect("clap requires one")
    }

    fn load(&self) -> Result<PlanningInstance, CliError> {
        let problem = self.problem_path();
        Ok(load_instance(problem, &read(&self.domain)?, &read(problem)?)?)
    }
}

#[derive(Args)]
struct RecognizeArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[arg(long)]
    hyps: PathBuf,
    #[arg(long)]
    obs: PathBuf,
    /// The true hypothesis, to report whether it was recognized.
    #[arg(long)]
    real_hyp: Option<PathBuf>,
    /// One prior probability per hypothesis, one per line.
    #[arg(long)]
    priors: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LandmarksArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// Report landmarks per hypothesis instead of for the problem goal.
    #[arg(long)]
    hyps: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Breadth-first search for a shortest plan.
    #[arg(long)]
    optimal: bool,
    #[arg(long, default_value_t = 1_000_000)]
    node_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Single,
    Diverse,
    Explicit,
}

#[derive(Args)]
struct GenSamplesArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[arg(long)]
    hyps: PathBuf,
    #[arg(long, value_enum, default_value_t = Dist::Single)]
    dist: Dist,
    /// Preferred hypothesis, by 0-based line index.
    #[arg(long, conflicts_with = "real_hyp")]
    preferred: Option<usize>,
    /// Preferred hypothesis, given as a goal file.
    #[arg(long)]
    real_hyp: Option<PathBuf>,
    /// Goal probabilities for `--dist explicit`, one per line.
    #[arg(long)]
    priors: Option<PathBuf>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..=100))]
    obs_level: u32,
    /// Number of samples [default: 10 per hypothesis].
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ghost samples recorded for later estimation.
    #[arg(long, default_value_t = 1)]
    k: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimatePriorArgs {
    /// Sample set directory written by `gen-samples`.
    #[arg(long)]
    dir: PathBuf,
    /// Ghost samples per hypothesis [default: the sample set's value].
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset directory or archive.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = PriorMode::NoPriors)]
    mode: PriorMode,
    #[arg(long, default_value_t = 1)]
    k: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    samples_per_goal: usize,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MakeDatasetArgs {
    #[arg(long)]
    out: PathBuf,
    /// Tasks per domain; each task yields one problem per level.
    #[arg(long, default_value_t = 5)]
    per_domain: usize,
    #[arg(long, value_enum, value_delimiter = ',')]
    domains: Vec<SynthDomain>,
    #[arg(long, value_delimiter = ',')]
    levels: Vec<u32>,
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    scale: Scale,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Recognition(String),
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<RecognitionError> for CliError {
    fn from(e: RecognitionError) -> Self {
        match e {
            RecognitionError::PriorSize { .. } | RecognitionError::InvalidPrior { .. } => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Recognition(e.to_string()),
        }
    }
}

impl From<EpisodeError> for CliError {
    fn from(e: EpisodeError) -> Self {
        match e {
            EpisodeError::Recognition(r) => r.into(),
            EpisodeError::UnsolvableGoal { .. } | EpisodeError::NoSamples => CliError::Recognition(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct GoalRow {
    index: usize,
    hypothesis: String,
    landmarks: usize,
    likelihood: String,
    prior: f64,
    posterior: f64,
    top: bool,
}

fn recognize_cmd(a: &RecognizeArgs) -> Result<(), CliError> {
    let t = a.task.load()?;
    let hyps = parse_hypotheses(&t, &a.hyps, &read(&a.hyps)?)?;
    let obs = parse_observations(&t, &a.obs, &read(&a.obs)?)?;
    let real = match &a.real_hyp {
        Some(p) => Some(match_hypothesis(&t, &hyps, p, &read(p)?)?),
        None => None,
    };
    let priors = match &a.priors {
        Some(p) => Some(PriorDistribution::new(read_probabilities(p)?)?),
        None => None,
    };
    if let Some(p) = &priors {
        if p.len() != hyps.len() {
            return Err(RecognitionError::PriorSize {
                expected: hyps.len(),
                found: p.len(),
            }
            .into());
        }
    }
    let r = LandmarkModel::extract(&t, &hyps).recognize(&t, &obs, priors.as_ref())?;
    let rows: Vec<GoalRow> = hyps
        .iter()
        .enumerate()
        .map(|(i, g)| GoalRow {
            index: i,
            hypothesis: t.render_goal(g),
            landmarks: r.landmark_counts[i],
            likelihood: r.likelihoods[i].reduced().to_string(),
            prior: r.priors.get(i),
            posterior: r.posterior.probabilities[i],
            top: r.posterior.is_top(i),
        })
        .collect();
    let mut text = String::new();
    match a.format {
        Format::Table => {
            text += &format!(
                "{:>3} {:>5} {:>9} {:>8} {:>10}  hypothesis\n",
                "#", "|L|", "P(O|G)", "prior", "posterior"
            );
            for g in &rows {
                text += &format!(
                    "{:>3} {:>5} {:>9} {:>8.4} {:>10.6}{} {}\n",
                    g.index,
                    g.landmarks,
                    g.likelihood,
                    g.prior,
                    g.posterior,
                    if g.top { "*" } else { " " },
                    g.hypothesis
                );
            }
            if r.posterior.degenerate {
                text += "no hypothesis explains the observations; posterior equals the prior\n";
            }
            if let Some(real) = real {
                let verdict = if r.posterior.is_top(real) {
                    "recognized"
                } else {
                    "missed"
                };
                text += &format!("true goal #{real}: {verdict} (spread {})\n", r.posterior.argmax.len());
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for g in &rows {
                w.serialize(g).map_err(|e| CliError::Input(e.to_string()))?;
            }
            text = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
        }
        Format::Jsonl => {
            for g in &rows {
                text += &(serde_json::to_string(g).expect("rows serialize") + "\n");
            }
        }
    }
    emit(a.out.as_deref(), &text)
}

fn landmarks_cmd(a: &LandmarksArgs) -> Result<(), CliError> {
    let t = a.task.load()?;
    let goals = match &a.hyps {
        Some(h) => parse_hypotheses(&t, h, &read(h)?)?,
        None => vec![t.goal().clone()],
    };
    let mut text = String::new();
    for (i, g) in goals.iter().enumerate() {
        text += &format!("goal {i}: {}\n", t.render_goal(g));
        match extract_landmarks(&t, g) {
            Err(_) => text += "  unsolvable\n",
            Ok(set) => {
                for (f, kind) in set.iter() {
                    let tag = match kind {
                        LandmarkKind::GoalFact => "goal",
                        LandmarkKind::Derived => "derived",
                    };
                    text += &format!("  {:<8}{}\n", tag, t.fact_name(f));
                }
            }
        }
    }
    emit(a.out.as_deref(), &text)
}

fn plan_cmd(a: &PlanArgs) -> Result<(), CliError> {
    let t = a.task.load()?;
    let cfg = SearchConfig {
        strategy: if a.optimal {
            Strategy::UniformCost
        } else {
            Strategy::GreedyBestFirst
        },
        node_cap: a.node_cap,
        seed: a.seed,
        ..SearchConfig::default()
    };
    let plan = solve(&t, &cfg).map_err(|e| CliError::Recognition(e.to_string()))?;
    emit(a.out.as_deref(), &t.render_plan(&plan))
}

fn gen_samples_cmd(a: &GenSamplesArgs) -> Result<(), CliError> {
    let t = a.task.load()?;
    let hyps = parse_hypotheses(&t, &a.hyps, &read(&a.hyps)?)?;
    let preferred = match (&a.real_hyp, a.preferred) {
        (Some(p), _) => match_hypothesis(&t, &hyps, p, &read(p)?)?,
        (None, Some(i)) => i,
        (None, None) => 0,
    };
    let kind = match a.dist {
        Dist::Single => DistributionKind::NormalSingle,
        Dist::Diverse => DistributionKind::NormalDiverse,
        Dist::Explicit => {
            let p = a
                .priors
                .as_ref()
                .ok_or_else(|| CliError::Input("--dist explicit needs --priors".to_owned()))?;
            DistributionKind::Explicit(read_probabilities(p)?)
        }
    };
    let dist = make_distribution(&hyps, kind, preferred)?;
    let spec = SampleSpec {
        observability: a.obs_level,
        seed: a.seed,
        search: SearchConfig::default(),
    };
    let n = a.samples.unwrap_or(10 * hyps.len());
    let rp = generate_samples(&t, &hyps, &dist, n, &spec)?;
    let abs = |p: &Path| fs::canonicalize(p).unwrap_or_else(|_| p.to_owned());
    let meta = SampleSetMeta {
        domain: abs(&a.task.domain),
        problem: abs(a.task.problem_path()),
        hypotheses: abs(&a.hyps),
        observability: a.obs_level,
        seed: a.seed,
        k: a.k,
    };
    write_sample_set(&a.out, &meta, &rp, &dist)?;
    eprintln!("wrote {n} samples to {}", a.out.display());
    Ok(())
}

fn estimate_prior_cmd(a: &EstimatePriorArgs) -> Result<(), CliError> {
    let (meta, rp) = read_sample_set(&a.dir)?;
    let est = estimate_prior(&rp, a.k.unwrap_or(meta.k))?;
    emit(a.out.as_deref(), &render_probabilities(est.prior.probs()))?;
    for (i, (r, c)) in est.exact.iter().zip(est.counters.counts()).enumerate() {
        eprintln!("goal {i}: {} (count {c})", r.reduced());
    }
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&a.dataset)?;
    let config = EvalConfig {
        mode: a.mode,
        k: a.k,
        seed: a.seed,
        samples_per_goal: a.samples_per_goal,
        ..EvalConfig::default()
    };
    if a.k == 0 {
        return Err(CliError::Input("--k must be at least 1".to_owned()));
    }
    let report = evaluate(&dataset, &config).map_err(|e| CliError::Recognition(e.to_string()))?;
    emit(a.out.as_deref(), &report.render(a.format))
}

fn make_dataset_cmd(a: &MakeDatasetArgs) -> Result<(), CliError> {
    let domains = if a.domains.is_empty() {
        SynthDomain::ALL.to_vec()
    } else {
        a.domains.clone()
    };
    let levels = if a.levels.is_empty() {
        OBS_LEVELS.to_vec()
    } else {
        a.levels.clone()
    };
    if let Some(l) = levels.iter().find(|l| !(1..=100).contains(*l)) {
        return Err(CliError::Input(format!("observability level {l} is not in 1..=100")));
    }
    let cases = synth_dataset(&domains, a.per_domain, a.scale, &levels, a.seed);
    write_dataset(&a.out, &cases)?;
    eprintln!("wrote {} problems to {}", cases.len(), a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Recognize(a) => recognize_cmd(a),
        Command::Landmarks(a) => landmarks_cmd(a),
        Command::Plan(a) => plan_cmd(a),
        Command::GenSamples(a) => gen_samples_cmd(a),
        Command::EstimatePrior(a) => estimate_prior_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::MakeDataset(a) => make_dataset_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Input(_) => ExitCode::from(1),
                CliError::Recognition(_) => ExitCode::from(2),
            }
        }
    }
}
