use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use landrec::synth::{synth_dataset, Scale, SynthDomain};

fn landrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landrec")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn case(dir: &Path) -> PathBuf {
    case_of(dir, SynthDomain::EasyIpcGrid)
}

fn case_of(dir: &Path, domain: SynthDomain) -> PathBuf {
    let cases = synth_dataset(&[domain], 1, Scale::Desk, &[100], 1);
    let d = dir.join("case");
    cases[0].1.write(&d).unwrap();
    d
}

fn arg(p: PathBuf) -> String {
    p.to_string_lossy().into_owned()
}

fn recognize_args(d: &Path) -> Vec<String> {
    vec![
        "recognize".into(),
        "--domain".into(),
        arg(d.join("domain.pddl")),
        "--template".into(),
        arg(d.join("template.pddl")),
        "--hyps".into(),
        arg(d.join("hyps.dat")),
        "--obs".into(),
        arg(d.join("obs.dat")),
    ]
}

fn run(args: &[String]) -> Output {
    landrec(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn recognize_full_observation() {
    let tmp = tempfile::tempdir().unwrap();
    let d = case(tmp.path());
    let mut args = recognize_args(&d);
    args.extend(["--real-hyp".into(), arg(d.join("real_hyp.dat"))]);
    let o = run(&args);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains(": recognized"), "{text}");

    args.extend(["--format".into(), "csv".into()]);
    let text = stdout(&run(&args));
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "index,hypothesis,landmarks,likelihood,prior,posterior,top"
    );
    let total: f64 = lines
        .map(|l| l.rsplit(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn priors_file_must_match_hypotheses() {
    let tmp = tempfile::tempdir().unwrap();
    let d = case(tmp.path());
    let priors = tmp.path().join("priors");
    fs::write(&priors, "0.5\n0.5\n").unwrap();
    let mut args = recognize_args(&d);
    args.extend(["--priors".into(), arg(priors)]);
    assert_eq!(run(&args).status.code(), Some(1));
}

#[test]
fn input_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let d = case(tmp.path());
    fs::write(d.join("obs.dat"), "(teleport somewhere)\n").unwrap();
    let o = run(&recognize_args(&d));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(teleport somewhere)"));

    let mut args = recognize_args(&d);
    args[2] = arg(tmp.path().join("missing.pddl"));
    assert_eq!(run(&args).status.code(), Some(1));
}

#[test]
fn all_unsolvable_hypotheses_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let d = case_of(tmp.path(), SynthDomain::BlocksWorld);
    fs::write(d.join("obs.dat"), "").unwrap();
    fs::write(d.join("hyps.dat"), "(on a a)\n").unwrap();
    let o = run(&recognize_args(&d));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn plan_and_landmarks() {
    let tmp = tempfile::tempdir().unwrap();
    let d = case(tmp.path());
    let problem = tmp.path().join("problem.pddl");
    let goal = fs::read_to_string(d.join("real_hyp.dat")).unwrap().replace(',', " ");
    let text = fs::read_to_string(d.join("template.pddl"))
        .unwrap()
        .replace("<HYPOTHESIS>", goal.trim());
    fs::write(&problem, text).unwrap();
    let task = [
        "--domain",
        &arg(d.join("domain.pddl")),
        "--problem",
        &arg(problem.clone()),
    ]
    .map(str::to_owned);
    let mut args = vec!["plan".to_owned(), "--optimal".into()];
    args.extend(task.iter().cloned());
    let o = run(&args);
    assert!(o.status.success());
    assert!(stdout(&o).lines().count() > 0);
    let mut args = vec!["landmarks".to_owned()];
    args.extend(task.iter().cloned());
    let text = stdout(&run(&args));
    assert!(text.starts_with("goal 0: "));
    assert!(text.contains("goal    "));
}

#[test]
fn samples_then_prior_estimate() {
    let tmp = tempfile::tempdir().unwrap();
    let d = case(tmp.path());
    let set = tmp.path().join("set");
    let o = landrec(&[
        "gen-samples",
        "--domain",
        &arg(d.join("domain.pddl")),
        "--template",
        &arg(d.join("template.pddl")),
        "--hyps",
        &arg(d.join("hyps.dat")),
        "--dist",
        "single",
        "--preferred",
        "1",
        "--samples",
        "40",
        "--seed",
        "3",
        "--out",
        &arg(set.clone()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(set.join("sample_39.obs").is_file());
    assert!(set.join("hidden").join("distribution").is_file());
    let o = landrec(&["estimate-prior", "--dir", &arg(set)]);
    assert!(o.status.success());
    let probs: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(probs.iter().all(|&p| p > 0.0));
    let top = (0..probs.len()).max_by(|&a, &b| probs[a].total_cmp(&probs[b])).unwrap();
    assert_eq!(top, 1);
}

#[test]
fn make_dataset_then_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ds");
    let o = landrec(&[
        "make-dataset",
        "--out",
        &arg(out.clone()),
        "--per-domain",
        "1",
        "--domains",
        "blocks-world,intrusion-detection",
        "--levels",
        "50,100",
    ]);
    assert!(o.status.success());
    let o = landrec(&["evaluate", "--dataset", &arg(out), "--format", "jsonl"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let records: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.iter().filter(|r| r["record"] == "problem").count(), 4);
    assert_eq!(records.iter().filter(|r| r["record"] == "aggregate").count(), 4);
}
