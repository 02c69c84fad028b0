use std::path::Path;
use std::process::{Command, Output};

fn homsmith(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_homsmith"));
    cmd.args(args);
    match seed_env {
        Some(s) => cmd.env("HOMSMITH_SEED", s),
        None => cmd.env_remove("HOMSMITH_SEED"),
    };
    cmd.output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn rq2_writes_tables_and_allocations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let r = homsmith(
        &[
            "rq2",
            "--benchmark",
            "motivating",
            "--budget",
            "40",
            "--out",
            path(out),
        ],
        None,
    );
    assert!(r.status.success(), "{}", text(&r.stderr));
    assert!(text(&r.stdout).starts_with("heuristic,dscore,sshom,unique_sshom\n"));
    for f in ["rq2.csv", "rq2.json", "rq2_trials.csv", "rq2_mutants.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let allocations: Vec<_> = std::fs::read_dir(out.join("allocations"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(allocations.len(), 4 * 5);
    assert!(allocations.iter().all(|f| f.ends_with(".json")));
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("allocations/mwm-trial0.json")).unwrap())
            .unwrap();
    assert_eq!(json["seed"], 0);
}

#[test]
fn cpda_build_then_show() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let common = [
        "--benchmark",
        "motivating",
        "--per-element",
        "10",
        "--out",
        out,
    ];
    let r = homsmith(&[&["cpda", "build"][..], &common].concat(), None);
    assert!(r.status.success(), "{}", text(&r.stderr));
    assert!(dir.path().join("observations.csv").is_file());
    assert!(dir.path().join("model.json").is_file());
    let r = homsmith(
        &[&["cpda", "show", "--top", "3"][..], &common].concat(),
        None,
    );
    assert!(r.status.success(), "{}", text(&r.stderr));
    let shown = text(&r.stdout);
    assert!(shown.starts_with("element,parents\n"));
    let ce_rows = shown.split("cause,effect,ce\n").nth(1).unwrap();
    assert!(ce_rows.lines().count() <= 3);
}

#[test]
fn sample_needs_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let r = homsmith(
        &[
            "sample",
            "mwm",
            "--budget",
            "1000",
            "--out",
            path(dir.path()),
        ],
        None,
    );
    assert_eq!(r.status.code(), Some(2));
    assert!(
        text(&r.stderr).starts_with("error: "),
        "{}",
        text(&r.stderr)
    );
    assert!(r.stdout.is_empty());
}

#[test]
fn sample_after_build() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let build = homsmith(
        &["cpda", "build", "--benchmark", "motivating", "--out", out],
        None,
    );
    assert!(build.status.success(), "{}", text(&build.stderr));
    let args = [
        "sample",
        "prop",
        "--benchmark",
        "motivating",
        "--budget",
        "30",
        "--out",
        out,
    ];
    let a = homsmith(&args, None);
    assert!(a.status.success(), "{}", text(&a.stderr));
    let json: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let total: u64 = json["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["count"].as_u64().unwrap())
        .sum();
    assert_eq!(total, 30);
    assert_eq!(homsmith(&args, None).stdout, a.stdout);
}

#[test]
fn usage_errors() {
    let r = homsmith(&["frobnicate"], None);
    assert_eq!(r.status.code(), Some(1));
    assert!(text(&r.stderr).contains("Usage"));
    let r = homsmith(&["rq2", "--budget", "lots"], None);
    assert_eq!(r.status.code(), Some(1));
    let r = homsmith(&["--help"], None);
    assert_eq!(r.status.code(), Some(0));
    assert!(text(&r.stdout).contains("rq3"));
}

#[test]
fn bad_inputs_exit_two() {
    let r = homsmith(&["run", "--benchmark", "no-such-benchmark"], None);
    assert_eq!(r.status.code(), Some(2));
    let r = homsmith(&["elements"], Some("minus one"));
    assert_eq!(r.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "budget = 0\n").unwrap();
    let r = homsmith(&["elements", "--config", path(&cfg)], None);
    assert_eq!(r.status.code(), Some(2));
}

fn recorded_seed(out: &Path) -> u64 {
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("model.json")).unwrap()).unwrap();
    json["seed"].as_u64().unwrap()
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "[experiment]\nseed = 11\nper_element = 5\n").unwrap();
    let build = |sub: &str, extra: &[&str], env: Option<&str>| {
        let out = dir.path().join(sub);
        let mut args = vec![
            "cpda",
            "build",
            "--benchmark",
            "motivating",
            "--out",
            path(&out),
        ];
        args.extend_from_slice(extra);
        let r = homsmith(&args, env);
        assert!(r.status.success(), "{}", text(&r.stderr));
        recorded_seed(&out)
    };
    assert_eq!(build("env", &[], Some("7")), 7);
    assert_eq!(build("file", &["--config", path(&cfg)], Some("7")), 11);
    assert_eq!(
        build("flag", &["--config", path(&cfg), "--seed", "3"], Some("7")),
        3
    );
    assert_eq!(build("default", &[], None), 0);
}

#[test]
fn run_check_and_elements() {
    let r = homsmith(&["run", "--check"], None);
    assert!(r.status.success(), "{}", text(&r.stderr));
    let r = homsmith(&["elements", "--benchmark", "motivating"], None);
    assert!(r.status.success());
    let rows = text(&r.stdout);
    assert_eq!(
        rows.lines().next(),
        Some("element,kind,function,line,column,sites")
    );
    assert_eq!(rows.lines().count(), 1 + 6);
}

#[test]
fn foms_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let r = homsmith(
        &["foms", "--benchmark", "motivating", "--element", "1"],
        None,
    );
    assert!(r.status.success(), "{}", text(&r.stderr));
    let catalog = dir.path().join("foms.txt");
    std::fs::write(&catalog, &r.stdout).unwrap();
    let r = homsmith(
        &[
            "evaluate",
            path(&catalog),
            "--benchmark",
            "motivating",
            "--out",
            path(dir.path()),
        ],
        None,
    );
    assert!(r.status.success(), "{}", text(&r.stderr));
    let foms = std::fs::read_to_string(&catalog).unwrap();
    let mutants = foms
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .count();
    assert_eq!(text(&r.stdout).lines().count(), 1 + mutants);
    let r = homsmith(
        &["foms", "--benchmark", "motivating", "--element", "99"],
        None,
    );
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn report_collects_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let r = homsmith(&["report", "--out", out], None);
    assert_eq!(r.status.code(), Some(2));
    let args = [
        "rq3",
        "--benchmark",
        "motivating",
        "--budget",
        "20",
        "--seed",
        "5",
        "--out",
        out,
    ];
    assert!(homsmith(&args, None).status.success());
    let r = homsmith(&["report", "--out", out], None);
    assert!(r.status.success(), "{}", text(&r.stderr));
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(
        lines.next(),
        Some("experiment,seed,trial,group,metric,value")
    );
    assert!(lines.all(|l| l.starts_with("rq3,5,")));
}
