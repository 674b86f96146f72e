use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fairdispatch_cli::{EvalRecord, MetricSummary, RunManifest};
use fairdispatch_core::habic::EpisodeLog;
use fairdispatch_core::io::read_jsonl;
use tempfile::TempDir;

const SMALL: [&str; 10] = [
    "--set",
    "grid_rows=4",
    "--set",
    "grid_cols=4",
    "--set",
    "n_drivers=10",
    "--set",
    "orders_per_day=8000",
    "--set",
    "episode_slots=45",
];

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fairdispatch"));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("FAIRDISPATCH_")) {
        c.env_remove(k);
    }
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend_from_slice(&SMALL);
    v
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn scenario(dir: &TempDir) -> PathBuf {
    let sc = dir.path().join("sc");
    ok(&with_small(&["generate", "--out", p(&sc)]));
    sc
}

fn train(sc: &Path, out: &Path, episodes: &str, extra: &[&str]) -> String {
    let mut args = with_small(&["train", "--scenario", p(sc), "--out", p(out), "--episodes", episodes, "--seed", "3"]);
    args.extend_from_slice(extra);
    ok(&args)
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn generate_writes_files_and_repeats_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let printed = ok(&with_small(&["generate", "--out", p(&a), "--seed", "7"]));
    ok(&with_small(&["generate", "--out", p(&b), "--seed", "7"]));
    for name in ["scenario.toml", "demand.csv", "history.csv", "orders.csv", "benchmark.csv"] {
        assert!(printed.contains(name), "{name} not printed");
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let m = manifest(&a);
    assert_eq!(m.command, "generate");
    assert_eq!(m.seed, Some(7));
    assert_eq!(m.status, "ok");
    assert_eq!(m.exit_code, Some(0));
    assert!(m.finished_at.is_some());
    assert!(!m.build_id.is_empty());
}

#[test]
fn missing_required_key_exits_2_and_names_it() {
    let dir = TempDir::new().unwrap();
    let out = run(&["generate", "--out", p(&dir.path().join("x")), "--set", "grid_rows=4", "--set", "n_drivers=5"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid_cols"));
    let m = manifest(&dir.path().join("x"));
    assert_eq!(m.status, "failed");
    assert_eq!(m.exit_code, Some(2));
}

#[test]
fn environment_variables_supply_config_keys() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .args(["generate", "--out", p(&dir.path().join("x")), "--set", "grid_rows=3", "--set", "n_drivers=4"])
        .env("FAIRDISPATCH_GRID_COLS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let toml = fs::read_to_string(dir.path().join("x/scenario.toml")).unwrap();
    assert!(toml.contains("grid_cols = 2"));
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir);
    let out_dir = dir.path().join("o");
    let cases: Vec<Vec<&str>> = vec![
        with_small(&["generate", "--out", p(&out_dir), "--config", "/no/such/config.toml"]),
        with_small(&["generate", "--out", p(&out_dir), "--set", "alpha=2"]),
        with_small(&["generate", "--out", p(&out_dir), "--set", "no_such_key=1"]),
        with_small(&["evaluate", "--scenario", p(&sc), "--out", p(&out_dir), "--policy", "greedy"]),
        with_small(&["evaluate", "--scenario", p(&sc), "--out", p(&out_dir), "--policy", "checkpoint"]),
        // scenario built for a 4x4 grid, config asks for 5x4
        vec!["train", "--scenario", p(&sc), "--out", p(&out_dir), "--set", "grid_rows=5", "--set", "grid_cols=4", "--set", "n_drivers=10"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn data_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir);
    let out_dir = dir.path().join("o");
    let missing = dir.path().join("missing.json");
    let out = run(&with_small(&[
        "evaluate", "--scenario", p(&sc), "--out", p(&out_dir), "--policy", "checkpoint", "--checkpoint", p(&missing),
    ]));
    assert_eq!(code(&out), 3);

    let broken = dir.path().join("broken");
    fs::create_dir_all(&broken).unwrap();
    for name in ["scenario.toml", "demand.csv", "history.csv", "orders.csv"] {
        fs::copy(sc.join(name), broken.join(name)).unwrap();
    }
    fs::write(broken.join("demand.csv"), "region_id,period,intensity\n0,0,abc\n").unwrap();
    let out = run(&with_small(&["evaluate", "--scenario", p(&broken), "--out", p(&out_dir), "--policy", "md"]));
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("demand.csv:2"));

    let out = run(&["report", "--run", p(&dir.path().join("nothing"))]);
    assert_eq!(code(&out), 3);
}

#[test]
fn empty_demand_is_reported_as_an_error() {
    let dir = TempDir::new().unwrap();
    let sc = dir.path().join("empty");
    let no_orders = |args: &[&'static str]| {
        let mut v: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        v.extend(SMALL.iter().map(|s| s.to_string()));
        v.extend(["--set".to_string(), "orders_per_day=0".to_string()]);
        v
    };
    let e = dir.path().join("e");
    let mut gen = no_orders(&["generate"]);
    gen.extend(["--out".into(), p(&sc).into()]);
    assert!(bin().args(&gen).status().unwrap().success());
    let mut eval = no_orders(&["evaluate", "--policy", "md"]);
    eval.extend(["--scenario".into(), p(&sc).into(), "--out".into(), p(&e).into()]);
    let out = bin().args(&eval).output().unwrap();
    assert_eq!(code(&out), 3);
    assert!(!dir.path().join("e/results.jsonl").exists());
}

#[test]
fn one_episode_gives_one_log_line() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir);
    let run_dir = dir.path().join("run");
    let printed = train(&sc, &run_dir, "1", &[]);
    assert!(printed.contains("not converged"));
    let text = fs::read_to_string(run_dir.join("train_log.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 1);
    let logs: Vec<EpisodeLog> = read_jsonl(&run_dir.join("train_log.jsonl")).unwrap();
    assert_eq!(logs[0].episode, 0);
    assert!(logs[0].wall_ms.is_none());
    assert!(run_dir.join("checkpoint.json").exists());
}

#[test]
fn resume_continues_episode_numbering() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir);
    let run_dir = dir.path().join("run");
    train(&sc, &run_dir, "2", &[]);
    let ck = run_dir.join("checkpoint.json");
    train(&sc, &run_dir, "2", &["--resume", p(&ck)]);
    let logs: Vec<EpisodeLog> = read_jsonl(&run_dir.join("train_log.jsonl")).unwrap();
    assert_eq!(logs.iter().map(|l| l.episode).collect::<Vec<_>>(), vec![0, 1, 2, 3]);

    let straight = dir.path().join("straight");
    train(&sc, &straight, "4", &[]);
    assert_eq!(
        fs::read(straight.join("train_log.jsonl")).unwrap(),
        fs::read(run_dir.join("train_log.jsonl")).unwrap()
    );
    assert_eq!(fs::read(straight.join("checkpoint.json")).unwrap(), fs::read(&ck).unwrap());
}

#[test]
fn training_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    train(&sc, &a, "2", &[]);
    train(&sc, &b, "2", &[]);
    for name in ["train_log.jsonl", "train_region_waits.csv", "checkpoint.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn evaluation_writes_records_plus_aggregate_and_repeats() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir);
    let run_dir = dir.path().join("run");
    train(&sc, &run_dir, "1", &[]);
    let ck = run_dir.join("checkpoint.json");
    for policy in ["md", "random", "checkpoint"] {
        let (a, b) = (dir.path().join(format!("{policy}-a")), dir.path().join(format!("{policy}-b")));
        for out in [&a, &b] {
            ok(&with_small(&[
                "evaluate", "--scenario", p(&sc), "--out", p(out), "--policy", policy, "--checkpoint", p(&ck), "--episodes", "5",
                "--seed", "11",
            ]));
        }
        let records: Vec<EvalRecord> = read_jsonl(&a.join("results.jsonl")).unwrap();
        assert_eq!(records.len(), 6);
        let seeds: Vec<u64> = records
            .iter()
            .filter_map(|r| match r {
                EvalRecord::Episode { seed, .. } => Some(*seed),
                EvalRecord::Aggregate { .. } => None,
            })
            .collect();
        assert_eq!(seeds, vec![11, 12, 13, 14, 15]);
        assert!(matches!(records[5], EvalRecord::Aggregate { episodes: 5, .. }));
        assert_eq!(fs::read(a.join("results.jsonl")).unwrap(), fs::read(b.join("results.jsonl")).unwrap());
        assert_eq!(fs::read(a.join("region_waits.csv")).unwrap(), fs::read(b.join("region_waits.csv")).unwrap());
        let first = fs::read_to_string(a.join("results.jsonl")).unwrap();
        for key in ["\"apwt\"", "\"pf_inter\"", "\"pf_intra\"", "\"pvr\"", "\"lambda\"", "\"mean_cost\""] {
            assert!(first.lines().next().unwrap().contains(key), "{key} missing");
        }
    }
}

#[test]
fn unconstrained_policy_needs_an_unconstrained_checkpoint() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir);
    let (con, uncon) = (dir.path().join("con"), dir.path().join("uncon"));
    train(&sc, &con, "1", &[]);
    train(&sc, &uncon, "1", &["--set", "constrained=false"]);
    let eval = |ck: &Path| {
        run(&with_small(&[
            "evaluate", "--scenario", p(&sc), "--out", p(&dir.path().join("e")), "--policy", "habic_unconstrained",
            "--checkpoint", p(&ck.join("checkpoint.json")), "--episodes", "1",
        ]))
    };
    assert_eq!(code(&eval(&con)), 2);
    let out = eval(&uncon);
    assert!(out.status.success());
    let records: Vec<EvalRecord> = read_jsonl(&dir.path().join("e/results.jsonl")).unwrap();
    assert!(matches!(&records[0], EvalRecord::Episode { method, .. } if method == "habic_unconstrained"));
}

fn write_aggregate(path: &Path, method: &str, apwt: f64, pf_inter: f64, pf_intra: f64, pvr: f64) {
    let mean = MetricSummary { apwt, pf_inter, pf_intra, pvr, mean_cost: 0.1, lambda: 0.0, dispatches: 10.0, expired: 0.0 };
    let std = MetricSummary { apwt: 0.0, pf_inter: 0.0, pf_intra: 0.0, pvr: 0.0, mean_cost: 0.0, lambda: 0.0, dispatches: 0.0, expired: 0.0 };
    let rec = EvalRecord::Aggregate { method: method.into(), episodes: 1, mean, std };
    fs::write(path, format!("{}\n", serde_json::to_string(&rec).unwrap())).unwrap();
}

fn ratio_rows(dir: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(dir.join("ratios.csv")).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn compare_uses_md_as_default_reference() {
    let dir = TempDir::new().unwrap();
    let (md, better, hand) = (dir.path().join("md.jsonl"), dir.path().join("better.jsonl"), dir.path().join("hand.jsonl"));
    write_aggregate(&md, "md", 200.0, 10.0, 4.0, 0.5);
    write_aggregate(&better, "habic", 180.0, 5.0, 3.0, 0.4);
    write_aggregate(&hand, "random", 250.0, 12.5, 4.0, 0.25);
    let out_dir = dir.path().join("cmp");
    let table = ok(&["compare", "--candidate", p(&md), "--candidate", p(&better), "--candidate", p(&hand), "--out", p(&out_dir)]);
    assert!(table.starts_with("reference: md"));
    let rows = ratio_rows(&out_dir);
    let nums = |r: &Vec<String>| r[1..].iter().map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>();
    assert_eq!(rows[0][0], "md");
    assert!(nums(&rows[0]).iter().all(|&x| x == 0.0));
    assert!(nums(&rows[1]).iter().all(|&x| x > 0.0));
    let expect = [-25.0, -25.0, 0.0, 50.0];
    for (got, want) in nums(&rows[2]).iter().zip(expect) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn compare_needs_a_reference_and_aggregates() {
    let dir = TempDir::new().unwrap();
    let cand = dir.path().join("c.jsonl");
    write_aggregate(&cand, "habic", 180.0, 5.0, 3.0, 0.4);
    assert_eq!(code(&run(&["compare", "--candidate", p(&cand)])), 2);
    let empty = dir.path().join("e.jsonl");
    fs::write(&empty, "").unwrap();
    assert_eq!(code(&run(&["compare", "--reference", p(&empty), "--candidate", p(&cand)])), 3);
    let explicit = ok(&["compare", "--reference", p(&cand), "--candidate", p(&cand)]);
    assert!(explicit.contains("0.00%"));
}

#[test]
fn report_summarises_training_and_evaluation() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir);
    let run_dir = dir.path().join("run");
    train(&sc, &run_dir, "2", &[]);
    let text = ok(&["report", "--run", p(&run_dir)]);
    assert!(text.contains("training: 2 episodes"));
    ok(&with_small(&["evaluate", "--scenario", p(&sc), "--out", p(&run_dir), "--policy", "md", "--episodes", "1"]));
    let text = ok(&["report", "--run", p(&run_dir)]);
    assert!(text.contains("evaluation (md)"));
}
