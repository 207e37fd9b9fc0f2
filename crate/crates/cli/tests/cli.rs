use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_trustsim");

const CONFIG: &str = r#"
schema_version = 1
scenario = "junction"
seed = 2

[scenario_overrides]
duration = 6.0
"#;

const SWEEP: &str = r#"
[axes]
seeds = 2
enabled = [true, false]

[base]
schema_version = 1
scenario = "junction"

[base.scenario_overrides]
duration = 4.0
"#;

fn trustsim(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("TRUSTSIM_OUT")
        .output()
        .unwrap()
}

fn files(dir: &Path, prefix: &str) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with(prefix))
        .collect();
    v.sort();
    v
}

#[test]
fn run_writes_trace_and_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("out");
    let o = trustsim(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("seed    2"));
    let traces = files(&out, "trace_junction_seed2_");
    assert_eq!(traces.len(), 1);
    let text = fs::read_to_string(out.join(&traces[0])).unwrap();
    assert!(text.starts_with("# trustsim trace v1\nsim_time_s,omega,weighted_ade_m,"));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.starts_with("# trustsim results v1\n"));
    assert_eq!(results.lines().count(), 3);
}

#[test]
fn bad_override_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let o = trustsim(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        "trustmhe.t_est=0",
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("trustmhe.t_est"));
}

#[test]
fn sweep_resumes_and_stats_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(&cfg, SWEEP).unwrap();
    let out = dir.path().join("out");
    let args = [
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "2",
    ];
    assert!(trustsim(&args).status.success());
    let results = out.join("results.csv");
    assert_eq!(fs::read_to_string(&results).unwrap().lines().count(), 2 + 4);
    // a second invocation finds nothing left to do
    assert!(trustsim(&args).status.success());
    assert_eq!(fs::read_to_string(&results).unwrap().lines().count(), 2 + 4);

    let report = dir.path().join("report");
    let o = trustsim(&[
        "stats",
        "--input",
        results.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--group-by",
        "t_est,mode",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("crashes"));
    for f in [
        "summary.csv",
        "report.json",
        "plot_t_est_crashes.csv",
        "plot_mode_progress.csv",
    ] {
        assert!(report.join(f).exists(), "{f}");
    }
}

#[test]
fn stats_rejects_foreign_tables() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    fs::write(&input, "a,b\n1,2\n").unwrap();
    let o = trustsim(&[
        "stats",
        "--input",
        input.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
}
