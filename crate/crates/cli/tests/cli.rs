use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn pqv2x(args: &[&str], backend: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqv2x"))
        .args(args)
        .env("PQV2X_BACKEND", backend)
        .output()
        .expect("binary runs")
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let s = scenario("reference.json");
    let mut args = vec!["run", "--scenario", s.to_str().unwrap(), "--output-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    pqv2x(&args, "mock")
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn run_writes_four_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fresh");
    let o = run_into(&out, &["--seed", "42"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(listing(&out), ["events.ndjson", "table1.csv", "table2.csv", "table3.json"]);
    let t1 = fs::read_to_string(out.join("table1.csv")).unwrap();
    assert_eq!(t1.lines().count(), 9);
}

#[test]
fn no_events_skips_the_log() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_into(tmp.path(), &["--no-events"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(listing(tmp.path()), ["table1.csv", "table2.csv", "table3.json"]);
}

#[test]
fn missing_scenario_exits_1() {
    let o = pqv2x(&["run", "--scenario", "/nonexistent/missing.json"], "mock");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn rerun_without_force_touches_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_into(tmp.path(), &[]).status.code(), Some(0));
    let t3 = tmp.path().join("table3.json");
    fs::write(&t3, "sentinel").unwrap();
    let o = run_into(tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(fs::read_to_string(&t3).unwrap(), "sentinel");

    assert_eq!(run_into(tmp.path(), &["--force"]).status.code(), Some(0));
    assert_ne!(fs::read_to_string(&t3).unwrap(), "sentinel");
}

#[test]
fn identical_runs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_into(&a, &[]);
    run_into(&b, &[]);
    for name in listing(&a) {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn validate_reports_field() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    let text = fs::read_to_string(scenario("reference.json")).unwrap();
    assert!(text.contains("\"step_size\": 0.1"));
    fs::write(&bad, text.replace("\"step_size\": 0.1", "\"step_size\": -0.1")).unwrap();
    let o = pqv2x(&["validate", "--scenario", bad.to_str().unwrap()], "mock");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step_size"));

    let good = scenario("reference.json");
    let o = pqv2x(&["validate", "--scenario", good.to_str().unwrap()], "mock");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn attack_suite_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("attack.json", 0, "forge"),
        ("attack_no_replay_window.json", 3, "replay"),
        ("reference.json", 0, "attack"),
    ];
    for (i, (file, code, needle)) in cases.iter().enumerate() {
        let s = scenario(file);
        let dir = tmp.path().join(i.to_string());
        let o = pqv2x(
            &["attack-suite", "--scenario", s.to_str().unwrap(), "--output-dir", dir.to_str().unwrap()],
            "mock",
        );
        assert_eq!(o.status.code(), Some(*code), "{file}");
        assert!(String::from_utf8_lossy(&o.stdout).contains(needle));
    }
}

#[test]
fn attack_suite_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario("attack.json");
    let o = pqv2x(
        &["attack-suite", "--scenario", s.to_str().unwrap(), "--output-dir", tmp.path().to_str().unwrap()],
        "mock",
    );
    let stdout = String::from_utf8_lossy(&o.stdout);
    let rows: Vec<Vec<&str>> = stdout.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(rows.len(), 3);
    let injected: u32 = rows.iter().map(|r| r[1].parse::<u32>().unwrap()).sum();
    let accepted: u32 = rows.iter().map(|r| r[2].parse::<u32>().unwrap()).sum();
    assert_eq!((injected, accepted), (30, 0));
}

#[test]
fn bench_refuses_mock() {
    let o = pqv2x(&["bench-crypto", "--iterations", "5"], "mock");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_single_iteration_reports_no_std() {
    let o = pqv2x(&["bench-crypto", "--iterations", "1"], "falcon");
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("Signature generation"));
    assert!(stdout.lines().filter(|l| l.ends_with("none")).count() == 2, "{stdout}");
}

#[test]
fn unknown_backend_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario("reference.json");
    let o = pqv2x(
        &["run", "--scenario", s.to_str().unwrap(), "--output-dir", tmp.path().to_str().unwrap()],
        "rsa",
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(listing(tmp.path()).is_empty());
}
