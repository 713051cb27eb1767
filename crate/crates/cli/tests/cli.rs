use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const MAP: &str = "type octile\nheight 4\nwidth 4\nmap\n....\n....\n....\n....\n";
const SCEN: &str = r#"{
  "agents": [[0, 0], [3, 0]],
  "tasks": [{"k": 2, "starts": [[1, 1], [2, 1]], "goals": [[0, 3], [1, 3]]}]
}"#;

fn cttapf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cttapf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("pair.map"), MAP).unwrap();
    fs::write(dir.path().join("pair.scen.json"), SCEN).unwrap();
    dir
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn solve_then_validate() {
    let dir = fixture();
    let d = dir.path();
    let out = cttapf(&[
        "solve", "--map", &p(d, "pair.map"), "--scen", &p(d, "pair.scen.json"),
        "--algo", "optimal", "--expansion", "incremental", "--resolver", "sym",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("status solved soc 10"), "{}", stdout(&out));
    let sol = p(d, "pair.sol.json");
    assert!(Path::new(&sol).exists());

    let out = cttapf(&["validate", "--map", &p(d, "pair.map"), "--scen", &p(d, "pair.scen.json"), &sol]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    let svg = p(d, "pair.svg");
    let out = cttapf(&["render", "--map", &p(d, "pair.map"), "--scen", &p(d, "pair.scen.json"), &sol, "--out", &svg]);
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn tampered_solution_fails_validation() {
    let dir = fixture();
    let d = dir.path();
    let sol = p(d, "s.sol.json");
    cttapf(&["solve", "--map", &p(d, "pair.map"), "--scen", &p(d, "pair.scen.json"), "--out", &sol]);
    let text = fs::read_to_string(&sol).unwrap().replace("\"soc\": 10", "\"soc\": 9");
    fs::write(&sol, text).unwrap();
    let out = cttapf(&["validate", "--map", &p(d, "pair.map"), "--scen", &p(d, "pair.scen.json"), &sol]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("SocMismatch"), "{}", stdout(&out));
}

#[test]
fn oracle_output_validates() {
    let dir = fixture();
    let d = dir.path();
    let sol = p(d, "o.sol.json");
    let out = cttapf(&["oracle", "--map", &p(d, "pair.map"), "--scen", &p(d, "pair.scen.json"), "--out", &sol]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("soc 10"));
    let out = cttapf(&["validate", "--map", &p(d, "pair.map"), "--scen", &p(d, "pair.scen.json"), &sol]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn timeout_exits_one_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let prefix = p(d, "hard");
    let out = cttapf(&[
        "generate", "--scenario-family", "collision-rich", "--width", "10", "--height", "10",
        "--tasks", "1:4,2:4", "--agents", "6", "--seed", "3", "--out", &prefix,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = p(d, "hard.sol.json");
    let out = cttapf(&[
        "solve", "--map", &p(d, "hard.map"), "--scen", &p(d, "hard.scen.json"),
        "--algo", "optimal", "--timeout", "0.001", "--out", &sol,
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("status timeout"));
    assert!(fs::read_to_string(sol).unwrap().contains("\"timeout\""));
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a", "b"] {
        let out = cttapf(&[
            "generate", "--scenario-family", "spatial", "--obstacle-density", "0.1",
            "--tasks", "1:2,2:1", "--agents", "3", "--seed", "11", "--out", &p(d, name),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    for ext in ["map", "scen.json"] {
        let a = fs::read(d.join(format!("a.{ext}"))).unwrap();
        let b = fs::read(d.join(format!("b.{ext}"))).unwrap();
        assert_eq!(a, b, "{ext} differs");
    }
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let dir = fixture();
    let d = dir.path();
    let out = cttapf(&["solve", "--map", &p(d, "pair.map"), "--scen", &p(d, "pair.scen.json"), "--algo", "fastest"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cttapf(&["solve", "--map", &p(d, "missing.map"), "--scen", &p(d, "pair.scen.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.map"));
    fs::write(d.join("bad.map"), "type octile\nheight 1\nwidth 2\nmap\n.x\n").unwrap();
    let out = cttapf(&["solve", "--map", &p(d, "bad.map"), "--scen", &p(d, "pair.scen.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));
}

#[test]
fn bench_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let plan = r#"{
      "family": "random", "width": 6, "height": 6, "obstacleDensity": 0.0,
      "targetTypeRatio": {"1": 0.5, "2": 0.5}, "taskAgentRatio": 1.0, "maxTasks": 2,
      "maxAgents": 3, "seeds": [1], "timeoutSeconds": 5.0,
      "algorithms": [{"algo": "optimal", "expansion": "incremental", "resolver": "sym"},
                     {"algo": "greedy-pp", "expansion": "incremental", "resolver": "sym"}],
      "parallelism": 1
    }"#;
    fs::write(d.join("plan.json"), plan).unwrap();
    let out = cttapf(&["bench", &p(d, "plan.json"), "--out", &p(d, "report.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(d.join("report.json")).unwrap().contains("records"));
    assert!(fs::read_to_string(d.join("report.csv")).unwrap().lines().count() > 1);
}
