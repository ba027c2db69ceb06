use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use transport_core::data::{sample_dgp, write_csv, DgpSpec};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_transport"));
    cmd.env_remove("TRANSPORT_WORKERS");
    cmd
}

fn diagram(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../diagrams").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn check_admissible_set() {
    let o = run(&["identify", diagram("fig1b.dag").to_str().unwrap(), "--check", "B,G"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("s-admissible"));
}

#[test]
fn check_inadmissible_set_names_the_open_path() {
    let o = run(&["identify", diagram("fig1b.dag").to_str().unwrap(), "--check", "B"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("not s-admissible: open path S_G → G → Y"), "{}", stdout(&o));
}

#[test]
fn enumeration_lists_the_minimal_set_first() {
    let o = run(&["identify", diagram("fig2.dag").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let sets: Vec<&str> = text.lines().filter(|l| l.starts_with("  ")).map(str::trim).collect();
    assert_eq!(sets.first(), Some(&"{MSTS}"), "{text}");
    assert!(text.contains("s-admissible sets (32)"), "{text}");
}

#[test]
fn identify_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("cycle.dag");
    std::fs::write(&bad, "A -> B; B -> A; exposure A; outcome B").unwrap();
    assert_eq!(run(&["identify", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["identify", "missing.dag"]).status.code(), Some(1));
    let o = run(&["identify", diagram("fig2.dag").to_str().unwrap(), "--limit", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn identify_reports_when_nothing_is_admissible() {
    let o = run(&["identify", diagram("fig1b.dag").to_str().unwrap(), "--pool", "B"]);
    assert_eq!(o.status.code(), Some(2));
}

fn dgp_csv(dir: &Path) -> PathBuf {
    let path = dir.join("m1.csv");
    write_csv(&sample_dgp(&DgpSpec::new(1, 5000, 8).unwrap()).unwrap(), &path).unwrap();
    path
}

#[test]
fn transport_estimates_the_target_effect() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dgp_csv(dir.path());
    let o = run(&["transport", csv.to_str().unwrap(), "--set", "MSTS", "--boot", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let e = &json["estimate"];
    let (phi, se) = (e["phi_hat"].as_f64().unwrap(), e["se"].as_f64().unwrap());
    assert!((phi - 40.0).abs() < 3.0 * se, "{phi} ± {se}");
    assert!(e["ci_low"].as_f64().unwrap() < phi && phi < e["ci_high"].as_f64().unwrap());
    assert_eq!(json["transport_set"], serde_json::json!(["MSTS"]));
    assert_eq!(json["positivity"]["covariates"][0]["name"], "MSTS");
    assert_eq!(json["n_source"].as_u64().unwrap() + json["n_target"].as_u64().unwrap(), 5000);
}

#[test]
fn transport_with_empty_set_and_unknown_covariate() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dgp_csv(dir.path());
    let o = run(&["transport", csv.to_str().unwrap(), "--set", "", "--boot", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // without adjustment the source effect of about 70 comes through
    assert!((json["estimate"]["phi_hat"].as_f64().unwrap() - 70.0).abs() < 5.0);

    let o = run(&["transport", csv.to_str().unwrap(), "--set", "NOPE"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("NOPE"), "{}", stderr(&o));
}

fn write_config(dir: &Path, simulation: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let text = format!("[simulation]\n{simulation}\n[output]\ncsv = \"out/report.csv\"\ntable = \"out/report.txt\"\n");
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL: &str = "models = [1, 3]\nreplicates = 3\nn_per_replicate = 1000\nn_boot = 10\nmaster_seed = 5";

#[test]
fn simulate_writes_identical_reports_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let o = run(&["simulate", config.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = std::fs::read(dir.path().join("out/report.csv")).unwrap();
    let table = std::fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert_eq!(stdout(&o), table);
    assert!(table.contains("TS11"));

    let o = bin().args(["simulate", config.to_str().unwrap()]).env("TRANSPORT_WORKERS", "1").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(dir.path().join("out/report.csv")).unwrap(), first);
}

#[test]
fn simulate_rejects_invalid_configs_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "replicates = 1");
    let o = run(&["simulate", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("simulation.replicates"), "{}", stderr(&o));

    let config = write_config(dir.path(), "replicatez = 3");
    let o = run(&["simulate", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("replicatez"), "{}", stderr(&o));

    let config = write_config(dir.path(), "[[simulation.transport_sets]]\nname = \"X\"\nmembers = [\"MSTS\", \"W_q\"]");
    let o = run(&["simulate", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("simulation.transport_sets[0].members[1]"), "{}", stderr(&o));

    let o = bin().args(["simulate", config.to_str().unwrap()]).env("TRANSPORT_WORKERS", "none").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn shipped_config_parses_and_matches_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_desk.cfg");
    let text = std::fs::read_to_string(path).unwrap();
    let table: toml::Table = text.parse().unwrap();
    let sim: transport_core::simulate::SimConfig = table["simulation"].clone().try_into().unwrap();
    assert_eq!(sim, transport_core::simulate::SimConfig::default());
}

#[test]
fn toy_table_transports_the_risk_difference() {
    let o = run(&["toy"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let exact: Vec<&str> = text.lines().take_while(|l| !l.is_empty()).collect();
    let rd = |label: &str| {
        let line = exact.iter().find(|l| l.starts_with(label)).unwrap();
        let cols: Vec<&str> = line.split_whitespace().rev().take(2).collect();
        (cols[1].to_string(), cols[0].to_string())
    };
    for label in ["Target", "Transported using {B, G}", "Transported using {B}"] {
        assert_eq!(rd(label).0, "-0.121", "{label}\n{text}");
    }
    assert_ne!(rd("Transported using {B, G}").1, rd("Transported using {B}").1);
}

#[test]
fn toy_is_deterministic_and_checks_n() {
    let a = run(&["toy", "--n", "100", "--seed", "4"]);
    let b = run(&["toy", "--n", "100", "--seed", "4"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(run(&["toy", "--n", "99"]).status.code(), Some(1));
}

#[test]
fn help_exits_zero_everywhere() {
    for args in [&["--help"][..], &["identify", "--help"], &["transport", "--help"], &["simulate", "--help"], &["toy", "--help"]] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(stdout(&o).contains("Usage"), "{args:?}");
    }
    assert_eq!(run(&["identify", "--help"]).status.code(), Some(0));
    assert!(stdout(&run(&["identify", "--help"])).contains("--check"));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
}
