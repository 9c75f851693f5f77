use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn lts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lts")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn csv_rows(path: &Path) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().clone();
    (header, reader.records().map(Result::unwrap).collect())
}

// No `k`: a one-state plant has no stable part for the oracle to split off.
const SCALAR_PLANT: &str = r#"{"n":1,"m":1,"A":[[1.5]],"B":[[1.0]],"noise":{"kind":"gaussian","sigma":0.01},"seed":0}"#;
const TWO_STATE_NOISELESS: &str =
    r#"{"n":2,"m":1,"k":1,"A":[[2.0,1.0],[0.0,0.5]],"B":[[1.0],[0.0]],"noise":{"kind":"none"},"seed":0}"#;

#[test]
fn gen_writes_a_plant_that_parses_back() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p.json");
    let res = lts(&["gen", "--n", "8", "--k", "2", "--m", "2", "--sigma", "0.01", "--seed", "1", "--out", path_str(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let a = json["A"].as_array().unwrap();
    assert_eq!(a.len(), 8);
    assert!(a.iter().all(|row| row.as_array().unwrap().len() == 8));
    assert_eq!(json["B"][0].as_array().unwrap().len(), 2);
}

#[test]
fn gen_usage_and_domain_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p.json");
    assert_eq!(code(&lts(&["gen", "--k", "1", "--out", path_str(&out)])), 64);
    assert_eq!(code(&lts(&["gen", "--n", "4", "--k", "0", "--out", path_str(&out)])), 2);
    assert_eq!(code(&lts(&["--help"])), 0);
}

#[test]
fn run_rejects_zero_horizon() {
    let dir = TempDir::new().unwrap();
    let plant = write(&dir, "p.json", SCALAR_PLANT);
    assert_eq!(code(&lts(&["run", "--plant", &plant, "--k-hat", "1", "--T", "0", "--out-dir", path_str(dir.path())])), 64);
}

#[test]
fn scalar_plant_decays_in_closed_loop() {
    let dir = TempDir::new().unwrap();
    let plant = write(&dir, "p.json", SCALAR_PLANT);
    let res = lts(&["run", "--plant", &plant, "--T", "20", "--seed", "3", "--k-hat", "1", "--epsilon", "0.05", "--out-dir", path_str(dir.path())]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let (header, rows) = csv_rows(&dir.path().join("trajectory.csv"));
    assert_eq!(header.iter().collect::<Vec<_>>(), ["t", "norm_x", "phase", "u_norm"]);
    let closed: Vec<f64> = rows.iter().filter(|r| &r[2] == "closed-loop").map(|r| r[1].parse().unwrap()).collect();
    assert!(closed.len() > 100);
    let head = closed[..10].iter().cloned().fold(0.0, f64::max);
    let tail = closed[closed.len() - 50..].iter().cloned().fold(0.0, f64::max);
    assert!(tail < head, "tail {tail} head {head}");
    assert!(tail < 1.0);
}

#[test]
fn noiseless_plant_report_is_exact() {
    let dir = TempDir::new().unwrap();
    let plant = write(&dir, "p.json", TWO_STATE_NOISELESS);
    let config = write(&dir, "c.json", r#"{"lts":{"T":30,"tau":2,"x0":[1e-3,1e-3],"gamma":1e-9}}"#);
    let res = lts(&["run", "--config", &config, "--plant", &plant, "--out-dir", path_str(dir.path())]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["cert"]["proj_err"].as_f64().unwrap() < 1e-6);
    assert_eq!(report["status"], "stabilized");

    let res = lts(&["check-bounds", "--config", &config, "--plant", &plant, "--out-dir", path_str(dir.path())]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn stage_error_leaves_partial_csv() {
    let dir = TempDir::new().unwrap();
    let plant = write(&dir, "p.json", TWO_STATE_NOISELESS);
    // From the origin a noiseless plant never moves, so stage 1 sees no data.
    let res = lts(&["run", "--plant", &plant, "--T", "5", "--out-dir", path_str(dir.path())]);
    assert_eq!(code(&res), 3);
    let (_, rows) = csv_rows(&dir.path().join("trajectory.csv"));
    assert!(!rows.is_empty());
}

#[test]
fn sweep_writes_runs_and_summaries() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let args = ["sweep", "--n", "8,16,32", "--sigma", "0.01", "--seeds", "1..20", "--k", "2", "--m", "2", "--out", path_str(&out)];
    let res = lts(&args);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let (header, rows) = csv_rows(&out);
    let kind = header.iter().position(|h| h == "kind").unwrap();
    assert_eq!(rows.iter().filter(|r| &r[kind] == "run").count(), 60);
    assert_eq!(rows.iter().filter(|r| &r[kind] == "summary").count(), 3);
}

#[test]
fn repeated_seed_gives_identical_rows() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| -> Vec<String> {
        ["sweep", "--n", "8", "--seeds", "4..4", "--k", "2", "--m", "2", "--sequential", "--out", path_str(out)]
            .map(String::from)
            .to_vec()
    };
    let run = |out: &Path| {
        let res = Command::new(env!("CARGO_BIN_EXE_lts")).args(args(out)).output().unwrap();
        assert_eq!(code(&res), 0);
    };
    run(&a);
    run(&b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn sweep_rejects_empty_seed_range() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    assert_eq!(code(&lts(&["sweep", "--seeds", "5..4", "--out", path_str(&out)])), 64);
}

#[test]
fn baseline_writes_trajectory_and_record() {
    let dir = TempDir::new().unwrap();
    let plant = write(&dir, "p.json", SCALAR_PLANT);
    let res = lts(&["baseline", "--plant", &plant, "--seed", "2", "--out-dir", path_str(dir.path())]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let (_, rows) = csv_rows(&dir.path().join("baseline.csv"));
    assert!(rows.iter().any(|r| &r[2] == "excitation"));
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("baseline.json")).unwrap()).unwrap();
    assert_eq!(record["method"], "baseline");
}
