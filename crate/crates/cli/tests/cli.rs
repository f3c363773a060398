use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fieldbridge::mesh::parse_mesh;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fieldbridge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    let mut rows = vec![header];
    for rec in rdr.records() {
        rows.push(rec.unwrap().iter().map(String::from).collect());
    }
    rows
}

const POINTWISE: &str = r#"
output = "out"
seed = 3
iterations = 4

[mesh]
generate = "disk(1, 8)"
jitter = 0.2

[field]
analytic = "sincos2"

[method]
kind = "pointwise"
degree = 1
radii = [1.5, 2.0, 3.0]
"#;

#[test]
fn generated_meshes_have_the_expected_counts() {
    let dir = tempfile::tempdir().unwrap();
    let sq = dir.path().join("sq.mesh");
    let out = run(&["generate-mesh", "square(1)", "-o", sq.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = parse_mesh(&std::fs::read_to_string(&sq).unwrap()).unwrap();
    assert_eq!((m.n_elems(), m.n_vertices()), (2, 4));

    // ring k of a disk contributes 6(2k - 1) triangles, 6 n^2 in total
    let dk = dir.path().join("disk.mesh");
    assert!(run(&["generate-mesh", "disk(1, 2)", "-o", dk.to_str().unwrap()]).status.success());
    let m = parse_mesh(&std::fs::read_to_string(&dk).unwrap()).unwrap();
    assert_eq!(m.n_elems(), 6 + 18);
    assert_eq!(m.n_vertices(), 1 + 6 + 12);

    let bad = run(&["generate-mesh", "disk(1)", "-o", dk.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn run_writes_one_csv_per_radius_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", POINTWISE);
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for r in ["1.5", "2", "3"] {
        let rows = read_csv(&dir.path().join(format!("out/pointwise_r{r}.csv")));
        assert_eq!(rows[0], ["iteration", "accuracy_error", "conservation_error"]);
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|row| row.len() == 3));
    }
    let manifest = std::fs::read_to_string(dir.path().join("out/manifest.toml")).unwrap();
    let parsed: toml::Table = toml::from_str(&manifest).unwrap();
    assert_eq!(parsed["seed"].as_integer(), Some(3));
    assert_eq!(parsed["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn reruns_are_bitwise_identical_and_seed_matters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", POINTWISE);
    let csv = dir.path().join("out/pointwise_r2.csv");
    assert!(run(&["run", cfg.to_str().unwrap()]).status.success());
    let first = std::fs::read(&csv).unwrap();
    assert!(run(&["--threads", "3", "run", cfg.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(&csv).unwrap(), first);
    assert!(run(&["--seed", "4", "run", cfg.to_str().unwrap()]).status.success());
    assert_ne!(std::fs::read(&csv).unwrap(), first);
}

#[test]
fn missing_mesh_file_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let body = POINTWISE.replace("generate = \"disk(1, 8)\"", "file = \"nowhere.mesh\"");
    let cfg = write_config(dir.path(), "c.toml", &body);
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.mesh"));
}

#[test]
fn underdetermined_fit_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let body = POINTWISE.replace("radii = [1.5, 2.0, 3.0]", "radii = [0.2]");
    let cfg = write_config(dir.path(), "c.toml", &body);
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("target"));
}

#[test]
fn unknown_subcommand_and_bad_config_are_usage_errors() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "output = 3");
    assert_eq!(run(&["run", cfg.to_str().unwrap()]).status.code(), Some(2));
}

const SWEEP: &str = r#"
output = "out"

[mesh]
generate = "disk(1, 10)"

[partner]
generate = "graded(1, 7, 10, 1.4)"

[field]
analytic = "sincos2"

[method]
kind = "pointwise"
degree = 1
radii = [2.0]

[rendezvous]
grid = [3, 3]
ranks = 4
"#;

#[test]
fn scale_sweep_keeps_rendezvous_bytes_fixed() {
    for body in [SWEEP.to_string(), SWEEP.replace("kind = \"pointwise\"\ndegree = 1\nradii = [2.0]", "kind = \"conservative\"")] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), "c.toml", &body);
        let out = run(&["scale-sweep", cfg.to_str().unwrap(), "--ranks", "1,2,4"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let summary = read_csv(&dir.path().join("out/scale_summary.csv"));
        assert_eq!(summary.len(), 4);
        for row in &summary[1..] {
            assert_eq!(row[1], "10");
            assert_eq!(row[2], summary[1][2], "rendezvous bytes differ across rank counts");
        }
        let stats = read_csv(&dir.path().join("out/stats_ranks4.csv"));
        assert_eq!(stats[0], ["round", "rank", "role", "msgs_sent", "msgs_recv", "bytes_sent", "bytes_recv"]);
        // 4 + 4 application ranks and 4 rendezvous ranks in each of 10 rounds
        assert_eq!(stats.len() - 1, 10 * 12);
        let times = std::fs::read_to_string(dir.path().join("out/wall_times.txt")).unwrap();
        assert_eq!(times.lines().count(), 1 + 3 * 10);
    }
}

#[test]
fn scale_sweep_rejects_non_powers_of_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SWEEP);
    let out = run(&["scale-sweep", cfg.to_str().unwrap(), "--ranks", "1,3"]);
    assert_eq!(out.status.code(), Some(2));
}
