use std::fs;
use std::process::{Command, Output};

fn platonic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_platonic")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(csv.as_bytes()).records().map(|r| r.unwrap()).collect()
}

/// The leading number of a k cell, which may read `value=radical`.
fn k_value(cell: &str) -> f64 {
    cell.split('=').next().unwrap().parse().unwrap()
}

#[test]
fn triples_lists_exact_m_point_crossing() {
    let out = stdout(&platonic(&["triples", "--rho-sq", "3", "--kmax", "10"]));
    let hit = rows(&out)
        .into_iter()
        .find(|r| &r[1] == "1/2" && &r[2] == "1/2" && (k_value(&r[3]) - 9.5977).abs() < 1e-4)
        .expect("M-point row near 9.5977");
    assert!(hit[3].ends_with("=2√21π/3"));
    assert_eq!(&hit[4], "8");
}

#[test]
fn bands_reports_massless_roots_at_y() {
    let out = stdout(&platonic(&["bands", "--rho-sq", "2", "--path", "Y,G", "--samples", "2", "--kmin", "6.5", "--kmax", "6.8"]));
    let massless = rows(&out)
        .into_iter()
        .filter(|r| &r[6] == "massless" && (r[5].parse::<f64>().unwrap() - 6.6643).abs() < 1e-4)
        .count();
    assert_eq!(massless, 5);
}

#[test]
fn json_output_parses() {
    let out = stdout(&platonic(&["triples", "--rho-sq", "2", "--kmax", "7", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v.as_array().is_some_and(|a| !a.is_empty()));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(platonic(&["nosuch"]).status.code(), Some(2));
    assert_eq!(platonic(&["triples", "--kmax", "10"]).status.code(), Some(2));
    assert_eq!(platonic(&["bands", "--dy", "1", "--rho", "2"]).status.code(), Some(2));
}

#[test]
fn pole_proximity_exits_three_with_record() {
    let o = platonic(&["greens", "--k", "6.283185307179586", "--points", "0.1,0.2"]);
    assert_eq!(o.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "PoleProximity");
    assert_eq!(err["exit_code"], 3);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = platonic(&["cluster", "--rho", "1.4142135623730951", "--k", "3.069", "--half-width", "3", "--output", p.to_str().unwrap()]);
        assert!(o.status.success());
        (fs::read(&p).unwrap(), fs::read(dir.path().join(format!("{name}.summary"))).unwrap())
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn config_file_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.cfg");
    fs::write(&cfg, "# catalogue\nrho_sq = 3\nkmax = 5\n").unwrap();
    let out = dir.path().join("t.csv");
    let (cfg_s, out_s) = (cfg.to_str().unwrap(), out.to_str().unwrap());

    assert!(platonic(&["triples", "--config", cfg_s, "--output", out_s]).status.success());
    let low = rows(&fs::read_to_string(&out).unwrap());
    assert!(!low.is_empty() && low.iter().all(|r| k_value(&r[3]) <= 5.0));

    // The command line wins over the file.
    assert!(platonic(&["triples", "--config", cfg_s, "--kmax", "10", "--output", out_s]).status.success());
    let high = rows(&fs::read_to_string(&out).unwrap());
    assert!(high.iter().any(|r| k_value(&r[3]) > 9.0));

    // The sidecar replays the run.
    let side = dir.path().join("t.csv.config");
    let text = fs::read_to_string(&side).unwrap();
    assert!(text.lines().any(|l| l == "kmax=10.0"));
    let again = dir.path().join("u.csv");
    assert!(platonic(&["triples", "--config", side.to_str().unwrap(), "--output", again.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}
