use std::path::Path;
use std::process::{Command, Output};

use auctionlab::commands::{BEST_RESPONSE_HEADER, ERM_HEADER, MECHANISMS_HEADER};
use auctionlab_core::game::best_commitment;
use auctionlab_core::{Competition, Distribution};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auctionlab"))
        .args(args)
        .env_remove("AUCTIONLAB_SEED")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "nash.json", r#"{"k": [2], "bidders": 3}"#);
    let o = lab(&["nash", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_2() {
    let o = lab(&["phase", "--config", "/nonexistent/phase.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn irregular_law_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // two separated mass clumps: the revenue curve has two local peaks
    let cfg = write_config(
        dir.path(),
        "mech.json",
        r#"{"value_law": {"family": "piecewise_empirical", "params": {"knots": [[0, 0], [1, 0.45], [2, 0.5], [3, 0.95], [4, 1]]}}}"#,
    );
    let o = lab(&["mechanisms", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_zero_tolerance_exits_4() {
    let o = lab(&["verify", "--criterion", "3", "--tolerance-scale", "0"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn verify_subset_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "verify.json", r#"{"criteria": [1, 3]}"#);
    let o = lab(&["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("criterion  1 PASS") && out.contains("criterion  3 PASS"));
    assert!(!out.contains("criterion  2"));
}

#[test]
fn nash_json() {
    let o = lab(&["nash"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!((rows[0]["r_star"].as_f64().unwrap() - 0.75).abs() < 1e-9);
}

#[test]
fn best_response_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "br.json", r#"{"alpha_points": 3}"#);
    let out = dir.path().join("br.csv");
    let o = lab(&["best-response", "--config", &cfg, "--grid", "60", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(&out).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), BEST_RESPONSE_HEADER);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    let f = |row: &csv::StringRecord, i: usize| row[i].parse::<f64>().unwrap();

    // no phase-1 reserve, alpha = 0: the best commitment
    let u = Distribution::uniform(0.0, 1.0).unwrap();
    let (best, _) = best_commitment(&Competition::law(u.clone()), &u).unwrap();
    assert_eq!(&rows[0][0], "none");
    assert_eq!(f(&rows[0], 1), 0.0);
    assert!((f(&rows[0], 6) - best).abs() < 1e-8);
    // alpha = 1 pays nothing for shading: truthful second price
    assert_eq!(f(&rows[2], 1), 1.0);
    assert!((f(&rows[2], 6) - 1.0 / 6.0).abs() < 1e-8);
    assert_eq!(&rows[5][0], "uniform");
    assert!(std::fs::read_to_string(&out).unwrap().ends_with('\n'));
}

#[test]
fn erm_csv_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "erm.json", r#"{"n_grid": [100, 400], "trials": 5}"#);
    let a = lab(&["erm", "--config", &cfg, "--seed", "9"]);
    let b = Command::new(env!("CARGO_BIN_EXE_auctionlab"))
        .args(["erm", "--config", &cfg])
        .env("AUCTIONLAB_SEED", "9")
        .output()
        .unwrap();
    let c = lab(&["erm", "--config", &cfg, "--seed", "10"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], ERM_HEADER.join(","));
    assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 1 + 10);
    assert_eq!(lines.iter().filter(|l| l.starts_with("# n=")).count(), 2);
}

#[test]
fn mechanisms_csv() {
    let o = lab(&["mechanisms"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), MECHANISMS_HEADER.join(","));
    assert_eq!(lines.count(), 3);
}
