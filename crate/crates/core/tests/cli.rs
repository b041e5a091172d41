use std::process::Command;

fn steklov(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_steklov")).args(args).output().expect("binary runs")
}

#[test]
fn oracle_prints_lambda() {
    let out = steklov(&["oracle", "--problem", "xi", "--k", "3"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("λ = 8"));
}

#[test]
fn invalid_n_names_the_constraint() {
    let out = steklov(&["solve", "--problem", "theta", "--domain", "disk", "--n", "17"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("N must be even and ≥ 32"));
    assert_eq!(steklov(&["solve", "--problem", "theta", "--n", "1024"]).status.code(), Some(2));
    assert_eq!(steklov(&["solve", "--problem", "theta", "--bogus"]).status.code(), Some(2));
    assert_eq!(steklov(&["nodal", "--problem", "xi", "--mode-index", "0", "--grid", "1001", "--out", "x"]).status.code(), Some(2));
}

#[test]
fn help_lists_defaults() {
    let out = steklov(&["verify", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for d in ["[default: disk]", "[default: 256]", "[default: 301]", "[default: 0.1]", "0.02 × diameter"] {
        assert!(text.contains(d), "missing {d}");
    }
    let text = String::from_utf8_lossy(&steklov(&["nodal", "--help"]).stdout).to_string();
    assert!(text.contains("[default: 301]") && text.contains("[default: 0]"));
}

#[test]
fn solve_writes_spectrum_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("s.json");
    let csv = dir.path().join("t.csv");
    let out = steklov(&[
        "solve", "--problem", "xi", "--domain", "ellipse:2,1", "--n", "128", "--modes", "6",
        "--out", json.to_str().unwrap(), "--traces", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["N"], 128);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 6);
    assert!(v["condition_number"].as_f64().unwrap() > 1.0);
    let traces = std::fs::read_to_string(&csv).unwrap();
    assert!(traces.starts_with("t,x,y,phi_0"));
    assert_eq!(traces.lines().count(), 129);
}

#[test]
fn nodal_writes_geometry_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("n.json");
    let svg = dir.path().join("n.svg");
    let out = steklov(&[
        "nodal", "--problem", "xi", "--mode-index", "3", "--n", "128", "--grid", "121",
        "--out", json.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["boundary_zero_count"], 4);
    let raw = v["raw_length"].as_f64().unwrap();
    assert!((raw - 4.0 * 0.96).abs() < 0.05 * 4.0, "{raw}");
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn verify_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("symbols.json");
    let csv = dir.path().join("symbols.csv");
    let out = steklov(&["verify", "--suite", "symbols", "--out", json.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(&json).unwrap().contains("wall_clock_seconds"));
    let summary = dir.path().join("summary.csv");
    let out = steklov(&["report", "--in", dir.path().to_str().unwrap(), "--out", summary.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(&summary).unwrap(),
        std::fs::read_to_string(&csv).unwrap()
    );
    let empty = tempfile::tempdir().unwrap();
    let out = steklov(&["report", "--in", empty.path().to_str().unwrap(), "--out", summary.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_disk_exits_zero() {
    let out = steklov(&["verify", "--suite", "disk", "--canonical"]);
    assert_eq!(out.status.code(), Some(0));
    let again = steklov(&["verify", "--suite", "disk", "--canonical"]);
    assert_eq!(out.stdout, again.stdout);
}
