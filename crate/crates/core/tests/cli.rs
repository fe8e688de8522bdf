use std::process::{Command, Output};

fn georoute(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_georoute")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn paths_lists_the_grid() {
    let out = georoute(&["paths", "--config", &config("grid4x4.toml")]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let paths: Vec<&str> = text.lines().filter(|l| l.starts_with("path,")).collect();
    assert_eq!(paths.len(), 20);
    assert!(paths.iter().all(|l| l.split(',').nth(2) == Some("6")));
    assert!(text.lines().any(|l| l.starts_with("cover,")));
}

#[test]
fn bounds_for_one_network() {
    let out = georoute(&["bounds", "--theta", "0.5,0.25"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("H,C1,C1_rel_error,C2,ratio"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[0], 1.0);
    assert!((row[1] - row[3]).abs() < 1e-6);
    assert!((row[3] - 3.8223).abs() < 1e-3);
}

#[test]
fn bounds_sweep_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("ratio.csv");
    let out = georoute(&[
        "bounds",
        "--hops",
        "1,2",
        "--draws",
        "20",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "H,draws,mean_ratio,stderr,theta_law,seed");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,20,"));
}

#[test]
fn simulate_overrides_and_writes_metadata() {
    let out = georoute(&[
        "simulate",
        "--config",
        &config("line1.toml"),
        "--runs",
        "2",
        "--packets",
        "50",
        "--policies",
        "oracle,klsr",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "# packets = 50"));
    assert!(text.lines().any(|l| l == "# policies = oracle,klsr"));
    assert!(text.lines().any(|l| l.starts_with("klsr,mean,50,")));
}

#[test]
fn bad_input_fails_cleanly() {
    let out = georoute(&["simulate", "--config", &config("line1.toml"), "--policies", "teleport"]);
    assert!(!out.status.success());
    let out = georoute(&["simulate", "--config", "/nonexistent.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
    let out = georoute(&["simulate", "--config", &config("line1.toml"), "--policies", "klhhr:semibandit"]);
    assert!(!out.status.success());
}
