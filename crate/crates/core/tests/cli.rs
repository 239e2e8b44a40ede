use std::process::Command;

fn run(args: &[&str]) -> (Option<i32>, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fibtrace")).args(args).output().unwrap();
    (out.status.code(), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn header_and_rows() {
    let (code, out, _) = run(&["orbits", "--lambda-grid", "0.05:16:0.05"]);
    assert_eq!(code, Some(0));
    let mut lines = out.lines();
    assert!(lines.next().unwrap().starts_with("# fibtrace "));
    assert!(lines.next().unwrap().starts_with("# config {"));
    assert!(lines.next().unwrap().starts_with("# wall_time_s "));
    assert!(lines.next().unwrap().starts_with("lambda,"));
    assert_eq!(lines.count(), 320);
}

#[test]
fn pressure_has_intercepts() {
    let (code, out, _) = run(&["pressure", "--lambda", "2", "--level", "10", "--t", "-1:2:0.01"]);
    assert_eq!(code, Some(0));
    assert!(out.contains("# intercepts gamma="));
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 302);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = std::env::temp_dir().join(format!("fibtrace-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("c.json");
    std::fs::write(&cfg, r#"{"lambda": 3.0, "k_max": 6}"#).unwrap();
    let out_path = dir.join("o.csv");
    let (code, _, _) = run(&["bands", "--config", cfg.to_str().unwrap(), "--k-max", "4", "--output", out_path.to_str().unwrap()]);
    assert_eq!(code, Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.contains(r#""lambda":3.0"#));
    // levels 0..=4: 1 + 1 + 2 + 3 + 5 bands
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 13);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn errors_exit_with_one() {
    let (code, _, err) = run(&["gaps", "--lambda", "0"]);
    assert_eq!(code, Some(1));
    assert!(err.contains("config:"));
    let (code, _, err) = run(&["transport", "--lambda", "1", "--length", "64", "--t", "40"]);
    assert_eq!(code, Some(1));
    assert!(err.contains("operator:"));
    let (code, _, _) = run(&["orbits", "--lambda-grid", "2:1:0.1"]);
    assert_eq!(code, Some(1));
    let (code, _, _) = run(&["nonsense"]);
    assert_eq!(code, Some(1));
}

#[test]
fn json_output_parses() {
    let (code, out, _) = run(&["comb", "--k-max", "20", "--format", "json"]);
    assert_eq!(code, Some(0));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["columns"][0], "k");
    assert_eq!(v["rows"].as_array().unwrap().len(), 21);
    assert!(v["metadata"]["version"].is_string());
}

#[test]
fn seeded_phases_are_reproducible() {
    let args = ["transport", "--lambda", "4", "--length", "128", "--t", "3,5", "--random-omegas", "2", "--seed", "3"];
    let strip = |s: String| s.lines().filter(|l| !l.starts_with("# wall")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(run(&args).1), strip(run(&args).1));
    let mut other = args;
    other[10] = "4";
    assert_ne!(strip(run(&args).1), strip(run(&other).1));
}
