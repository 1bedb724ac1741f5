use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_decay-bounds")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn threshold_and_bounds() {
    assert_eq!(run(&["threshold", "--d", "5"]).1.trim(), "8/3");
    let (code, out, _) = run(&["bounds", "--surface", "paraboloid", "--d", "3", "--alpha-grid", "2:5/2:1/2"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,4/3,4/3,"));
    let (_, json, _) = run(&["bounds", "--surface", "sphere", "--d", "4", "--alpha-grid", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v[0]["new_upper"], "7/3");
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let (code, _, err) = run(&["construct", "--surface", "paraboloid", "--d", "3", "--m", "1", "--alpha", "x", "--R", "1e6"]);
    assert_eq!(code, 2);
    assert!(err.contains("alpha"), "{err}");
    let (code, _, err) = run(&["construct", "--surface", "paraboloid", "--d", "3", "--m", "1", "--alpha", "2", "--R", "2^q"]);
    assert_eq!(code, 2);
    assert!(err.contains("R"), "{err}");
    let (code, _, _) = run(&["construct", "--surface", "sphere", "--d", "4", "--m", "1", "--alpha", "3", "--N", "40"]);
    assert_eq!(code, 2);
    assert_eq!(run(&["nonsense"]).0, 2);
}

#[test]
fn same_seed_same_bytes() {
    let args = [
        "calpha", "--surface", "paraboloid", "--d", "3", "--m", "1", "--alpha", "2", "--R", "2^14", "--seed", "9",
        "--format", "json",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let v: serde_json::Value = serde_json::from_str(&a.1).unwrap();
    assert_eq!(v[0]["seed"], 9);
}

#[test]
fn phase_and_scaling_commands() {
    let (code, out, _) = run(&["verify-phase", "--surface", "sphere", "--d", "4", "--m", "1", "--alpha", "3", "--N", "1", "--samples", "500"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["max_deviation"].as_f64().unwrap() < 0.01);
    let (code, out, _) = run(&[
        "scaling", "--surface", "paraboloid", "--d", "3", "--m", "1", "--alpha", "2", "--R", "2^16:2^22:2^2",
        "--seed", "2", "--x-samples", "200", "--mc-samples", "20000",
    ]);
    assert_eq!(code, 0, "{out}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["fit"]["target_slope"], "-2/3");
}
