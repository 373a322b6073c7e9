use std::path::PathBuf;
use std::process::{Command, Output};

fn nhplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhplan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nhplan-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn systems_file(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../systems")
        .join(format!("{name}.json"));
    root.to_string_lossy().into_owned()
}

#[test]
fn hall_json_lists_five_elements() {
    let out = nhplan(&["hall", "--m", "2", "--r", "3", "--json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["elements"].as_array().unwrap().len(), 5);
    assert_eq!(doc["level_dims"], serde_json::json!([2, 3, 5]));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = nhplan(&["hall", "--m", "2", "--r", "3", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_carry_codes() {
    let out = nhplan(&[
        "--json",
        "lift",
        "--system",
        "no-such-system",
        "--at",
        "0",
        "--r",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["error"]["code"], "invalid_spec");

    let out = nhplan(&[
        "--json", "steer", "--m", "2", "--r", "2", "--from", "0.1,0.2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["error"]["code"], "dimension_mismatch");
}

#[test]
fn canonical_prints_monomials() {
    let out = nhplan(&["canonical", "--m", "2", "--r", "2", "--json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["dimension"], 3);
    assert_eq!(doc["dynamics"][2]["monomial"], "v1");
}

#[test]
fn lift_martinet_at_the_singular_locus() {
    let out = nhplan(&[
        "lift",
        "--system",
        &systems_file("martinet"),
        "--at",
        "0,0,0",
        "--r",
        "3",
        "--json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["dimension"], 5);
}

#[test]
fn steer_reaches_the_origin() {
    let out = nhplan(&[
        "steer",
        "--m",
        "2",
        "--r",
        "2",
        "--from",
        "0.3,-0.2,0.1",
        "--smooth",
        "1",
        "--json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["pseudo_norm"].as_f64().unwrap() < 1e-4);
}

#[test]
fn plan_martinet_writes_artifacts_and_replays() {
    let dir = scratch_dir("plan");
    let system = systems_file("martinet");
    let run = |tag: &str| {
        let report = dir.join(format!("report-{tag}.json"));
        let traj = dir.join(format!("traj-{tag}.csv"));
        let law = dir.join(format!("law-{tag}.json"));
        let out = nhplan(&[
            "plan",
            "--system",
            &system,
            "--from",
            "-0.5,0,0",
            "--to",
            "0.5,0.2,0.1",
            "--tol",
            "1e-3",
            "--box",
            "-1,1",
            "--seed",
            "7",
            "--report",
            report.to_str().unwrap(),
            "--traj",
            traj.to_str().unwrap(),
            "--law",
            law.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        (
            std::fs::read(report).unwrap(),
            std::fs::read_to_string(traj).unwrap(),
            law,
        )
    };
    let (first, traj, law) = run("a");
    let (second, _, _) = run("b");
    assert_eq!(first, second);

    let header = traj.lines().next().unwrap();
    assert_eq!(header, "t,x_1,x_2,x_3");
    let last: Vec<f64> = traj
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    for (got, want) in last[1..].iter().zip([0.5, 0.2, 0.1]) {
        assert!((got - want).abs() < 1e-3);
    }

    let out_csv = dir.join("replay.csv");
    let out = nhplan(&[
        "--json",
        "simulate",
        "--system",
        &system,
        "--x0=-0.5,0,0",
        "--law",
        law.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let end: Vec<f64> = serde_json::from_value(doc["endpoint"].clone()).unwrap();
    for (got, want) in end.iter().zip(&last[1..]) {
        assert!((got - want).abs() < 1e-8);
    }
    std::fs::remove_dir_all(dir).ok();
}
