use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn mofact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mofact")).args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn factor_all_finds_both_orders() {
    let motion = data("bennett_motion.json");
    let v = json_stdout(&mofact(&["factor", motion.to_str().unwrap(), "--all"]));
    let fs = v["factorizations"].as_array().unwrap();
    assert_eq!(fs.len(), 2);
    assert_eq!(v["coincident"], false);
    for f in fs {
        assert!(f["residual"].as_f64().unwrap() < 1e-10);
        assert_eq!(f["factors"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn factor_order_is_one_based() {
    let motion = data("goldberg_motion.json");
    let v = json_stdout(&mofact(&["factor", motion.to_str().unwrap(), "--order", "2,1"]));
    assert_eq!(v["order"], serde_json::json!([2, 1]));
    let out = mofact(&["factor", motion.to_str().unwrap(), "--order", "0,1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bennett_from_poses() {
    let poses = data("bennett_poses.json");
    let v = json_stdout(&mofact(&["bennett", "--poses", poses.to_str().unwrap()]));
    assert_eq!(v["diagnosis"], "Bennett4R");
    assert!((v["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["linkage"]["joints"].as_array().unwrap().len(), 4);
}

#[test]
fn elliptic_residual_is_small() {
    let v = json_stdout(&mofact(&["elliptic", "--a", "2", "--b", "1"]));
    assert_eq!(v["factors"].as_array().unwrap().len(), 4);
    assert!(v["residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn braced_elliptic_linkage_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("braced.json");
    let out = mofact(&[
        "elliptic", "--a", "3", "--b", "1", "--brace", "--seed", "11", "-o", file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json_stdout(&mofact(&["verify", file.to_str().unwrap()]));
    assert_eq!(v["pass"], true);
    assert_eq!(v["joints"], 13);
}

#[test]
fn shipped_goldberg_linkage_verifies() {
    let file = data("goldberg.json");
    let v = json_stdout(&mofact(&["verify", file.to_str().unwrap(), "--sweep", "-2,0.5,inf"]));
    assert_eq!(v["pass"], true);
    assert_eq!(v["joints"], 5);
}

#[test]
fn flip_random_is_reproducible() {
    let motion = data("goldberg_motion.json");
    let args = ["flip", "--motion", motion.to_str().unwrap(), "--p", "random", "--seed", "5"];
    let a = json_stdout(&mofact(&args));
    let b = json_stdout(&mofact(&args));
    assert_eq!(a, b);
    assert_eq!(a["seed"], 5);
    assert!(a["residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn broken_linkage_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(data("goldberg.json")).unwrap()).unwrap();
    // Translate the first joint axis by (0.5, 0.3, 0): the moment gains v x d.
    let g = &mut v["linkage"]["joints"][0]["g"];
    let d: Vec<f64> = (1..4).map(|i| g[i].as_f64().unwrap()).collect();
    let w = [0.5, 0.3, 0.0];
    let vxd = [w[1] * d[2] - w[2] * d[1], w[2] * d[0] - w[0] * d[2], w[0] * d[1] - w[1] * d[0]];
    for i in 0..3 {
        g[5 + i] = (g[5 + i].as_f64().unwrap() - vxd[i]).into();
    }
    let file = dir.path().join("broken.json");
    std::fs::write(&file, v.to_string()).unwrap();
    let out = mofact(&["verify", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn traj_writes_csv() {
    let motion = data("bennett_motion.json");
    let out = mofact(&["traj", "--motion", motion.to_str().unwrap(), "--point", "1,0,0", "--range", "-1:1:3", "--inf"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x,y,z");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("inf,"));
}

#[test]
fn usage_error_exits_two() {
    assert_eq!(mofact(&["bogus"]).status.code(), Some(2));
    assert_eq!(mofact(&["elliptic", "--a", "2"]).status.code(), Some(2));
}

#[test]
fn module_error_is_structured_json() {
    let out = mofact(&["elliptic", "--a", "1", "--b", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert!(err["error"].as_str().unwrap().contains("a >= b"));
}
