use std::process::Command;

fn ims(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ims")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    assert_eq!(ims(&["check", "contact"]).0, 0);
    let (code, text) = ims(&["check", "two_type"]);
    assert_eq!(code, 1);
    assert!(text.contains("(c)"), "{text}");
    assert_eq!(ims(&["check", "no_such_model"]).0, 2);
    assert_eq!(ims(&["check", "contact", "--param", "lambda"]).0, 2);
    assert_eq!(ims(&["simulate", "contact", "--horizon", "-1"]).0, 2);
}

#[test]
fn simulate_writes_its_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["simulate", "contact", "--lattice", "8", "--horizon", "5", "--seed", "42", "--init", "single:0:1", "--out", out];
    assert_eq!(ims(&args).0, 0);
    for f in ["trajectory.csv", "density.csv", "final.txt", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let fin = std::fs::read_to_string(dir.path().join("final.txt")).unwrap();
    assert_eq!(fin.trim(), "0 0 0 1 0 1 1 1");
    let density = std::fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(density.starts_with("t,count_0,count_1"));
}

#[test]
fn exported_models_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let (code, json) = ims(&["export", "gbt", "--lattice", "4x4"]);
    assert_eq!(code, 0);
    let path = dir.path().join("gbt.json");
    std::fs::write(&path, json).unwrap();
    assert_eq!(ims(&["check", path.to_str().unwrap()]).0, 0);
}
