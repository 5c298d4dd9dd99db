use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torsion-lab")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&lab(&["scaling"])), 0);
    assert_eq!(code(&lab(&["isoperimetry", "--mesh", "ellipse:2:1:16", "--set", "expect=equality"])), 1);
    assert_eq!(code(&lab(&["solve", "--mesh", "disk:1:10", "--gamma", "0.6", "--max-iter", "2"])), 3);
    assert_eq!(code(&lab(&["solve", "--gamma", "1"])), 2);
    assert_eq!(code(&lab(&["solve", "--no-such-flag"])), 2);
    assert_eq!(code(&lab(&["scaling", "--flow", "radial"])), 2);
    assert_eq!(code(&lab(&["solve", "--mesh", "blob:3"])), 2);
}

#[test]
fn json_to_stdout() {
    let out = lab(&["solve", "--mesh", "disk:1:30", "--gamma", "0.3"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["experiment"], "solve");
    assert!(v.get("runtime").is_none());
    assert!(String::from_utf8_lossy(&out.stderr).contains("runtime"));
}

#[test]
fn reports_are_byte_identical() {
    let args = ["isoperimetry", "--mesh", "ellipse:2:1:16", "--gamma", "0.6"];
    assert_eq!(lab(&args).stdout, lab(&args).stdout);
}

#[test]
fn csv_layouts() {
    let header = |args: &[&str]| stdout(&lab(args)).lines().next().unwrap().to_string();
    assert_eq!(header(&["radial", "--metric", "cone:0.5", "--format", "csv"]), "r,T,Q");
    assert_eq!(header(&["levelsets", "--mesh", "disk:1:20", "--format", "csv"]), "t,a,I,flux");
    assert_eq!(header(&["schwarz", "--set", "n-rings=12", "--format", "csv"]), "r,T_image,T_disk,Phi");
}

#[test]
fn output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = lab(&["solve", "--mesh", "disk:1:8", "--out", out_dir]);
    assert_eq!(code(&out), 0);
    for file in ["solve.json", "solve.runtime.json", "solution.txt", "mesh.txt"] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }
    assert!(stdout(&out).starts_with("PASS"));
    let solution = std::fs::read_to_string(dir.path().join("solution.txt")).unwrap();
    let first: Vec<&str> = solution.lines().next().unwrap().split(' ').collect();
    assert_eq!(first.len(), 2);
    assert_eq!(first[0], "0");

    let reread = lab(&["solve", "--mesh", dir.path().join("mesh.txt").to_str().unwrap()]);
    assert_eq!(code(&reread), 0);
}

#[test]
fn params_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("scaling.params");
    std::fs::write(&params, "# two radii\ngamma=0.3\nradii=0.5,2\n").unwrap();
    let p = params.to_str().unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&lab(&["scaling", "--params", p]))).unwrap();
    assert_eq!(v["inputs"]["gamma"], 0.3);
    let v: serde_json::Value = serde_json::from_str(&stdout(&lab(&["scaling", "--params", p, "--gamma", "0.7"]))).unwrap();
    assert_eq!(v["inputs"]["gamma"], 0.7);
    assert!(Path::new(p).exists());
}
