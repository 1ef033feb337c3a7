use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_polybubble");

const CASE1: &str = "\
n = 6
m = 1
iota = 0.5
case = 1
m1 = 2
potential = constant
v0 = 1
k_values = 2, 3, 4
samples_annulus = 300
samples_far = 50
seed = 3
";

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.conf");
    fs::write(&cfg, config).unwrap();
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn identical_seeds_give_identical_reports() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for cmd in ["residual-scan", "norms", "solve"] {
        let oa = run(a.path(), CASE1, &[cmd, "--jobs", "1"]);
        let ob = run(b.path(), CASE1, &[cmd, "--jobs", "3"]);
        assert_eq!(oa.status.code(), Some(0), "{cmd}: {}", stderr(&oa));
        assert_eq!(ob.status.code(), Some(0), "{cmd}: {}", stderr(&ob));
        assert_eq!(oa.stdout, ob.stdout);
        for entry in fs::read_dir(a.path().join("out")).unwrap() {
            let name = entry.unwrap().file_name();
            let fa = fs::read(a.path().join("out").join(&name)).unwrap();
            let fb = fs::read(b.path().join("out").join(&name)).unwrap();
            assert!(fa == fb, "{cmd}: {name:?} differs");
        }
    }
}

#[test]
fn reports_carry_provenance_and_scan_table() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), CASE1, &["residual-scan", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(d.path().join("out/residual-scan.csv")).unwrap();
    assert!(csv.starts_with("schema,check,inputs,value,predicted,tolerance,comparison,pass,config_sha256,seed,version"));
    assert!(csv.lines().skip(1).all(|l| l.contains(",9,")));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("out/residual-scan.json")).unwrap()).unwrap();
    assert_eq!(json["provenance"]["seed"], 9);
    assert_eq!(json["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
    let scan = fs::read_to_string(d.path().join("out/residual-scan_scan.csv")).unwrap();
    assert_eq!(scan.lines().count(), 4);
}

#[test]
fn missing_field_exits_2_naming_it() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &CASE1.replace("iota = 0.5\n", ""), &["constants"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`iota`"), "{}", stderr(&o));
}

#[test]
fn unknown_key_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &format!("{CASE1}iotta = 1\n"), &["constants"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key"));
}

#[test]
fn empty_sweep_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &CASE1.replace("k_values = 2, 3, 4", "k_values ="), &["residual-scan"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty"));
}

#[test]
fn unknown_subcommand_exits_2_with_usage() {
    let o = Command::new(BIN).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).to_lowercase().contains("usage"));
}

#[test]
fn failing_check_exits_1() {
    // the asymptotic lattice constants are far off at tiny k
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &format!("{CASE1}lattice_k = 2, 3, 4\n"), &["lattice"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL same_ratio"));
}

#[test]
fn window_excluding_root_exits_3() {
    // t* ~ 1.138 for this potential, so a window ending at 1 has no root
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &format!("{CASE1}l1 = 1\n"), &["solve"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(d.path().join("out/solve_trajectory.csv").exists());
}

#[test]
fn lattice_and_pohozaev_pass_on_defaults() {
    let d = tempfile::tempdir().unwrap();
    for cmd in ["lattice", "pohozaev", "constants"] {
        let o = run(d.path(), CASE1, &[cmd]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stdout));
    }
}
