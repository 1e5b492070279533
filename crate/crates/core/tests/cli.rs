use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use backlund_quadrics::run::exit_code;
use backlund_quadrics::Error;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_backlund");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN).args(args).arg("--out").arg(out).env_remove("BACKLUND_OUT_DIR").output().unwrap()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn patched(name: &str, from: &str, to: &str, dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(configs().join(name)).unwrap();
    assert!(text.contains(from), "{from} not in {name}");
    let path = dir.join(format!("patched_{name}"));
    std::fs::write(&path, text.replace(from, to)).unwrap();
    path
}

#[test]
fn identities_default_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["identities", "--seed", "7"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&dir.path().join("identities_report.json"));
    assert_eq!(r["pass"], true);
    assert_eq!(r["exit_code"], 0);
}

#[test]
fn zero_tolerance_scale_fails_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["identities", "--tol-scale", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let r = report(&dir.path().join("identities_report.json"));
    assert_eq!(r["pass"], false);
    assert!(r["checks"].as_array().unwrap().iter().any(|c| c["pass"] == false));
}

#[test]
fn bad_quadric_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched("hyperboloid_bent.json", "\"a2\": -1.0", "\"a2\": 2.0", dir.path());
    let out = run(&["identities", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("quadric.a2"));
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched("hyperboloid_bent.json", "\"z\": 0.4", "\"z\": 0.4, \"zz\": 1", dir.path());
    let out = run(&["transform", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_spectral_parameter_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched("hyperboloid_bent.json", "\"z\": 0.4", "\"z\": 0.0", dir.path());
    let out = run(&["transform", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("z = 0"));
}

#[test]
fn transform_writes_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("hyperboloid_bent.json");
    let out = run(&["transform", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["mesh_seed.csv", "mesh_leaf.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("u0,v0,x,y,z,u1,v1"));
        assert_eq!(lines.count(), 41 * 41);
    }
}

#[test]
fn trivial_seed_reports_degenerate_leaf() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("hyperboloid_trivial.json");
    let out = run(&["transform", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = report(&dir.path().join("transform_report.json"));
    let notes = r["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().contains("degenerate leaf")));
}

#[test]
fn archimedes_slice_counts() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["archimedes", "--n", "1"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["archimedes", "--n", "2"], dir.path()).status.code(), Some(0));
    assert_eq!(run(&["archimedes"], dir.path()).status.code(), Some(0));
    let r = report(&dir.path().join("archimedes_report.json"));
    assert_eq!(r["pass"], true);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let out = Command::new(BIN)
        .args(["archimedes", "--n", "100"])
        .current_dir(dir.path())
        .env("BACKLUND_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("archimedes_report.json").exists());
}

#[test]
fn same_seed_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&["identities", "--seed", "11"], &a);
    run(&["identities", "--seed", "11"], &b);
    let read = |d: &Path| std::fs::read(d.join("identities_report.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn degeneracies_map_to_exit_three() {
    assert_eq!(exit_code(&Error::Degenerate("whole ruling tangent".into())), 3);
    assert_eq!(exit_code(&Error::Validity("x".into())), 3);
    assert_eq!(exit_code(&Error::SpectralZero), 1);
}
