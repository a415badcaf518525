//! End-to-end runs of the command line front end.

use std::path::Path;

use gnlab::archive::{Manifest, MANIFEST};
use gnlab::cli::run_command;

fn run(args: &[&str]) -> i32 {
    run_command(std::iter::once("gnlab").chain(args.iter().copied()))
}

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST)).unwrap()).unwrap()
}

#[test]
fn minimize_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (one, two) = (tmp.path().join("one"), tmp.path().join("two"));
    for dir in [&one, &two] {
        let status = run(&["minimize", "--resolution", "400", "--seed", "5", "--out", dir.to_str().unwrap()]);
        assert_eq!(status, 0);
    }
    let m = manifest(&one);
    assert_eq!(m, manifest(&two));
    let names: Vec<&str> = m.files.iter().map(|e| e.path.as_str()).collect();
    for name in ["config.toml", "ground_state.json", "profile.csv", "summary.json"] {
        assert!(names.contains(&name), "{names:?}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(one.join("summary.json")).unwrap()).unwrap();
    assert!(summary.to_string().contains("energy"));
}

#[test]
fn saved_config_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    assert_eq!(run(&["ground-state", "--b", "0.7", "--out", first.to_str().unwrap()]), 0);
    let cfg = first.join("config.toml");
    assert!(std::fs::read_to_string(&cfg).unwrap().contains("b = 0.7"));
    let second = tmp.path().join("second");
    assert_eq!(run(&["ground-state", "--config", cfg.to_str().unwrap(), "--out", second.to_str().unwrap()]), 0);
    assert_eq!(manifest(&first), manifest(&second));
}

#[test]
fn configuration_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let out = out.to_str().unwrap();
    assert_eq!(run(&["ground-state", "--b", "3.0", "--out", out]), 1);
    assert_eq!(run(&["no-such-command"]), 1);
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[problem]\nbogus = 1\n").unwrap();
    assert_eq!(run(&["ground-state", "--config", bad.to_str().unwrap(), "--out", out]), 1);
    assert_eq!(run(&["ground-state", "--config", "/nonexistent/cfg.toml", "--out", out]), 1);
    assert!(!Path::new(out).exists());
}

#[test]
fn supercritical_minimize_is_a_solver_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let status = run(&["minimize", "--a-mult", "1.2", "--resolution", "20000", "--out", out.to_str().unwrap()]);
    assert_eq!(status, 2);
}
