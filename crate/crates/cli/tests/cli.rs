use std::path::Path;
use std::process::{Command, Output};

const SMOKE: &str = "seed = 1\nn_unitaries = 10\norder = 1\ntimes_ms = [0, 1]\n[hamiltonian]\nn_spins = 3\nj0_hz = 30.13\nalpha = 1.21\nb_field_hz = 1500\n[shots]\ndefault = 20\n";

fn otoc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otoc")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "smoke.toml", SMOKE);
    let out = dir.path().join("run");
    let o = otoc(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("10 unitaries"));

    let again = dir.path().join("again");
    let o = otoc(&["analyze", out.join("dataset.json").to_str().unwrap(), "--orders", "0,1", "--out", again.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read(out.join("otoc_n1.csv")).unwrap(),
        std::fs::read(again.join("otoc_n1.csv")).unwrap()
    );
}

#[test]
fn seed_override_and_limit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "smoke.toml", SMOKE);
    let out = dir.path().join("o");
    let o = otoc(&["run", "--config", &cfg, "--seed", "77", "--limit", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let data = std::fs::read_to_string(out.join("dataset.csv")).unwrap();
    assert!(data.contains("\"seed\":77"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("4 unitaries"));
}

#[test]
fn exit_codes_name_the_failure() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "seed = 1\n");
    assert_eq!(otoc(&["run", "--config", &bad]).status.code(), Some(2));

    let missing = dir.path().join("nope.toml");
    assert_eq!(otoc(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(4));

    let garbage = write(dir.path(), "dataset.csv", "not,a,dataset\n");
    assert_eq!(otoc(&["analyze", &garbage]).status.code(), Some(3));

    let cfg = write(dir.path(), "smoke.toml", SMOKE);
    let quench = write(dir.path(), "q.csv", "t_s,sz_1,sz_2,sz_3\n0,-1,1,-1\n0.001,-1,1,-1\n");
    let o = otoc(&["calibrate", "--data", &quench, "--config", &cfg, "--flipped-site", "2", "--max-iterations", "3"]);
    assert_eq!(o.status.code(), Some(5), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn ramsey_reports_revivals() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ramsey.csv");
    let o = otoc(&["ramsey", "--max-ms", "12", "--samples", "500", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("revivals at"), "{stdout}");
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 122);
}

#[test]
fn entropy_subcommand_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "e.toml",
        "seed = 2\n[hamiltonian]\nn_spins = 3\nj0_hz = 30.13\nalpha = 1.21\nb_field_hz = 1500\n[entropy]\ntimes_ms = [0]\nn_unitaries = 20\nshots = 20\n",
    );
    let out = dir.path().join("e");
    let o = otoc(&["entropy", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("entropy.csv").exists());
}
