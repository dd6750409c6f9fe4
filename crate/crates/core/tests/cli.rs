use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hsverify::frontend::ReportDocument;
use hsverify::Verdict;

fn hsverify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsverify")).args(args).output().expect("run hsverify")
}

fn write_job(dir: &Path, name: &str, space: &str, phi: &str, truncation: u32) -> String {
    let path = dir.join(name);
    let text = format!(
        "m = 1\nphi = [{phi}]\npsi = \"1\"\ntruncation = {truncation}\n\n[space]\n{space}\n\n[operator]\nkind = \"composition\"\n"
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const DISK: &str = "kind = \"bergman_ball\"\nn = 1\nalpha = 0.0";

#[test]
fn exit_codes_follow_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let exact = write_job(dir.path(), "exact.toml", DISK, "\"0.5*z\"", 40);
    let diverged = write_job(dir.path(), "div.toml", DISK, "\"z\"", 40);
    let near = write_job(dir.path(), "near.toml", DISK, "\"0.999*z\"", 40);
    assert_eq!(hsverify(&["verify", &exact]).status.code(), Some(0));
    assert_eq!(hsverify(&["verify", &diverged]).status.code(), Some(2));
    assert_eq!(hsverify(&["verify", &near]).status.code(), Some(3));
}

#[test]
fn usage_and_validation_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hsverify(&[]).status.code(), Some(64));
    assert_eq!(hsverify(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(hsverify(&["verify", "/nonexistent/job.toml"]).status.code(), Some(64));
    let hardy1 = write_job(dir.path(), "h1.toml", "kind = \"hardy_ball\"\nn = 1", "\"0.5*z\"", 10);
    let out = hsverify(&["verify", &hardy1]);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta"));
    let bad = write_job(dir.path(), "bad.toml", DISK, "\"0.5*w\"", 10);
    let out = hsverify(&["verify", &bad]);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("phi[0]: syntax error at byte 4"));
    let ok = write_job(dir.path(), "ok.toml", DISK, "\"0.5*z\"", 10);
    assert_eq!(hsverify(&["verify", &ok, "--quad", "64"]).status.code(), Some(64));
    assert_eq!(hsverify(&["parse", "--m", "1", "0.5*z3"]).status.code(), Some(64));
    assert_eq!(hsverify(&["--help"]).status.code(), Some(0));
    assert_eq!(hsverify(&["--version"]).status.code(), Some(0));
}

#[test]
fn table_output_overrides_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let job = write_job(dir.path(), "job.toml", DISK, "\"0.5*z\"", 40);
    let out_path = dir.path().join("report.csv");
    let out = hsverify(&[
        "verify", &job, "--format", "table", "--truncation", "12", "--quad", "32,64", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let table = fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "k,S_k");
    assert_eq!(lines.len(), 1 + 13 + 3);
    assert!(lines[1].starts_with("0,1.0000000000000000e0"));
    assert!(lines[14].starts_with("characterization=1.33333333333333"));
    assert!(lines[15].starts_with("tail_bound="));
    assert_eq!(lines[16], "verdict=ExactMatch");
}

#[test]
fn structured_output_parses_and_batches_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_job(dir.path(), "a.toml", DISK, "\"0.5*z\"", 20);
    let b = write_job(dir.path(), "b.toml", "kind = \"hardy_polydisk\"\nn = 2", "\"0.5*z\", \"0.25*z^2\"", 20);
    let out = hsverify(&["verify", &a, &b, "--format", "table"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("k,S_k\n").count(), 2);

    let out = hsverify(&["verify", &a]);
    let doc = ReportDocument::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(doc.result.verdict, Verdict::ExactMatch);
    assert!(doc.wall_clock_seconds.is_some());
    assert_eq!(doc.job.truncation, 20);
}

#[test]
fn convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let job = write_job(dir.path(), "job.toml", DISK, "\"0.5*z\"", 10);
    let out = hsverify(&["convergence", &job]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,S_k,characterization,ratio"));
    assert_eq!(lines.count(), 11);
}

#[test]
fn bases_parse_and_selftest() {
    let out = hsverify(&["bases", "--space", "bergman-ball", "--n", "2", "--alpha", "0", "--max-degree", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("J,basis_constant_sq\n\"(0,0)\",1.0000000000000000e0\n"));
    // c_J² = (3)_2 / J! for J = (1,1)
    assert!(text.contains("\"(1,1)\",1.2000000000000000e1"));
    assert_eq!(text.lines().count(), 1 + 6);

    let out = hsverify(&["parse", "--m", "2", "(0.1+0.2i)*z1*z2^2 - z1*z2^2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("= (-0.9+0.2i)*z1*z2^2"));

    let out = hsverify(&["quad-selftest", "--beta", "-0.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().trim_end().ends_with("ok"));
    assert_eq!(hsverify(&["quad-selftest", "--beta", "-1"]).status.code(), Some(64));
}
