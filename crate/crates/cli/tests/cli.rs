use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CASE: &str = include_str!("../configs/case_study.ini");

const TOY: &str = "\
[plant]
kind = diagonal
eigenvalues = 1, -1, -4
inputs = 1
b = 0, 1, 1

[truncation]
N0 = 1

[control]
D = 0.1
t0 = 0.2
poles = -2

[simulation]
dt = 0.001
T_end = 1
N_modes = 3
initial_coeffs = 1, 0, 0
";

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn sdc(args: &[&str], dir: &Path, log: Option<&str>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sdc"));
    cmd.args(args).current_dir(dir).env_remove("SDC_LOG");
    if let Some(level) = log {
        cmd.env("SDC_LOG", level);
    }
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    Run {
        code: status.code().unwrap(),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

/// Writes `text` as `name` into a fresh directory and runs `sdc <cmd> --config name --out out`.
fn with_config(cmd: &str, text: &str, extra: &[&str]) -> (TempDir, Run) {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.ini"), text).unwrap();
    let mut args = vec![cmd, "--config", "run.ini", "--out", "out"];
    args.extend_from_slice(extra);
    let run = sdc(&args, dir.path(), None);
    (dir, run)
}

fn artifact(dir: &TempDir, name: &str) -> String {
    fs::read_to_string(dir.path().join("out").join(name)).unwrap()
}

fn value(doc: &str, key: &str) -> String {
    doc.lines()
        .find_map(|l| l.split_once(" = ").filter(|(k, _)| *k == key).map(|(_, v)| v.to_string()))
        .unwrap_or_else(|| panic!("no `{key}` in\n{doc}"))
}

fn number(doc: &str, key: &str) -> f64 {
    value(doc, key).parse().unwrap()
}

/// Real part of `re`, `re+imi` or `re-imi`.
fn real_part(z: &str) -> f64 {
    let Some(body) = z.strip_suffix('i') else {
        return z.parse().unwrap();
    };
    let b = body.as_bytes();
    let k = (1..b.len()).rev().find(|&k| matches!(b[k], b'+' | b'-') && !matches!(b[k - 1], b'e' | b'E')).unwrap();
    body[..k].parse().unwrap()
}

fn scaled_couplings(factor: f64) -> String {
    CASE.lines()
        .map(|line| match line.split_once(" = ") {
            Some((k, v)) if ["a1", "b1", "c1", "a2", "b2", "c2", "d2"].contains(&k) => {
                format!("{k} = {}", v.parse::<f64>().unwrap() * factor)
            }
            _ => line.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn validate_accepts_the_case_study() {
    let (dir, run) = with_config("validate", CASE, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(value(&run.stdout, "alpha"), "8.75");
    assert_eq!(value(&run.stdout, "kalman"), "true");
    assert_eq!(value(&run.stdout, "N0"), "2");
    assert!(value(&run.stdout, "eigenvalues").starts_with("1.25, -2.5, -8.75"));
    assert_eq!(artifact(&dir, "validate.txt"), run.stdout);
}

#[test]
fn validate_rejects_a_discarded_unstable_mode() {
    let (_dir, run) = with_config("validate", &CASE.replace("N0 = 2", "N0 = 0"), &[]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("unstable mode discarded"), "{}", run.stderr);
}

#[test]
fn validate_reports_an_uncontrollable_pair() {
    let (_dir, run) = with_config("validate", TOY, &[]);
    assert_eq!(run.code, 2);
    assert_eq!(value(&run.stdout, "kalman"), "false");
}

#[test]
fn config_errors_name_the_field() {
    let (_dir, run) = with_config("validate", &CASE.replace("L = 6.283185307179586\n", ""), &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("[plant] missing key `L`"), "{}", run.stderr);

    let (_dir, run) = with_config("validate", &CASE.replace("a = 5", "a = five"), &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("[plant] a:"), "{}", run.stderr);

    let (_dir, run) = with_config("design", &CASE.replace("poles = -3, -3", "poles = -3"), &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("[control] poles"), "{}", run.stderr);

    let dir = TempDir::new().unwrap();
    let run = sdc(&["validate", "--config", "absent.ini"], dir.path(), None);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("absent.ini"));
}

#[test]
fn design_places_the_requested_spectrum() {
    let (dir, run) = with_config("design", CASE, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let report = artifact(&dir, "design.txt");
    assert_eq!(report, run.stdout);
    assert_eq!(value(&report, "hurwitz"), "true");
    assert!(number(&report, "spectrum_error") < 1e-6);
    for z in value(&report, "spectrum").split(", ") {
        assert!((real_part(z) + 3.0).abs() < 1e-6, "{z}");
    }
    assert!(number(&report, "lyapunov_residual") < 1e-9);
    assert!((number(&report, "lambda_min_P") - 1.0 / 6.0).abs() < 1e-9);
    assert!(value(&report, "K_row1").contains(", "));
}

#[test]
fn design_rejects_an_uncontrollable_plant() {
    let (dir, run) = with_config("design", TOY, &[]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("not controllable"), "{}", run.stderr);
    assert!(!dir.path().join("out/design.txt").exists());
}

#[test]
fn design_flags_an_unstable_target() {
    let (dir, run) = with_config("design", &CASE.replace("poles = -3, -3", "poles = 0.5, -3"), &[]);
    assert_eq!(run.code, 3);
    let report = artifact(&dir, "design.txt");
    assert_eq!(value(&report, "hurwitz"), "false");
    assert!(!report.contains("lyapunov_residual"));
}

#[test]
fn certify_reports_a_positive_margin() {
    let (dir, run) = with_config("certify", CASE, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let doc = artifact(&dir, "certificate.txt");
    assert_eq!(doc, run.stdout);
    assert!(number(&doc, "margin") > 0.0);
    let gain = number(&doc, "small_gain_constant");
    assert!(gain > 0.0 && gain < 8.6260, "{gain}");
}

#[test]
fn certify_overrides_skip_the_optimizer() {
    let text = CASE.replace("optimize = true", "optimize = false\nbeta = 0.4131\ngamma1 = 106.3290\ngamma2 = 337.1938");
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.ini"), &text).unwrap();
    let run = sdc(&["certify", "--config", "run.ini", "--out", "a"], dir.path(), Some("debug"));
    assert!(run.stderr.contains("using certificate overrides"), "{}", run.stderr);
    assert!(!run.stderr.contains("optimizing"));
    let doc = fs::read_to_string(dir.path().join("a/certificate.txt")).unwrap();
    assert_eq!(number(&doc, "beta"), 0.4131);
    assert_eq!(number(&doc, "gamma1"), 106.329);
    assert_eq!(number(&doc, "gamma2"), 337.1938);
    let margin = number(&doc, "margin");
    assert_eq!(run.code, if margin < 0.0 { 4 } else { 0 });

    let again = sdc(&["certify", "--config", "run.ini", "--out", "b"], dir.path(), None);
    assert_eq!(again.code, run.code);
    assert_eq!(fs::read(dir.path().join("b/certificate.txt")).unwrap(), doc.as_bytes());
}

#[test]
fn strong_coupling_fails_certification_but_still_simulates() {
    let text = scaled_couplings(10.0).replace("T_end = 10", "T_end = 1");
    let (dir, run) = with_config("certify", &text, &[]);
    assert_eq!(run.code, 4);
    assert!(run.stderr.contains("warning"), "{}", run.stderr);
    assert!(number(&artifact(&dir, "certificate.txt"), "margin") < 0.0);

    let (_dir, run) = with_config("simulate", &text, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
}

#[test]
fn simulate_case_study_passes_the_iss_check() {
    let (dir, run) = with_config("simulate", CASE, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let summary = artifact(&dir, "summary.txt");
    assert_eq!(value(&summary, "iss_check"), "pass");
    assert_eq!(value(&summary, "samples"), "10001");
    assert!(number(&summary, "max_control_norm") > 0.0);
    assert!(number(&summary, "decay_rate") > 0.0);
    let csv = artifact(&dir, "trajectory.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x,normX,V,u1,u2,normd,c1,c2,c3,c4,c5,c6,c7,c8,c9,c10");
    assert_eq!(lines.len(), 10002);
    assert!(lines[10001].starts_with("10,"));
}

#[test]
fn simulate_with_zero_horizon_writes_only_the_header() {
    let (dir, run) = with_config("simulate", &CASE.replace("T_end = 10", "T_end = 0"), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(artifact(&dir, "trajectory.csv"), "t,x,normX,V,u1,u2,normd,c1,c2,c3,c4,c5,c6,c7,c8,c9,c10\n");
}

#[test]
fn simulate_rejects_a_step_longer_than_the_delay() {
    let (dir, run) = with_config("simulate", &CASE.replace("dt = 0.001", "dt = 0.1"), &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("[simulation] dt"), "{}", run.stderr);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn simulate_reports_divergence() {
    let text = TOY.replace("eigenvalues = 1, -1, -4", "eigenvalues = 900, -1, -4").replace("b = 0, 1, 1", "b = 1, 1, 1");
    let (_dir, run) = with_config("simulate", &text, &["--open-loop"]);
    assert_eq!(run.code, 5);
    assert!(run.stderr.contains("diverged"), "{}", run.stderr);
}

#[test]
fn simulate_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let text = CASE.replace("T_end = 10", "T_end = 2");
    fs::write(dir.path().join("run.ini"), text).unwrap();
    let outputs: Vec<PathBuf> = ["a", "b"]
        .iter()
        .map(|out| {
            let run = sdc(&["simulate", "--config", "run.ini", "--out", out], dir.path(), None);
            assert_eq!(run.code, 0, "{}", run.stderr);
            dir.path().join(out)
        })
        .collect();
    for name in ["trajectory.csv", "summary.txt"] {
        assert_eq!(fs::read(outputs[0].join(name)).unwrap(), fs::read(outputs[1].join(name)).unwrap(), "{name}");
    }
}

#[test]
fn case_study_reproduces_the_pipeline() {
    let dir = TempDir::new().unwrap();
    let run = sdc(&["case-study", "--out", "out"], dir.path(), Some("info"));
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stderr.contains("wrote"));
    for name in ["validate.txt", "design.txt", "certificate.txt", "trajectory.csv", "summary.txt"] {
        assert!(dir.path().join("out").join(name).exists(), "{name}");
    }
    assert!(number(&artifact(&dir, "certificate.txt"), "margin") > 0.0);
    let summary = artifact(&dir, "summary.txt");
    assert!(number(&summary, "final_normX") < 0.05 * number(&summary, "max_normX"));
    assert_eq!(value(&summary, "iss_check"), "pass");

    let (bundled, _) = with_config("simulate", CASE, &[]);
    assert_eq!(artifact(&bundled, "trajectory.csv"), artifact(&dir, "trajectory.csv"));
}

#[test]
fn case_study_without_disturbance_decays_at_the_certified_rate() {
    let dir = TempDir::new().unwrap();
    let run = sdc(&["case-study", "--out", "out", "--no-disturbance"], dir.path(), None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let summary = artifact(&dir, "summary.txt");
    assert!(number(&summary, "decay_rate") >= number(&summary, "kappa0"), "{summary}");
}

#[test]
fn case_study_open_loop_grows() {
    let dir = TempDir::new().unwrap();
    let run = sdc(&["case-study", "--out", "out", "--open-loop"], dir.path(), None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let summary = artifact(&dir, "summary.txt");
    assert_eq!(value(&summary, "mode"), "open-loop");
    assert_eq!(number(&summary, "max_control_norm"), 0.0);
    let growth = -number(&summary, "decay_rate");
    assert!((growth - 1.25).abs() < 0.05 * 1.25, "{growth}");
    assert!(!dir.path().join("out/certificate.txt").exists());
}
