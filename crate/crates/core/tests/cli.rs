//! End-to-end runs of the `jlmqt` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FIG3: &str = "[junction]\nej_over_ec = 100\nomega_ratio = 2\nj_ratio = 1\nalpha1 = 0.1\nalpha2 = 0.1\nkappa = 1\nbias = 0.95\n";

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn jlmqt(dir: &Path, config: &str, args: &[&str]) -> Run {
    let path = dir.join("run.cfg");
    std::fs::write(&path, config).unwrap();
    let Output {
        status,
        stdout,
        stderr,
    } = Command::new(env!("CARGO_BIN_EXE_jlmqt"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .output()
        .unwrap();
    Run {
        code: status.code().unwrap(),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn junction(bias: f64) -> String {
    FIG3.replace("bias = 0.95", &format!("bias = {bias}"))
}

fn out(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

#[test]
fn derive_reports_epsilon() {
    let dir = TempDir::new().unwrap();
    let r = jlmqt(dir.path(), FIG3, &["derive"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let eps: f64 = r
        .stdout
        .lines()
        .find_map(|l| l.strip_prefix("epsilon="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((eps - 3.5355e-3).abs() < 1e-7, "{eps}");
    assert!(r.stdout.starts_with("ej1=5.0000000000000000e1\n"));
}

#[test]
fn derive_json() {
    let dir = TempDir::new().unwrap();
    let r = jlmqt(dir.path(), FIG3, &["derive", "--json"]);
    assert_eq!(r.code, 0);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["g_minus"], serde_json::json!(0.0));
    assert!(v["epsilon"].as_f64().unwrap() > 0.0);
}

#[test]
fn missing_ein_is_a_parse_error_naming_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg = "[junction]\nej1 = 50\nej2 = 50\nalpha1 = 0.1\nalpha2 = 0.1\nbias = 0.9\n";
    let r = jlmqt(dir.path(), cfg, &["derive"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("ein"), "{}", r.stderr);
}

#[test]
fn config_syntax_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    for cfg in ["[junction]\nej1 50\n", "[run]\nwarp = 9\n", "ej1 = 1\n"] {
        let r = jlmqt(dir.path(), cfg, &["derive"]);
        assert_eq!(r.code, 2, "{cfg:?}");
        assert!(r.stderr.contains("line"), "{}", r.stderr);
    }
    let r = jlmqt(dir.path(), FIG3, &["derive", "--seedless"]);
    assert_eq!(r.code, 2);
}

#[test]
fn kappa_zero_violates_invariant() {
    let dir = TempDir::new().unwrap();
    let cfg = FIG3.replace("kappa = 1", "kappa = 0");
    let r = jlmqt(dir.path(), &cfg, &["derive"]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("+1 or -1"), "{}", r.stderr);
}

#[test]
fn negative_kappa_warns() {
    let dir = TempDir::new().unwrap();
    let cfg = "[junction]\nej1 = 70\nej2 = 30\nein = 12\nalpha1 = 0.15\nalpha2 = 0.05\nkappa = -1\nbias = 0.3\n";
    let r = jlmqt(dir.path(), cfg, &["derive"]);
    assert_eq!(r.code, 0);
    assert!(r.stderr.contains("provisional"));
    assert!(
        r.stdout.contains("ej_tilt=4.0000000000000000e1"),
        "{}",
        r.stdout
    );
}

#[test]
fn simulate_writes_csv_with_drift_footer() {
    let dir = TempDir::new().unwrap();
    let path = out(&dir, "traj.csv");
    let cfg = format!("{}[run]\nn_steps = 2000\ntheta0 = 0.01\n", junction(0.0));
    let r = jlmqt(
        dir.path(),
        &cfg,
        &["simulate", "--out", path.to_str().unwrap()],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("tau,theta,psi,theta_dot,psi_dot,energy,reduced_voltage")
    );
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2002);
    let drift: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# max_energy_drift="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(drift < 1e-8);
    assert!(!text.contains("switch_tau"));
    assert!(!text.contains('\r'));
}

#[test]
fn simulate_stride_and_determinism() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{}[run]\nn_steps = 1000\nstride = 3\n", junction(0.5));
    let a = jlmqt(dir.path(), &cfg, &["simulate", "--stride", "10"]);
    let b = jlmqt(dir.path(), &cfg, &["simulate", "--stride", "10"]);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    let taus: Vec<f64> = a
        .stdout
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(taus.len(), 101);
    assert!((taus[1] - 1e-2).abs() < 1e-15);
    // the config stride applies when no flag is given
    let c = jlmqt(dir.path(), &cfg, &["simulate"]);
    assert_eq!(
        c.stdout.lines().filter(|l| !l.starts_with('#')).count(),
        1 + 334
    );
}

#[test]
fn simulate_reports_switching() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{}[run]\nn_steps = 5000\nstride = 50\n", junction(1.2));
    let r = jlmqt(dir.path(), &cfg, &["simulate"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let tau: f64 = r
        .stdout
        .lines()
        .find_map(|l| l.strip_prefix("# switch_tau="))
        .expect("switching footer")
        .parse()
        .unwrap();
    assert!(tau > 0.0 && tau <= 5.0);
}

#[test]
fn simulate_blowup_exits_4() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(
        "{}[run]\ndt = 10\nn_steps = 100\ntheta_dot0 = 1e308\n",
        junction(0.0)
    );
    let r = jlmqt(dir.path(), &cfg, &["simulate"]);
    assert_eq!(r.code, 4, "{}", r.stderr);
    assert!(r.stderr.contains("non-finite"));
}

#[test]
fn escape_reports_positive_enhancement() {
    let dir = TempDir::new().unwrap();
    let r = jlmqt(dir.path(), FIG3, &["escape"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let ln: f64 = r
        .stdout
        .lines()
        .find_map(|l| l.strip_prefix("ln_ratio="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(ln > 0.0);
    assert!(
        r.stdout.contains("bare.exponent_b=2.04896622030736"),
        "{}",
        r.stdout
    );
    assert!(r.stdout.contains("\nratio="));
}

#[test]
fn escape_with_forced_zero_eps() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{FIG3}[run]\nepsilon = 0\n");
    let r = jlmqt(dir.path(), &cfg, &["escape", "--json"]);
    assert_eq!(r.code, 0);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["ln_ratio"], serde_json::json!(0.0));
    assert_eq!(v["ratio"], serde_json::json!(1.0));
}

#[test]
fn escape_profile_file() {
    let dir = TempDir::new().unwrap();
    let prof = out(&dir, "profile.csv");
    let cfg = format!(
        "{FIG3}[run]\nprofile_out = {}\nprofile_points = 64\n",
        prof.display()
    );
    assert_eq!(jlmqt(dir.path(), &cfg, &["escape"]).code, 0);
    let text = std::fs::read_to_string(prof).unwrap();
    assert!(text.starts_with("theta,bare,effective\n"));
    assert_eq!(text.lines().count(), 65);
}

#[test]
fn escape_above_critical_exits_5() {
    let dir = TempDir::new().unwrap();
    let r = jlmqt(dir.path(), &junction(1.5), &["escape"]);
    assert_eq!(r.code, 5);
    assert!(r.stderr.contains("no barrier"));
}

const SWEEP: &str = "[run]\naxis1 = bias\naxis1_min = 0.90\naxis1_max = 0.96\naxis1_count = 4\naxis2 = omega_ratio\naxis2_min = 0.5\naxis2_max = 5\naxis2_count = 5\n";

#[test]
fn sweep_writes_csv_and_json() {
    let dir = TempDir::new().unwrap();
    let csv = out(&dir, "grid.csv");
    let cfg = format!("{FIG3}{SWEEP}");
    let r = jlmqt(dir.path(), &cfg, &["sweep", "--out", csv.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "axis1,axis2,ln_ratio,valid");
    assert_eq!(rows.len(), 21);
    assert!(rows[1].starts_with("9.0000000000000002e-1,5.0000000000000000e-1,"));
    assert!(rows[1..].iter().all(|r| r.ends_with(",1")));

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(doc["axis1"]["name"], "bias");
    assert_eq!(doc["axis2"]["count"], 5);
    assert_eq!(doc["fixed"]["ej1"], serde_json::json!(50.0));
    assert_eq!(doc["ln_ratio"].as_array().unwrap().len(), 4);
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{FIG3}{SWEEP}");
    let mut files = Vec::new();
    for tag in ["a", "b"] {
        let csv = out(&dir, &format!("{tag}.csv"));
        let r = jlmqt(dir.path(), &cfg, &["sweep", "--out", csv.to_str().unwrap()]);
        assert_eq!(r.code, 0);
        files.push((
            std::fs::read(&csv).unwrap(),
            std::fs::read(csv.with_extension("json")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn sweep_above_critical_flags_every_cell() {
    let dir = TempDir::new().unwrap();
    let csv = out(&dir, "dead.csv");
    let cfg = format!(
        "{FIG3}{}",
        SWEEP
            .replace("axis1_min = 0.90", "axis1_min = 1.01")
            .replace("axis1_max = 0.96", "axis1_max = 1.2")
    );
    let r = jlmqt(dir.path(), &cfg, &["sweep", "--out", csv.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert!(r.stderr.contains("warning"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",nan,0")));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(doc["valid_count"], 0);
    assert!(doc["ln_ratio"][0][0].is_null());
}

#[test]
fn sweep_axis_errors_exit_6() {
    let dir = TempDir::new().unwrap();
    for bad in [
        SWEEP.replace("axis2 = omega_ratio", "axis2 = temperature"),
        SWEEP.replace("axis1_max = 0.96", "axis1_max = 0.5"),
        SWEEP.replace("axis2_count = 5", "axis2_count = 1"),
        SWEEP.replace("axis2 = omega_ratio", "axis2 = bias"),
    ] {
        let r = jlmqt(dir.path(), &format!("{FIG3}{bad}"), &["sweep"]);
        assert_eq!(r.code, 6, "{bad}\n{}", r.stderr);
    }
}

#[test]
fn verify_default_passes() {
    let dir = TempDir::new().unwrap();
    let r = jlmqt(dir.path(), FIG3, &["verify"]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    assert!(r.stdout.starts_with("check"));
    assert_eq!(r.stdout.matches("PASS").count(), 9);
}

#[test]
fn verify_catches_flipped_g_plus() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{FIG3}[run]\nflip_g_plus = true\n");
    let r = jlmqt(dir.path(), &cfg, &["verify"]);
    assert_eq!(r.code, 1);
    let failing: Vec<&str> = r.stdout.lines().filter(|l| l.ends_with("FAIL")).collect();
    assert_eq!(failing.len(), 1);
    assert!(failing[0].starts_with("epsilon_dual_form"));
}

#[test]
fn verify_flags_coarse_spectrum_grid() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{FIG3}[run]\nspectrum_points = 12\n");
    let r = jlmqt(dir.path(), &cfg, &["verify", "--json"]);
    assert_eq!(r.code, 1);
    let checks: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    let res = checks
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "spectrum_resolution")
        .unwrap();
    assert_eq!(res["passed"], false);
}
