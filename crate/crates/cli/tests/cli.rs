use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ern-scatter"));
    c.env_remove("ERN_SCATTER_THREADS");
    c
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(scenario: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(scenario)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

const SMALL_GRID: &str = r#""grid": {"u_min": 0, "v_min": 0, "u_max": 20, "v_max": 20, "n_u": 80, "n_v": 80}"#;

#[test]
fn minimal_roundtrip_closes_to_round_off() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"scenario": "roundtrip"}"#);
    let out = dir.path().join("out");
    let o = run("roundtrip", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("roundtrip.csv")).unwrap();
    for name in ["backward_of_forward_defect", "forward_of_backward_defect"] {
        assert!(column(&csv, name).iter().all(|d| *d <= 1e-12), "{csv}");
    }
    let s = summary(&out);
    assert_eq!(s["passed"], true);
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn real_frequency_mode_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"mode": {"omega": [0.5, 0.0], "f_horizon": [1, 0], "f_infinity": [1, 0]}}"#,
    );
    let o = run("mode", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mode"));
}

#[test]
fn bad_configs_exit_with_the_config_code_and_name_the_key() {
    let dir = TempDir::new().unwrap();
    for (body, key) in [
        (r#"{"mass": -1}"#, "mass"),
        (r#"{"truncations": [80, 40]}"#, "truncations"),
        (r#"{"ell": "one"}"#, "ell"),
        (r#"{"grid": {"u_min": 0, "v_min": 0, "u_max": 4, "v_max": 4, "n_u": 8}}"#, "n_v"),
    ] {
        let cfg = write_config(dir.path(), body);
        let o = run("evolve-forward", &cfg, &dir.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(1), "{body}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(key), "{body}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run("evolve-forward", &dir.path().join("missing.json"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let o = bin().arg("no-such-scenario").arg("--config").arg("x.json").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn convergence_reports_second_order() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{{{SMALL_GRID}}}"));
    let out = dir.path().join("out");
    let o = run("convergence", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(csv.starts_with("h,error,relative_error,observed_order\n"));
    let orders = column(&csv, "observed_order");
    assert_eq!(orders.len(), 3);
    assert!(orders[0].is_nan());
    for p in &orders[1..] {
        assert!((p - 2.0).abs() < 0.3, "{csv}");
    }
}

#[test]
fn identical_configs_give_byte_identical_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{{{SMALL_GRID}, \"ell\": 1}}"));
    for scenario in ["scattering", "convergence"] {
        let a = dir.path().join(format!("{scenario}_a"));
        let b = dir.path().join(format!("{scenario}_b"));
        assert_eq!(run(scenario, &cfg, &a, &["--threads", "1"]).status.code(), Some(0));
        let o = bin()
            .arg(scenario)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&b)
            .env("ERN_SCATTER_THREADS", "3")
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        let mut names: Vec<_> = std::fs::read_dir(&a)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|n| n != "manifest.json")
            .collect();
        names.sort();
        assert!(names.len() >= 2);
        for n in names {
            assert_eq!(
                std::fs::read(a.join(&n)).unwrap(),
                std::fs::read(b.join(&n)).unwrap(),
                "{scenario}: {n:?}"
            );
        }
    }
}

#[test]
fn manifest_lists_existing_nonempty_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{{{SMALL_GRID}}}"));
    let out = dir.path().join("out");
    assert_eq!(run("energies", &cfg, &out, &[]).status.code(), Some(0));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["scenario"], "energies");
    assert!(m["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    let outputs = m["outputs"].as_array().unwrap();
    assert!(outputs.len() >= 3);
    for f in outputs {
        let meta = std::fs::metadata(out.join(f.as_str().unwrap())).unwrap();
        assert!(meta.len() > 0);
    }
}

#[test]
fn profiles_are_written_in_ascending_coordinate_order() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{{{SMALL_GRID}}}"));
    let out = dir.path().join("out");
    let o = run("evolve-forward", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("horizon_profile.csv")).unwrap();
    assert!(csv.starts_with("v,phi_re,phi_im\n"));
    assert!(column(&csv, "v").windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn zero_data_runs_give_zero_profiles() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{{{SMALL_GRID}, \"data\": {{\"kind\": \"zero\"}}}}"));
    let out = dir.path().join("out");
    assert_eq!(run("evolve-forward", &cfg, &out, &[]).status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("infinity_profile.csv")).unwrap();
    assert!(column(&csv, "phi_re").iter().all(|x| *x == 0.0));
}

#[test]
fn failed_invariants_exit_with_code_three_and_keep_outputs() {
    let dir = TempDir::new().unwrap();
    // The localised energy of the tail study saturates instead of growing.
    let cfg = write_config(dir.path(), r#"{"tail": {"spacing": 0.5}}"#);
    let out = dir.path().join("out");
    let o = run("theoremB", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["passed"], false);
    assert_eq!(s["invariants"]["localized_energy_grows"], false);
    assert_eq!(s["invariants"]["subcritical_partial_integrals_converge"], true);
    assert!(out.join("tail_study.csv").exists());
}
