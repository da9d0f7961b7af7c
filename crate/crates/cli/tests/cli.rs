use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cumulant"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn spin_config(method: &str, t_eff: f64) -> Value {
    serde_json::json!({
        "version": 1,
        "model": {"kind": "spin_boson"},
        "bath": {"spectral": "ohmic", "alpha": 0.05, "t_eff": t_eff},
        "method": method,
        "time_grid": {"t_max": 10.0, "n_points": 21},
        "initial_state": "plus",
        "observables": [[0, 0], [0, 1]]
    })
}

fn simulate(config: &Path, out: &Path) -> Output {
    bin()
        .arg("simulate")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn shipped_configs_validate() {
    let mut count = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let out = bin().arg("check").arg(&path).output().unwrap();
            assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            count += 1;
        }
    }
    assert!(count >= 5);
}

#[test]
fn simulate_writes_csv_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &spin_config("star", 1.0));
    let out = simulate(&cfg, &tmp.path().join("o"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (header, rows) = read_csv(&tmp.path().join("o/run_schrodinger.csv"));
    assert_eq!(
        header,
        ["t", "rho_00_re", "rho_00_im", "rho_00_abs", "rho_01_re", "rho_01_im", "rho_01_abs"]
    );
    assert_eq!(rows.len(), 21);
    assert_eq!(rows[0][4], 0.5);
    assert_eq!(rows[20][0], 10.0);
    assert!(tmp.path().join("o/run_interaction.csv").exists());

    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("o/run_report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "ok");
    assert_eq!(report["method"], "star");
    assert_eq!(report["config"]["quadrature"]["rel_tol"], 1e-8);
    assert_eq!(report["diagnostics"].as_array().unwrap().len(), 21);
    assert!(report["cptp_checks"].as_array().unwrap().iter().all(|c| c["cptp"] == true));
    assert!(report["max_trace_defect"].as_f64().unwrap() < 1e-9);
    assert!(report["timings"]["total_s"].as_f64().is_some());
}

#[test]
fn csv_output_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &spin_config("doublestar", 1.0));
    assert!(simulate(&cfg, &tmp.path().join("a")).status.success());
    assert!(simulate(&cfg, &tmp.path().join("b")).status.success());
    for picture in ["schrodinger", "interaction"] {
        let name = format!("run_{picture}.csv");
        let a = fs::read(tmp.path().join("a").join(&name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn witness_run_reports_non_monotone_distance() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("r.json");
    let out = bin()
        .arg("simulate")
        .arg(configs_dir().join("fig5_witness_star.json"))
        .arg("--out")
        .arg(tmp.path())
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert!(report["witness"]["total_increase"].as_f64().unwrap() > 0.0);
    assert_eq!(report["witness"]["monotone"], false);
    assert!(!report["witness"]["increase_intervals"].as_array().unwrap().is_empty());
}

#[test]
fn uncoupled_run_is_closed_evolution() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = spin_config("star", 1.0);
    cfg["bath"]["alpha"] = 0.0.into();
    let path = write_config(tmp.path(), "c.json", &cfg);
    assert!(simulate(&path, tmp.path()).status.success());
    let (_, rows) = read_csv(&tmp.path().join("run_schrodinger.csv"));
    for row in rows {
        assert!((row[1] - 0.5).abs() < 1e-14);
        assert!((row[6] - 0.5).abs() < 1e-14);
    }
}

#[test]
fn config_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let exact = write_config(tmp.path(), "exact.json", &spin_config("exact-cutoff", 1.0));
    let out = bin().arg("check").arg(&exact).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("exact-cutoff") && err.contains("bath.spectral"), "{err}");

    let mut typo = spin_config("star", 1.0);
    typo["bath"]["temperature"] = 1.0.into();
    let path = write_config(tmp.path(), "typo.json", &typo);
    let out = bin().arg("simulate").arg(&path).arg("--out").arg(tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("temperature"));

    let mut nested = spin_config("star", 1.0);
    nested["model"] = serde_json::json!({"kind": "qutrit_boson", "delta_omega": 0.1, "delta": 1});
    let path = write_config(tmp.path(), "nested.json", &nested);
    assert_eq!(bin().arg("check").arg(&path).output().unwrap().status.code(), Some(2));

    let mut preset = spin_config("star", 1.0);
    preset["initial_state"] = "nowhere".into();
    let path = write_config(tmp.path(), "preset.json", &preset);
    assert_eq!(bin().arg("check").arg(&path).output().unwrap().status.code(), Some(2));

    fs::write(tmp.path().join("broken.json"), "{\"version\": 1,").unwrap();
    let out = bin().arg("check").arg(tmp.path().join("broken.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn quadrature_failure_exits_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = spin_config("exact-cutoff", 1.0);
    cfg["bath"] = serde_json::json!({
        "spectral": "ohmic-exponential-cutoff", "alpha": 0.05, "omega_c": 5.0, "t_eff": 1.0
    });
    cfg["quadrature"] = serde_json::json!({"rel_tol": 1e-15, "abs_tol": 1e-300, "max_subdivisions": 1});
    let path = write_config(tmp.path(), "c.json", &cfg);
    let report = tmp.path().join("fail.json");
    let out = bin()
        .arg("simulate")
        .arg(&path)
        .arg("--out")
        .arg(tmp.path())
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("quadrature did not converge"));
    let report: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(report["status"], "failed");
    assert_eq!(report["category"], "numerical");
}

#[test]
fn compare_stacks_methods() {
    let tmp = tempfile::tempdir().unwrap();
    let paths: Vec<PathBuf> = ["davies-global", "star", "doublestar"]
        .iter()
        .map(|m| write_config(tmp.path(), &format!("{m}.json"), &spin_config(m, 1.0)))
        .collect();
    let csv = tmp.path().join("all.csv");
    let out = bin().arg("compare").args(&paths).arg("--out").arg(&csv).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("method,t,rho_00_re"));
    let methods: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods.len(), 63);
    assert_eq!(methods[0], "davies-global");
    assert_eq!(methods[62], "doublestar");

    let mut other = spin_config("star", 1.0);
    other["time_grid"]["n_points"] = 11.into();
    let odd = write_config(tmp.path(), "odd.json", &other);
    let out = bin().arg("compare").arg(&paths[0]).arg(&odd).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("time_grid"));
}

#[test]
fn single_config_compare_matches_simulate() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "c.json", &spin_config("star", 1.0));
    assert!(simulate(&path, tmp.path()).status.success());
    let out = bin().arg("compare").arg(&path).output().unwrap();
    assert!(out.status.success());
    let combined = String::from_utf8(out.stdout).unwrap();
    let single = fs::read_to_string(tmp.path().join("run_schrodinger.csv")).unwrap();
    let expected: String = single
        .lines()
        .enumerate()
        .map(|(k, l)| if k == 0 { format!("method,{l}\n") } else { format!("star,{l}\n") })
        .collect();
    assert_eq!(combined, expected);
}
