use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superadiabatic")).args(args).arg("--out").arg(out).env_remove("SUPERADIABATIC_PRECISION").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn summary(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn coupling_on_bundled_pole_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["coupling", "--config", "polepair"], dir.path());
    let s = stdout(&o);
    assert!(s.contains("PASS bounded_error_ratio"), "{s}");
    // the peak prefactor misses its tolerance on this ladder; the failure is reported, not hidden
    assert!(s.contains("FAIL peak_scaling"), "{s}");
    assert_eq!(o.status.code(), Some(4));
    let rows = csv_rows(&dir.path().join("polepair_coupling.csv"));
    assert_eq!(rows.len(), 4 * 21);
    assert_eq!(rows[0].len(), 9);
    // {:.16e}: 17 significant digits
    assert!(rows[0][3].contains('e') && rows[0][3].split('e').next().unwrap().len() >= 18, "{}", rows[0][3]);
    let j = summary(&dir.path().join("polepair_coupling.json"));
    assert_eq!(j["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(j["provenance"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(j["pass"], false);
}

#[test]
fn empty_ladder_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"name": "x", "model": {"type": "pole_pair", "gamma": 1, "t_r": 0, "t_c": 1}, "epsilons": []}"#);
    let o = run(&["coupling", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty epsilon ladder"));
    assert!(!dir.path().join("x_coupling.csv").exists());
}

#[test]
fn unknown_fields_and_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"name": "x", "epsilon": [0.1]}"#);
    assert_eq!(run(&["norms", "--config", &cfg], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["norms", "--config", "no_such_config"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["reparam", "--config", "polepair"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn geometry_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"name": "x", "model": {"type": "rational_xz", "x": {"num": [0, 1]}, "z": {"num": [1]}, "domain": [-5, 5],
            "critical_points": [{"s0": [0.5, 0.0], "m": 0, "n": 1, "f0": [1, 0], "g_x0": [1, 0], "g_z0": [0, 0], "sign": 1}]}}"#,
    );
    assert_eq!(run(&["norms", "--config", &cfg], dir.path()).status.code(), Some(3));
}

#[test]
fn dry_run_prints_plan_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = run(&["simulate", "--config", "landau_zener", "--dry-run", "--jobs", "3"], &out);
    assert_eq!(o.status.code(), Some(0));
    let plan: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(plan["provenance"]["command"], "simulate");
    assert_eq!(plan["jobs"], 3);
    assert_eq!(plan["config"]["simulate"]["margin"], 8.0);
    assert!(!out.exists());
}

#[test]
fn precision_flag_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_superadiabatic");
    let o = Command::new(bin).args(["norms", "--dry-run"]).env("SUPERADIABATIC_PRECISION", "double").output().unwrap();
    let plan: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(plan["provenance"]["precision"], "double");
    let o = Command::new(bin).args(["norms", "--dry-run", "--precision", "extended"]).env("SUPERADIABATIC_PRECISION", "double").output().unwrap();
    let plan: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(plan["provenance"]["precision"], "extended");
    assert_eq!(run(&["norms", "--precision", "quad"], dir.path()).status.code(), Some(2));
}

#[test]
fn reparam_reports_landau_zener_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["reparam", "--config", "landau_zener"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let j = summary(&dir.path().join("landau_zener_reparam.json"));
    let d = &j["results"]["singularity"];
    assert!((d["t_c"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
    assert!((d["gamma"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-8);
    assert!((d["alpha"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-8);
    assert!(stdout(&o).contains("t_c = 1.5707963"));
    let rows = csv_rows(&dir.path().join("landau_zener_reparam.csv"));
    assert_eq!(rows.len(), 41);
    // theta is monotone in t
    let th: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(th.windows(2).all(|w| (w[1] - w[0]) * (th[40] - th[0]) > 0.0));
}

#[test]
fn darboux_simple_pole_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"name": "geo", "darboux": {"function": {"type": "power", "exponent": -1}, "n_min": 1, "n_max": 200}}"#);
    let o = run(&["darboux", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = csv_rows(&dir.path().join("geo_darboux.csv"));
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r[5].parse::<f64>().unwrap() <= 1e-13));
}

#[test]
fn darboux_square_root_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["darboux", "--config", "darboux_sqrt"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS error_rate"));
    let o = run(&["darboux", "--config", "polepair_remainder"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let j = summary(&dir.path().join("polepair_remainder_darboux.json"));
    // an order -1/3 remainder on the same circle leaves a relative error ~ n^{-2/3}
    let slope = j["results"]["slope"].as_f64().unwrap();
    assert!((slope + 2.0 / 3.0).abs() < 0.05, "{slope}");
}

#[test]
fn bounds_pass_and_corruption_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bounds", "--config", "polepair"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(csv_rows(&dir.path().join("polepair_bounds.csv")).len(), 30);
    assert_eq!(csv_rows(&dir.path().join("polepair_lemma.csv")).len(), 100);
    let j = summary(&dir.path().join("polepair_bounds.json"));
    let m = j["results"]["minimal_m"].as_f64().unwrap();
    assert!(m > 0.0 && m < 42.0);

    let o = run(&["bounds", "--config", "polepair", "--corrupt", "5"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("FAIL recursion_residual"));
    assert_eq!(run(&["bounds", "--corrupt", "0"], dir.path()).status.code(), Some(2));
}

#[test]
fn simulate_landau_zener() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--config", "landau_zener"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = csv_rows(&dir.path().join("landau_zener_simulate_0.csv"));
    assert_eq!(rows.len(), 801);
    let j = summary(&dir.path().join("landau_zener_simulate.json"));
    let run = &j["results"]["runs"][0];
    let p = run["final_probability"].as_f64().unwrap();
    let want = run["reference_probability"].as_f64().unwrap();
    assert!((p / want - 1.0).abs() < 0.03);
    assert!(run["fit"]["relative_residual"].as_f64().unwrap() < 0.05);
}

#[test]
fn jobs_do_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&["coupling", "--jobs", "1"], a.path());
    run(&["coupling", "--jobs", "4"], b.path());
    for f in ["polepair_coupling.csv", "polepair_coupling.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn gnuplot_scripts_go_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["norms", "--gnuplot"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("set datafile separator ','"), "{s}");
    assert!(s.contains("polepair_norms.csv' using 1:2"));
    assert!(!s.contains("wrote"));
}
