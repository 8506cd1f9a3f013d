use std::path::Path;
use std::process::{Command, Output};

fn liefield(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liefield")).args(args).current_dir(dir).env_remove("FIELD_WORKERS").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn samples_in(path: &Path) -> usize {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["samples"].as_array().unwrap().len()
}

fn write_circle(dir: &Path) {
    let o = liefield(&["gen-curve", "--kind", "circle_T2", "--out", "circle.json"], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn gen_curve_circle_defaults_to_360_samples() {
    let dir = tempfile::tempdir().unwrap();
    write_circle(dir.path());
    assert_eq!(samples_in(&dir.path().join("circle.json")), 360);
}

#[test]
fn gen_curve_zero_twist_is_improper() {
    let dir = tempfile::tempdir().unwrap();
    let o = liefield(&["gen-curve", "--kind", "screw_SE3", "--zeta", "0,0,0,0,0,0", "--out", "z.json"], dir.path());
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("improper"));
}

#[test]
fn gen_curve_composed_has_5000_samples() {
    let dir = tempfile::tempdir().unwrap();
    let o = liefield(&["gen-curve", "--kind", "composed_SE3", "--out", "arm.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(samples_in(&dir.path().join("arm.json")), 5000);
}

#[test]
fn gen_curve_screw_from_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("gen.json"),
        r#"{"generate": {"kind": "screw_SE3", "n": 400, "zeta": [0.1, 0, 0, 0, 0, 6.283185307179586]}}"#,
    )
    .unwrap();
    let o = liefield(&["gen-curve", "--config", "gen.json", "--out", "s.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(samples_in(&dir.path().join("s.json")), 400);
}

#[test]
fn gen_curve_open_screw_that_does_not_close() {
    let dir = tempfile::tempdir().unwrap();
    // a closed request for a screw with non-zero pitch is rejected
    let o = liefield(&["gen-curve", "--kind", "screw_SE3", "--zeta", "0,0,1,0,0,6.283185307179586", "--n", "300"], dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = liefield(&["gen-curve", "--kind", "screw_SE3", "--zeta", "0,0,1,0,0,6.283185307179586", "--n", "300", "--open"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn gen_curve_flags_self_intersection() {
    let dir = tempfile::tempdir().unwrap();
    // two full turns retrace the same circle
    let o = liefield(&["gen-curve", "--kind", "screw_SE3", "--zeta", "0,0,0,0,0,12.566370614359172", "--n", "200", "--open"], dir.path());
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("self-intersects"));
}

#[test]
fn simulate_zero_duration_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    write_circle(dir.path());
    std::fs::write(
        dir.path().join("sim.json"),
        r#"{"curve": "circle.json", "duration": 0, "initial_state": [[1, 0, 0.5], [0, 1, 0.2], [0, 0, 1]]}"#,
    )
    .unwrap();
    let o = liefield(&["simulate", "--config", "sim.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("t,h00,"));
    assert!(lines[1].starts_with("0.0000000000000000e0,"));
}

#[test]
fn simulate_resolves_curve_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("cfg");
    std::fs::create_dir(&sub).unwrap();
    write_circle(&sub);
    std::fs::write(sub.join("sim.json"), r#"{"curve": "circle.json", "duration": 0.05}"#).unwrap();
    let o = liefield(&["simulate", "--config", "cfg/sim.json", "--out", "trace.csv"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
}

#[test]
fn simulate_missing_curve_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("sim.json"), r#"{"curve": "nowhere.json", "duration": 1}"#).unwrap();
    let o = liefield(&["simulate", "--config", "sim.json"], dir.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("nowhere.json"));
}

#[test]
fn simulate_rejects_unknown_keys_and_bad_states() {
    let dir = tempfile::tempdir().unwrap();
    write_circle(dir.path());
    std::fs::write(dir.path().join("a.json"), r#"{"curve": "circle.json", "speed": 2}"#).unwrap();
    assert_eq!(code(&liefield(&["simulate", "--config", "a.json"], dir.path())), 3);
    std::fs::write(dir.path().join("b.json"), r#"{"curve": "circle.json", "initial_state": [[2, 0, 0], [0, 1, 0], [0, 0, 1]]}"#).unwrap();
    assert_eq!(code(&liefield(&["simulate", "--config", "b.json"], dir.path())), 3);
    std::fs::write(dir.path().join("c.json"), r#"{"curve": "circle.json", "initial_state": [1, 0, 0, 1]}"#).unwrap();
    assert_eq!(code(&liefield(&["simulate", "--config", "c.json"], dir.path())), 3);
    std::fs::write(dir.path().join("d.json"), r#"{"curve": "circle.json", "dt": -1}"#).unwrap();
    assert_eq!(code(&liefield(&["simulate", "--config", "d.json"], dir.path())), 3);
    assert_eq!(code(&liefield(&["simulate"], dir.path())), 3);
}

#[test]
fn simulate_is_deterministic_across_search_modes() {
    let dir = tempfile::tempdir().unwrap();
    write_circle(dir.path());
    std::fs::write(
        dir.path().join("sim.json"),
        r#"{"curve": "circle.json", "duration": 2, "initial_state": [1, 0, 0, 0, 1, 0, 0, 0, 1], "seed": 5}"#,
    )
    .unwrap();
    let serial = liefield(&["simulate", "--config", "sim.json", "--parallel", "off"], dir.path());
    let parallel = liefield(&["simulate", "--config", "sim.json", "--parallel", "on", "--workers", "3"], dir.path());
    let again = liefield(&["simulate", "--config", "sim.json", "--parallel", "on", "--workers", "3"], dir.path());
    assert_eq!(code(&serial), 0, "{}", stderr(&serial));
    assert_eq!(serial.stdout, parallel.stdout);
    assert_eq!(parallel.stdout, again.stdout);
    // the start is the centre of the circle: the first row is a tie and escapes
    let text = String::from_utf8(serial.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",1,1"));
}

#[test]
fn field_grid_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    write_circle(dir.path());
    std::fs::write(dir.path().join("grid.json"), r#"{"curve": "circle.json", "grid": {"x": [-2, 2, 10], "y": [-2, 2, 10]}}"#).unwrap();
    let o = liefield(&["field-grid", "--config", "grid.json", "--out", "grid.csv"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 101);
    assert!(lines[0].starts_with("x,y,h00"));
    assert!(lines[0].ends_with(",D,kN,kT,near_tie"));
}

#[test]
fn field_grid_flags_the_circle_centre() {
    let dir = tempfile::tempdir().unwrap();
    write_circle(dir.path());
    std::fs::write(dir.path().join("grid.json"), r#"{"curve": "circle.json"}"#).unwrap();
    let o = liefield(&["field-grid", "--config", "grid.json", "--x", "-1,1,3", "--y", "-1,1,3"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let centre = text.lines().find(|l| l.starts_with("0.0000000000000000e0,0.0000000000000000e0,")).unwrap();
    assert!(centre.ends_with(",1"));
    assert!(centre.contains("NaN"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",1")).count(), 1);
}

#[test]
fn check_translation_distance_properties_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = liefield(&["check", "T3", "--trials", "20", "--out", "report.json"], dir.path());
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    for name in ["left_invariance", "chainability", "local_linearity", "log_exp_log", "oracle_equivalence", "euclidean_path"] {
        let line = out.lines().find(|l| l.contains(name)).unwrap();
        assert!(line.ends_with("PASS"), "{line}");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["group"], "T(3)");
    // the field properties fail at sample resolution, which makes the run fail
    assert_eq!(code(&o), 1);
}

#[test]
fn check_zero_trials_passes_vacuously() {
    let dir = tempfile::tempdir().unwrap();
    let o = liefield(&["check", "SE3", "--trials", "0"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("vacuous"));
}

#[test]
fn check_unknown_group_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&liefield(&["check", "GL2"], dir.path())), 3);
    assert_eq!(code(&liefield(&["check", "T(0)"], dir.path())), 3);
}

#[test]
fn bench_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = liefield(&["bench", "--n", "200", "--trials", "10", "--warmup", "30", "--kernel-trials", "100"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["field_evaluation"]["n"], 200);
    assert_eq!(v["field_evaluation"]["checksum_timed"], v["field_evaluation"]["checksum_untimed"]);
    assert_eq!(v["distance_kernels"]["trials"], 100);
}

#[test]
fn usage_errors_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&liefield(&["frobnicate"], dir.path())), 3);
    assert_eq!(code(&liefield(&["simulate", "--parallel", "maybe"], dir.path())), 3);
    assert_eq!(code(&liefield(&["--help"], dir.path())), 0);
}

#[test]
fn simulate_se3_demo_writes_a_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let o = liefield(&["gen-curve", "--kind", "screw_SE3", "--n", "500", "--out", "screw.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    std::fs::write(
        dir.path().join("sim.json"),
        r#"{"curve": "screw.json", "dt": 0.01, "duration": 0.5,
            "initial_state": [[1, 0, 0, 0.35], [0, 0.955336489125606, -0.29552020666134, 0.1], [0, 0.29552020666134, 0.955336489125606, 0.45], [0, 0, 0, 1]]}"#,
    )
    .unwrap();
    let o = liefield(&["simulate", "--config", "sim.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 51);
    // t, 16 state entries, s_star, D, |xi_N|, |xi_T|, kN, kT, position, orientation, flags
    assert!(rows.iter().all(|r| r.len() == 27 && !r[23].is_empty() && !r[24].is_empty()));
}
