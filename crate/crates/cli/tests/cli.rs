//! End-to-end behavior of the `oqdyn` binary: validation diagnostics, exit
//! codes, artifact shape, and byte-level reproducibility.

use serde_json::{json, Value};
use std::path::Path;
use std::process::Output;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_oqdyn")
}

fn write_config(dir: &Path, cfg: &Value) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(cfg).unwrap()).unwrap();
    path
}

fn run(dir: &Path, cfg: &Value, extra: &[&str]) -> Output {
    let path = write_config(dir, cfg);
    std::process::Command::new(bin())
        .arg("run")
        .arg(&path)
        .arg("--out")
        .arg(dir)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn zero_matrix(d: usize) -> Value {
    json!(vec![vec![[0.0, 0.0]; d]; d])
}

fn sigma_minus_json() -> Value {
    json!([[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]])
}

fn sigma_x_json() -> Value {
    json!([[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]])
}

fn excited_state() -> Value {
    json!([[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]])
}

fn damping_config() -> Value {
    json!({
        "kind": "semigroup",
        "model": {
            "dim": 2,
            "H": zero_matrix(2),
            "channels": [{"gamma": 1.0, "L": sigma_minus_json()}]
        },
        "initial_state": excited_state(),
        "grid": {"t_max": 2.0, "n_steps": 40}
    })
}

fn erlang_bitflip_model() -> Value {
    json!({
        "dim": 2,
        "E": {"kraus": [sigma_x_json()]},
        "F_generator": {"dim": 2, "H": zero_matrix(2), "channels": []},
        "wtd": {"alpha": [1.0, 0.0], "S": [[-1.0, 1.0], [0.0, -1.0]]}
    })
}

#[test]
fn semigroup_damping_population_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &damping_config(), &[]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("series.csv"));
    let t_col = header.iter().position(|h| h == "t").unwrap();
    let p_col = header.iter().position(|h| h == "pop_1").unwrap();
    for row in &rows {
        assert!((row[p_col] - (-row[t_col]).exp()).abs() < 1e-8);
    }
    // manifest and summary exist
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["kind"], "semigroup");
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn measure_on_semigroup_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "kind": "measure",
        "model": {"gksl": {
            "dim": 2,
            "H": zero_matrix(2),
            "channels": [{"gamma": 1.0, "L": sigma_minus_json()}]
        }},
        "grid": {"t_max": 3.0, "n_steps": 40},
        "solver": {"opt": {"bloch_polar": 4, "bloch_azimuthal": 6, "random_pairs": 4, "refine_rounds": 6, "weight_points": 11}}
    });
    let out = run(dir.path(), &cfg, &[]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["blp"]["value"].as_f64().unwrap() < 1e-9);
    assert!(summary["helstrom"]["value"].as_f64().unwrap() < 1e-9);
}

#[test]
fn validate_reports_all_violations() {
    let dir = tempfile::tempdir().unwrap();
    // valid config: empty diagnostics
    let path = write_config(dir.path(), &damping_config());
    let out = std::process::Command::new(bin())
        .args(["validate", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");

    // negative rate and a bad initial state at once: both reported
    let bad = json!({
        "kind": "semigroup",
        "model": {
            "dim": 2,
            "H": zero_matrix(2),
            "channels": [{"gamma": -0.5, "L": sigma_minus_json()}]
        },
        "initial_state": zero_matrix(2),
        "grid": {"t_max": -1.0, "n_steps": 40}
    });
    let path = write_config(dir.path(), &bad);
    let out = std::process::Command::new(bin())
        .args(["validate", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("channel 0: negative rate"), "{text}");
    assert!(text.contains("initial_state"), "{text}");
    assert!(text.contains("grid.t_max"), "{text}");
}

#[test]
fn validate_reports_nonstochastic_transition_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "kind": "classical",
        "model": {
            "pi": [[0.0, 0.9], [1.0, 0.0]],
            "wtds": [
                {"alpha": [1.0], "S": [[-1.0]]},
                {"alpha": [1.0], "S": [[-1.0]]}
            ]
        },
        "initial_distribution": [1.0, 0.0],
        "grid": {"t_max": 1.0, "n_steps": 10},
        "solver": {"method": "gme"}
    });
    let path = write_config(dir.path(), &cfg);
    let out = std::process::Command::new(bin())
        .args(["validate", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("column 1") && text.contains("0.9"), "{text}");
}

#[test]
fn unknown_keys_are_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = damping_config();
    cfg["surprise"] = json!(1);
    let out = run(dir.path(), &cfg, &[]);
    assert_eq!(exit_code(&out), 2);
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("surprise"), "{text}");
}

#[test]
fn identical_seeded_runs_are_byte_identical() {
    let cfg = json!({
        "kind": "semimarkov",
        "model": erlang_bitflip_model(),
        "initial_state": excited_state(),
        "grid": {"t_max": 2.0, "n_steps": 20},
        "solver": {"method": "mc", "n_traj": 4000, "seed": 9}
    });
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    assert_eq!(exit_code(&run(dir_a.path(), &cfg, &["--threads", "4"])), 0);
    assert_eq!(exit_code(&run(dir_b.path(), &cfg, &["--threads", "2"])), 0);
    for name in ["series.csv", "summary.json", "run_manifest.json"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    // seed override changes the series
    let dir_c = tempfile::tempdir().unwrap();
    assert_eq!(exit_code(&run(dir_c.path(), &cfg, &["--seed", "10"])), 0);
    let a = std::fs::read(dir_a.path().join("series.csv")).unwrap();
    let c = std::fs::read(dir_c.path().join("series.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn non_invertible_family_exits_3() {
    // tabulated family that jumps to the completely depolarizing map
    let id4 = json!([
        [[1.0,0.0],[0.0,0.0],[0.0,0.0],[0.0,0.0]],
        [[0.0,0.0],[1.0,0.0],[0.0,0.0],[0.0,0.0]],
        [[0.0,0.0],[0.0,0.0],[1.0,0.0],[0.0,0.0]],
        [[0.0,0.0],[0.0,0.0],[0.0,0.0],[1.0,0.0]]
    ]);
    // superoperator |vec(1/2)⟩⟨vec(1)|: rank one, singular
    let depol = json!([
        [[0.5,0.0],[0.0,0.0],[0.0,0.0],[0.5,0.0]],
        [[0.0,0.0],[0.0,0.0],[0.0,0.0],[0.0,0.0]],
        [[0.0,0.0],[0.0,0.0],[0.0,0.0],[0.0,0.0]],
        [[0.5,0.0],[0.0,0.0],[0.0,0.0],[0.5,0.0]]
    ]);
    let cfg = json!({
        "kind": "divisibility",
        "model": {"family": {"grid": [0.0, 1.0, 2.0], "maps": [id4, depol.clone(), depol]}}
    });
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &cfg, &[]);
    assert_eq!(exit_code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("condition number"));
}

#[test]
fn corrupted_solver_output_exits_4() {
    // fixed-Talbot roundoff grows like e^{2M/5}; at 128 nodes the sampled
    // kernel is garbage and the marched states violate the invariants loudly
    let cfg = json!({
        "kind": "semimarkov",
        "model": erlang_bitflip_model(),
        "initial_state": excited_state(),
        "grid": {"t_max": 4.0, "n_steps": 200},
        "solver": {"method": "volterra", "talbot_nodes": 128}
    });
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &cfg, &[]);
    assert_eq!(exit_code(&out), 4, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("density matrix"));
}
