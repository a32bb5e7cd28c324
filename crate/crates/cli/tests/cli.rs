use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qsb_core::gaussian::Gaussian;
use qsb_core::io::{read_points_file, write_points_file};
use qsb_core::spd::SpdMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

fn qsb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsb")).args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write_json(dir: &Path, name: &str, v: Value) -> String {
    let path = dir.join(name);
    fs::write(&path, v.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bohm_of_standard_normal_at_origin_is_beta_squared() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_json(
        d.path(),
        "c.json",
        json!({
            "mixture": { "dim": 1, "weights": [1.0], "components": [{ "mean": [0.0], "cov": [[1.0]] }] },
            "beta": 0.7, "grid": { "min": [-2.0], "max": [2.0], "points": [5] },
        }),
    );
    let out = d.path().join("o");
    stdout_json(&qsb(&["bohm", "--config", &cfg, "--out", s(&out), "--verify"]));
    let rows: Vec<Vec<f64>> = read_points_file(&out.join("bohm.csv")).unwrap();
    assert_eq!(rows[2][0], 0.0);
    assert!((rows[2][1] - 0.49).abs() < 1e-15);
}

#[test]
fn bohm_clamp_sets_the_floor() {
    let d = tempfile::tempdir().unwrap();
    let mixture = json!({ "dim": 1, "weights": [1.0], "components": [{ "mean": [0.0], "cov": [[0.2]] }] });
    write_json(d.path(), "m.json", mixture);
    let base =
        json!({ "mixture_file": "m.json", "beta": 1.0, "grid": { "min": [-4.0], "max": [4.0], "points": [81] } });
    let mut clamped = base.clone();
    clamped["clamp"] = json!(-5.0);
    let raw = stdout_json(&qsb(&[
        "bohm",
        "--config",
        &write_json(d.path(), "a.json", base),
        "--out",
        s(&d.path().join("a")),
    ]));
    let cut = stdout_json(&qsb(&[
        "bohm",
        "--config",
        &write_json(d.path(), "b.json", clamped),
        "--out",
        s(&d.path().join("b")),
    ]));
    assert!(raw["min_q"].as_f64().unwrap() < -5.0);
    assert_eq!(cut["min_q"], json!(-5.0));
    assert!(cut["clamped"].as_u64().unwrap() > 0);
}

#[test]
fn bb_ot_rows_equal_quantum_at_zero_beta() {
    let d = tempfile::tempdir().unwrap();
    let cfg = |kind: &str| {
        json!({
            "g0": { "mean": [0.0, 0.0], "cov": [[1.0, 0.2], [0.2, 2.0]] },
            "g1": { "mean": [1.0, 3.0], "cov": [[4.0, 0.0], [0.0, 0.5]] },
            "beta": 0.0, "kind": kind, "t_grid": 11,
        })
    };
    for kind in ["quantum", "bb_ot"] {
        let c = write_json(d.path(), &format!("{kind}.json"), cfg(kind));
        stdout_json(&qsb(&[
            "bridge",
            "--config",
            &c,
            "--out",
            s(&d.path().join(kind)),
            "--verify",
        ]));
    }
    let a = fs::read(d.path().join("quantum/marginals.csv")).unwrap();
    let b = fs::read(d.path().join("bb_ot/marginals.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn infeasible_beta_reports_beta_max() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_json(
        d.path(),
        "c.json",
        json!({ "g0": { "mean": [0.0], "cov": [[1.0]] }, "g1": { "mean": [0.0], "cov": [[4.0]] }, "beta": 2.5 }),
    );
    let o = qsb(&["bridge", "--config", &cfg, "--out", s(d.path())]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "infeasible");
    assert_eq!(err["beta_max"], json!(2.0));
}

#[test]
fn classical_bridge_cannot_verify_residuals() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_json(
        d.path(),
        "c.json",
        json!({ "g0": { "mean": [0.0], "cov": [[1.0]] }, "g1": { "mean": [0.0], "cov": [[4.0]] }, "beta": 1.0, "kind": "classical_sb" }),
    );
    let o = qsb(&["bridge", "--config", &cfg, "--out", s(d.path()), "--verify"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "unsupported_kind");
}

#[test]
fn metrics_oracles() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a.csv"), d.path().join("b.csv"));
    write_points_file(&a, &[vec![0.0]]).unwrap();
    write_points_file(&b, &[vec![3.0]]).unwrap();
    assert_eq!(stdout_json(&qsb(&["metrics", s(&a), s(&b)]))["emd"], json!(3.0));
    assert_eq!(stdout_json(&qsb(&["metrics", s(&a), s(&a)]))["emd"], json!(0.0));

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let g = |m: f64, v: f64| Gaussian::new(vec![m, 0.0], SpdMatrix::from_diag(&[v, v]).unwrap()).unwrap();
    write_points_file(&a, &g(0.0, 1.0).sample(2000, &mut rng)).unwrap();
    write_points_file(&b, &g(2.0, 4.0).sample(2000, &mut rng)).unwrap();
    let r = stdout_json(&qsb(&["metrics", s(&a), s(&b), "--gaussian-fit", "--subsample", "500"]));
    // W2² = |Δμ|² + 2(σ1 − σ0)² = 4 + 2
    assert!((r["w2_gaussian"].as_f64().unwrap() - 6f64.sqrt()).abs() < 0.1);
    assert_eq!(r["n"], json!(500));
}

#[test]
fn zero_iteration_mfg_emits_the_initialization() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_json(d.path(), "c.json", json!({ "env": "u_tunnel", "mfg": { "iters": 0 } }));
    let out = d.path().join("o");
    let o = qsb(&["mfg", "--config", &cfg, "--out", s(&out), "--verify"]);
    // no descent means no loss decrease, so verification must fail
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(
        fs::read(out.join("trajectory.csv")).unwrap(),
        fs::read(out.join("init_trajectory.csv")).unwrap()
    );
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let rows: Vec<Vec<f64>> = traj
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(&rows[0][2..4], &[0.0, 0.0]);
    assert_eq!(&rows.last().unwrap()[2..4], &[20.0, 4.0]);
}

#[test]
fn unknown_config_field_names_its_path() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_json(
        d.path(),
        "c.json",
        json!({ "env": "s_tunnel", "mfg": { "lamda_obs": 1.0 } }),
    );
    let o = qsb(&["mfg", "--config", &cfg, "--out", s(d.path())]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("lamda_obs"));
}

#[test]
fn single_component_wavepacket_recovers_endpoints() {
    let d = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g0 = Gaussian::new(
        vec![0.0, 0.0],
        SpdMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 0.5]]).unwrap(),
    )
    .unwrap();
    let g1 = Gaussian::new(
        vec![3.0, 1.0],
        SpdMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.5]]).unwrap(),
    )
    .unwrap();
    write_points_file(&d.path().join("a.csv"), &g0.sample(4000, &mut rng)).unwrap();
    write_points_file(&d.path().join("b.csv"), &g1.sample(4000, &mut rng)).unwrap();
    let cfg = write_json(
        d.path(),
        "c.json",
        json!({ "samples0": "a.csv", "samples1": "b.csv", "train": { "n_components": 1, "batch": 2000 }, "eval_points": 500 }),
    );
    let out = d.path().join("o");
    let r = stdout_json(&qsb(&["wavepacket", "--config", &cfg, "--out", s(&out), "--verify"]));
    assert!(r["emd_t1"].as_f64().unwrap() < r["emd_t0"].as_f64().unwrap());
    let bridge: Value = serde_json::from_str(&fs::read_to_string(out.join("bridge.json")).unwrap()).unwrap();
    let close = |v: &Value, want: &[f64], tol: f64| {
        v.as_array()
            .unwrap()
            .iter()
            .zip(want)
            .all(|(a, b)| (a.as_f64().unwrap() - b).abs() < tol)
    };
    assert!(close(&bridge["start"][0]["mean"], &[0.0, 0.0], 0.1));
    assert!(close(&bridge["end"][0]["mean"], &[3.0, 1.0], 0.1));
    assert!(close(&bridge["end"][0]["cov"][0], &[2.0, 0.0], 0.2));
    assert!(close(&bridge["end"][0]["cov"][1], &[0.0, 1.5], 0.2));
}
