use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn otto(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otto"))
        .args(args)
        .env_remove("OTTO_SEED")
        .output()
        .expect("spawn otto")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid json")
}

#[test]
fn cycle_reports_reference_engine() {
    let o = otto(&["cycle", "--tau", "100", "--g", "0.2", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert!((v["eta"].as_f64().unwrap() - 0.6498).abs() < 1e-3);
    assert_eq!(v["mode"], "engine");
    assert!(v["first_law_residual [h*kHz]"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn negative_field_ratio_is_accepted() {
    let o = otto(&["cycle", "--g", "-0.3", "--steps", "2000", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().next().unwrap().starts_with("nu_cold [kHz]"));
}

#[test]
fn exit_codes() {
    assert_eq!(otto(&["cycle", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(otto(&["cycle", "--p-hot", "1.5"]).status.code(), Some(1));
    assert_eq!(otto(&["cycle", "--p-hot", "0.5"]).status.code(), Some(1));
    assert_eq!(
        otto(&["cycle", "--steps", "2000", "--strict"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        otto(&["verify", "--points", "2", "--steps", "2000"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        otto(&["cycle", "--out", "/nonexistent/dir/cycle.csv"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        otto(&["--config", "/nonexistent/otto.toml", "cycle"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(otto(&["--help"]).status.code(), Some(0));
}

#[test]
fn strict_mode_accepts_fine_resolution() {
    let o = otto(&["cycle", "--steps", "40000", "--strict"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_passes_at_default_tolerances() {
    let o = otto(&["verify", "--points", "2"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("ok"));
}

#[test]
fn sweep_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = otto(&[
            "sweep",
            "--axis",
            "tau",
            "--grid",
            "80:200:4",
            "--g-series",
            "0,0.2",
            "--outputs",
            "xi,eta,delta_eta_vs_g0",
            "--steps",
            "2000",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(path).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.starts_with("index,axis,axis_value"));
}

#[test]
fn sweep_rows_with_bad_points_keep_going() {
    let o = otto(&[
        "sweep",
        "--axis",
        "p_plus_hot",
        "--grid",
        "0.5,0.9",
        "--steps",
        "2000",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let rows = json(&o);
    assert!(rows[0]["error"]
        .as_str()
        .unwrap()
        .starts_with("degenerate_temperature"));
    assert!(rows[1]["error"].is_null());
}

#[test]
fn config_file_with_command_line_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[engine]\ntau = 140.0\nsteps = 2000\n\n[sweep.gain]\naxis = \"g\"\ngrid = [0.0, 0.3]\noutputs = [\"eta\"]\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = json(&otto(&["--config", cfg, "sweep", "--format", "json"]));
    assert_eq!(from_file[0]["tau_us"], 140.0);
    let overridden = json(&otto(&[
        "--config", cfg, "sweep", "--name", "gain", "--tau", "100", "--format", "json",
    ]));
    assert_eq!(overridden[1]["tau_us"], 100.0);
    assert_eq!(overridden[1]["n_steps"], 2000);

    let missing = otto(&["--config", cfg, "sweep", "--name", "absent"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn config_documented_in_repo_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sweeps.toml");
    let o = otto(&[
        "--config",
        path.to_str().unwrap(),
        "sweep",
        "--name",
        "gain_tau",
        "--steps",
        "2000",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o).as_array().unwrap().len(), 6);
}

#[test]
fn seed_comes_from_environment_unless_given() {
    let args = [
        "disorder",
        "--sigma",
        "0.05",
        "--samples",
        "64",
        "--disorder-steps",
        "500",
        "--format",
        "json",
    ];
    let with_env = |seed: &str, extra: &[&str]| {
        let o = Command::new(env!("CARGO_BIN_EXE_otto"))
            .args(args)
            .args(extra)
            .env("OTTO_SEED", seed)
            .output()
            .unwrap();
        assert!(o.status.success());
        json(&o)
    };
    let env5 = with_env("5", &[]);
    let flag5 = json(&otto(&[&args[..], &["--seed", "5"]].concat()));
    let env6 = with_env("6", &[]);
    let env6_flag5 = with_env("6", &["--seed", "5"]);
    assert_eq!(env5["seed"], 5);
    assert_eq!(env5["quenched_eta"], flag5["quenched_eta"]);
    assert_eq!(env6_flag5["quenched_eta"], flag5["quenched_eta"]);
    assert_ne!(env6["quenched_eta"], env5["quenched_eta"]);
}

#[test]
fn coherence_series_table() {
    let o = otto(&["coherence", "--steps", "2000", "--series", "10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("t [us],c_exp,c_comp"));
    assert_eq!(text.lines().count(), 12);
    assert_eq!(
        otto(&["coherence", "--steps", "2000", "--series", "7"])
            .status
            .code(),
        Some(1)
    );
}
