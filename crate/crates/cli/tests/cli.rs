use std::path::PathBuf;
use std::process::{Command, Output};

use eoe_cli::{config_from_artifact, ExperimentConfig};

fn eoe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eoe"))
        .args(args)
        .env_remove("EOE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("eoe-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn transform_rows_are_bounded_and_decreasing() {
    let o = eoe(&["transform", "--graph", "ring:6", "--lambda", "2", "--gamma", "0.5", "--s-grid", "0.1,1,5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("subject,family,n,m,lambda,gamma,s,value,provenance"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 3);
    let values: Vec<f64> = rows.iter().map(|r| r[7].parse().unwrap()).collect();
    assert!(values.iter().all(|&v| v > 0.0 && v < 1.0));
    assert!(values.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(rows[1][7], "8.7146470452977604e-2");
}

#[test]
fn transform_subjects_and_bipartite_side() {
    let o = eoe(&[
        "transform", "--graph", "bipartite:2:6", "--lambda", "1", "--gamma", "1", "--s-grid", "1", "--subjects", "N,M,T",
    ]);
    let rows = data_rows(&stdout(&o));
    let subjects: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(subjects, ["N", "M", "T"]);
    assert!(rows.iter().all(|r| r[1] == "bipartite" && r[2] == "6" && r[3] == "2"));
    // N carries no rates, M only λ
    assert_eq!((rows[0][4].as_str(), rows[0][5].as_str()), ("", ""));
    assert_eq!(rows[1][5], "");
}

#[test]
fn simulate_is_byte_identical_across_runs_and_workers() {
    let args = ["simulate", "--graph", "complete:3", "--lambda", "1", "--gamma", "1", "--reps", "7", "--seed", "42"];
    let a = eoe(&args);
    let b = eoe(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let rows = data_rows(&stdout(&a));
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[0].len(), 4);

    for engine in ["event", "renewal"] {
        let outs: Vec<Vec<u8>> = ["1", "8"]
            .iter()
            .map(|t| {
                let path = tmp(&format!("sim-{engine}-{t}.csv"));
                let o = eoe(&[
                    "simulate", "--graph", "bipartite:2:6", "--lambda", "1.5", "--gamma", "0.7", "--reps", "3000", "--seed", "5",
                    "--engine", engine, "--threads", t, "--out", path.to_str().unwrap(),
                ]);
                assert!(o.status.success());
                std::fs::read(path).unwrap()
            })
            .collect();
        assert_eq!(outs[0], outs[1], "{engine}");
    }
}

#[test]
fn headers_echo_a_reparseable_config() {
    let cfg_path = tmp("exp.toml");
    std::fs::write(
        &cfg_path,
        "graph = \"ring:8\"\nreps = 50\nrates.lambda = 2.0\nrates.gamma = 0.25\ns_grid = [0.5, 2.0]\n",
    )
    .unwrap();
    let o = eoe(&["simulate", "--config", cfg_path.to_str().unwrap(), "--seed", "11", "--lambda", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let echoed = config_from_artifact(&text).unwrap();
    assert_eq!(echoed.seed, Some(11));
    assert_eq!(echoed.lambda().unwrap(), 3.0);
    assert_eq!(echoed.gamma().unwrap(), 0.25);

    // re-running from the echo reproduces the artifact
    let again = tmp("echo.toml");
    std::fs::write(&again, echoed.to_toml()).unwrap();
    let o2 = eoe(&["simulate", "--config", again.to_str().unwrap()]);
    assert_eq!(stdout(&o2), text);

    let json = eoe(&["simulate", "--config", cfg_path.to_str().unwrap(), "--format", "json"]);
    let from_json = config_from_artifact(&stdout(&json)).unwrap();
    let mut expected = ExperimentConfig::from_toml_str(&std::fs::read_to_string(&cfg_path).unwrap()).unwrap();
    expected.overlay(ExperimentConfig {
        seed: Some(0),
        engine: Some(Default::default()),
        output: Some(eoe_cli::config::OutputConfig {
            path: None,
            format: Some(eoe_cli::Format::Json),
        }),
        ..Default::default()
    });
    assert_eq!(from_json, expected);
}

#[test]
fn simulate_json_summary() {
    let o = eoe(&[
        "simulate", "--graph", "complete:3", "--lambda", "1", "--gamma", "1", "--reps", "20000", "--seed", "1", "--s-grid",
        "1", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["header"]["seed"], 1);
    assert_eq!(v["summary"]["count"], 20000);
    let p = &v["summary"]["transform"][0];
    let (value, se) = (p["value"].as_f64().unwrap(), p["std_error"].as_f64().unwrap());
    assert!((value - 2.0 / 13.0).abs() < 4.0 * se, "{value} ± {se}");
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_eoe"));
        c.args(["simulate", "--graph", "ring:4", "--lambda", "1", "--gamma", "1", "--reps", "3"]).args(extra);
        match env {
            Some(v) => c.env("EOE_SEED", v),
            None => c.env_remove("EOE_SEED"),
        };
        String::from_utf8(c.output().unwrap().stdout).unwrap()
    };
    let from_env = run(Some("123"), &[]);
    assert!(from_env.contains("# seed: 123"));
    assert_eq!(from_env, run(None, &["--seed", "123"]));
    assert!(run(Some("123"), &["--seed", "4"]).contains("# seed: 4"));
    assert!(run(None, &[]).contains("# seed: 0"));
}

#[test]
fn usage_errors_exit_2_and_name_the_key() {
    let bad = tmp("bad.toml");
    std::fs::write(&bad, "graph = \"ring:4\"\nrates.lamda = 1.0\n").unwrap();
    let cases: [(Vec<&str>, &str); 5] = [
        (vec!["simulate", "--config", bad.to_str().unwrap()], "lamda"),
        (vec!["simulate", "--graph", "ring:4", "--lambda", "-1", "--gamma", "1"], "rates.lambda"),
        (vec!["simulate", "--graph", "ring:4", "--lambda", "1"], "rates.gamma"),
        (vec!["transform", "--graph", "wheel:5", "--lambda", "1", "--gamma", "1"], "graph"),
        (vec!["sweep", "--schedule", "complete-i", "--n-grid", "5", "--reps", "10"], "schedule.n_grid"),
    ];
    for (args, key) in cases {
        let o = eoe(&args);
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {err}");
        assert!(err.contains(key), "{args:?}: {err}");
    }
    assert_eq!(eoe(&["simulate", "--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn verify_quick_passes() {
    let o = eoe(&["verify", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["passed"], true);
    assert!(v["report"]["checks"].as_array().unwrap().len() >= 6);
}

#[test]
fn sweep_reports_every_grid_point() {
    let out = tmp("sweep.json");
    let o = eoe(&[
        "sweep", "--schedule", "star", "--n-grid", "50,100", "--reps", "500", "--seed", "2", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rows = v["report"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for key in ["b_n", "distance", "mean", "median", "mean_std_error"] {
        assert!(rows[0][key].is_number(), "{key}");
    }
    let cfg = config_from_artifact(&text).unwrap();
    assert_eq!(cfg.schedule.unwrap().n_grid, Some(vec![50, 100]));

    let o = eoe(&[
        "sweep", "--schedule", "complete-i-divergent", "--n-grid", "20,40,80", "--mode", "divergence", "--reps", "300",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["median_trend"], "growing");
}
