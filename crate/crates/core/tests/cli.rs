use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn netgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netgame"))
        .args(args)
        .env("NETGAME_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run_ok(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        sub,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = netgame(&args);
    assert!(
        o.status.success(),
        "{sub} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

fn analyze(dir: &Path, body: &str) -> Value {
    let cfg = write_config(dir, "analyze.json", body);
    let o = netgame(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn analyze_reports_thresholds() {
    let dir = TempDir::new().unwrap();
    let r = analyze(
        dir.path(),
        r#"{"game": "shapley", "beta": 0.2, "network": {"kind": "ring", "n": 15}}"#,
    );
    for key in [
        "delta_s",
        "g_inf_norm",
        "g_one_norm",
        "g_two_norm",
        "threshold",
        "per_edge_norms",
    ] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert!((r["threshold"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(r["per_edge_norms"].as_object().unwrap().len(), 15);
    assert_eq!(r["metadata"]["seed"], 0);

    let r = analyze(
        dir.path(),
        r#"{"game": "sato", "eps_x": 0.1, "eps_y": -0.05, "network": {"kind": "full", "n": 5}}"#,
    );
    assert!((r["threshold"].as_f64().unwrap() - 0.1).abs() < 1e-12);

    let r = analyze(
        dir.path(),
        r#"{"game": "rps", "network": {"kind": "star", "n": 6}}"#,
    );
    assert_eq!(r["threshold"].as_f64().unwrap(), 0.0);
}

#[test]
fn analyze_reads_game_files() {
    let dir = TempDir::new().unwrap();
    let game = write_config(
        dir.path(),
        "game.json",
        r#"{
  "num_agents": 2,
  "action_counts": [2, 2],
  "edges": [
    {"k": 0, "l": 1, "a_kl": [[0, 1], [2, 0]], "a_lk": [[0, 0], [0, 0]]}
  ]
}"#,
    );
    let body = format!(
        r#"{{"game": "file", "path": {}}}"#,
        serde_json::to_string(&game).unwrap()
    );
    let r = analyze(dir.path(), &body);
    assert!((r["delta_s"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((r["threshold"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let cases = [
        r#"{"game": "shapley", "#,
        r#"{"game": "shapley", "beta": 1.5, "network": {"kind": "ring", "n": 5}}"#,
        r#"{"game": "shapley", "beta": 0.2, "network": {"kind": "ring", "n": 2}}"#,
        r#"{"game": "no_such_game"}"#,
    ];
    for body in cases {
        let cfg = write_config(dir.path(), "bad.json", body);
        let o = netgame(&["analyze", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{body}");
        assert!(!o.stderr.is_empty());
    }
    let o = netgame(&[
        "analyze",
        "--config",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));

    let cfg = write_config(dir.path(), "sim.json", r#"{"game": "chakraborty", "n": 3}"#);
    let o = netgame(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "rates are required");

    let cfg = write_config(
        dir.path(),
        "sim.json",
        r#"{"game": "chakraborty", "n": 3, "t": 1.0, "steps": 10, "window": 50}"#,
    );
    let o = netgame(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "window longer than the run");
}

#[test]
fn runtime_failures_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "qre.json",
        r#"{"game": "chakraborty", "n": 3, "t": 0.7, "solver": {"max_iter": 3}}"#,
    );
    let o = netgame(&[
        "qre",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let blocker = write_config(dir.path(), "file", "");
    let cfg = write_config(
        dir.path(),
        "a.json",
        r#"{"game": "chakraborty", "n": 3, "t": 1.0, "steps": 20, "window": 5}"#,
    );
    let out = blocker.join("sub");
    let o = netgame(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn qre_output_format() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "qre.json",
        r#"{"game": "chakraborty", "n": 3, "t": 2.7, "initial": [[0.9, 0.1], [0.2, 0.8], [0.5, 0.5]]}"#,
    );
    run_ok("qre", &cfg, dir.path(), &["--seed", "4"]);
    let v: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("qre.json")).unwrap()).unwrap();
    let strategies = v["strategies"].as_array().unwrap();
    assert_eq!(strategies.len(), 3);
    for s in strategies {
        let sum: f64 = s
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p.as_f64().unwrap())
            .sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
    assert!(v["residual"].as_f64().unwrap() <= 1e-10);
    assert!(v["iterations"].as_u64().unwrap() > 0);
    assert_eq!(v["metadata"]["seed"], 4);
    assert_eq!(v["metadata"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn simulate_writes_trajectories_and_detects_cycles() {
    let dir = TempDir::new().unwrap();
    let cold = write_config(
        dir.path(),
        "cold.json",
        r#"{"game": "chakraborty", "n": 3, "t": 0.7, "inits": 2}"#,
    );
    let hot = write_config(
        dir.path(),
        "hot.json",
        r#"{"game": "chakraborty", "n": 3, "t": 2.7, "inits": 2}"#,
    );
    let (cold_out, hot_out) = (dir.path().join("cold"), dir.path().join("hot"));
    run_ok("simulate", &cold, &cold_out, &[]);
    run_ok("simulate", &hot, &hot_out, &[]);

    let lines = data_lines(&cold_out.join("trajectory_000.csv"));
    assert_eq!(lines[0], "t,agent,action,prob");
    assert_eq!(lines.len(), 1 + 20_001 * 3 * 2);
    assert!(cold_out.join("trajectory.svg").exists());
    assert!(cold_out.join("projection.svg").exists());

    let verdicts = |p: &Path| -> Vec<String> {
        data_lines(&p.join("summary.csv"))
            .iter()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().to_owned())
            .collect()
    };
    assert_eq!(verdicts(&cold_out), vec!["false", "false"]);
    assert_eq!(verdicts(&hot_out), vec!["true", "true"]);
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let sim = write_config(
        dir.path(),
        "sim.json",
        r#"{"game": "shapley", "beta": 0.2, "network": {"kind": "ring", "n": 4}, "t": 1.0, "inits": 3, "steps": 400, "window": 50, "stride": 4}"#,
    );
    let bound = write_config(
        dir.path(),
        "bound.json",
        r#"{"game": "sato", "network": {"kind": "ring", "n": 3}, "networks": ["ring", "full"], "agent_counts": [3, 4], "inits": 2, "steps": 4000, "window": 500, "resolution": 0.02}"#,
    );
    let boxes = write_config(
        dir.path(),
        "box.json",
        r#"{"game": "shapley", "network": {"kind": "ring", "n": 4}, "temperatures": [0.5, 2.5], "inits": 2, "steps": 600, "window": 100}"#,
    );
    for (sub, cfg) in [
        ("simulate", &sim),
        ("boundary", &bound),
        ("boxplot", &boxes),
    ] {
        let a = dir.path().join(format!("{sub}_a"));
        let b = dir.path().join(format!("{sub}_b"));
        let c = dir.path().join(format!("{sub}_c"));
        run_ok(sub, cfg, &a, &["--seed", "9", "--threads", "1"]);
        run_ok(sub, cfg, &b, &["--seed", "9", "--threads", "3"]);
        run_ok(sub, cfg, &c, &["--seed", "10", "--threads", "1"]);
        assert_eq!(
            tree_bytes(&a),
            tree_bytes(&b),
            "{sub} differs across thread counts"
        );
        assert_ne!(tree_bytes(&a), tree_bytes(&c), "{sub} ignores the seed");
    }
}

#[test]
fn boxplot_output_format() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "box.json",
        r#"{"game": "shapley", "network": {"kind": "ring", "n": 5}, "temperatures": [3.0], "inits": 3, "agents": [0, 4], "steps": 4000, "window": 200}"#,
    );
    run_ok("boxplot", &cfg, dir.path(), &[]);
    let lines = data_lines(&dir.path().join("boxplot.csv"));
    assert_eq!(lines[0], "T,init,agent,sample_index,prob");
    assert_eq!(lines.len(), 1 + 3 * 2 * 200);
    // above the threshold of 2 every box collapses
    let summary = data_lines(&dir.path().join("boxplot_summary.csv"));
    for row in &summary[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert!(f[5].parse::<f64>().unwrap() < 1e-4, "{row}");
        assert_eq!(f[6], "true");
    }
    let head = fs::read_to_string(dir.path().join("boxplot.csv")).unwrap();
    assert!(head.starts_with("# netgame "));
    assert!(head.contains("# seed: 0\n"));
    assert!(head.contains("# config_sha256: "));
    assert!(head.contains("# parameters: {"));
}

#[test]
fn boundary_is_sound_against_the_certificate() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "b.json",
        r#"{"game": "shapley", "beta": 0.2, "network": {"kind": "ring", "n": 3}, "networks": ["ring", "star"], "agent_counts": [3, 4], "inits": 3, "steps": 6000, "window": 1000, "resolution": 0.05}"#,
    );
    run_ok("boundary", &cfg, dir.path(), &[]);
    let lines = data_lines(&dir.path().join("boundary.csv"));
    assert!(lines[0].starts_with(
        "network,n,status,empirical_boundary,highest_fail,theoretical_threshold,within_certificate"
    ));
    assert_eq!(lines.len(), 5);
    for row in &lines[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[2], "resolved", "{row}");
        assert_eq!(f[6], "true", "{row}");
    }
    let runs = data_lines(&dir.path().join("runs.csv"));
    assert_eq!(runs[0], "network,n,T,init,converged,relative_range");
    assert!(runs.len() > 5);
    let svg = fs::read_to_string(dir.path().join("boundary.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("config_sha256"));
}
