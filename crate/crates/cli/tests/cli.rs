use std::path::Path;
use std::process::{Command, Output};

use ritzkit_cli::commands::{gradcheck, interp, mc_check, pwl, solve};
use ritzkit_cli::config::RunConfig;

fn ritzkit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ritzkit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("RITZKIT_SEED")
        .output()
        .expect("binary runs")
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn resolved(out: &Path) -> RunConfig {
    RunConfig::load(&out.join("config.resolved")).unwrap()
}

#[test]
fn csv_headers_are_pinned() {
    assert_eq!(solve::SUMMARY_HEADER.join(","), "case,rung,width,lambda,delta,steps,loss,l2_rel,h1_rel,gap,seconds");
    assert_eq!(
        gradcheck::HEADER.join(","),
        "net,seed,dim,depth,width,p,params,checked,excluded,max_rel_error,worst_param"
    );
    assert_eq!(mc_check::HEADER.join(","), "case,n,seeds,mean,std_error,mean_std_error,exact,z,se_ratio");
    assert_eq!(pwl::HEADER.join(","), "fixture,dim,points,depth,declared_depth,max_abs_dev,max_rel_dev");
    assert_eq!(
        interp::HEADER.join(","),
        "dim,p,delta,resolution,lp,w1p,ratio,exterior_points,support_violations"
    );
}

#[test]
fn solve_writes_one_row_per_rung() {
    let dir = tempfile::tempdir().unwrap();
    let out = ritzkit(&["solve", "--case", "poisson_1d_sine", "--rungs", "3", "--seed", "7", "--steps", "200"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(header(&dir.path().join("summary.csv")), solve::SUMMARY_HEADER.join(","));
    // wall time is left out unless asked for
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",NA")));
    let jsonl = std::fs::read_to_string(dir.path().join("rungs.jsonl")).unwrap();
    for line in jsonl.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["seconds"].is_null());
        assert_eq!(v["schema"], 1);
    }
    assert_eq!(jsonl.lines().count(), 3);
    assert!(dir.path().join("network.json").exists());
    assert_eq!(resolved(dir.path()).seed, Some(7));
}

#[test]
fn unknown_case_lists_the_registry() {
    let dir = tempfile::tempdir().unwrap();
    let out = ritzkit(&["solve", "--case", "nonexistent"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["poisson_1d_sine", "poisson_1d_pwl", "poisson_cube_d", "poisson_ball", "plaplace_1d"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ritzkit(&["solve", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(ritzkit(&["solve", "--widths", "8,16", "--rungs", "3"], dir.path()).status.code(), Some(1));
    assert_eq!(ritzkit(&["mc-check", "--case", "nope"], dir.path()).status.code(), Some(1));
    let missing = dir.path().join("missing.toml");
    assert_eq!(ritzkit(&["pwl", "--config", missing.to_str().unwrap()], dir.path()).status.code(), Some(1));
}

#[test]
fn gradcheck_negative_control_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let ok = ritzkit(&["gradcheck", "--nets", "3"], dir.path());
    assert!(ok.status.success());
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("worst: net") && stdout.contains("seed"), "{stdout}");
    let bad = ritzkit(&["gradcheck", "--nets", "3", "--inject-bug"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn divergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("blowup.toml");
    std::fs::write(
        &config,
        r#"
[solve]
case = "poisson_1d_sine"

[solve.ladder]
window = 10

[solve.ladder.optimizer]
step_size = 1e200

[[solve.ladder.rungs]]
width = 4
lambda = 10.0
delta = 1e-3
max_steps = 50
n = 64
m = 2
"#,
    )
    .unwrap();
    let out = ritzkit(&["solve", "--config", config.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_config_keys_are_rejected() {
    assert!(RunConfig::parse("[solve]\ncase = \"poisson_ball\"\n").is_ok());
    assert!(RunConfig::parse("[solve]\nwidth = 8\n").is_err());
    assert!(RunConfig::parse("sede = 3\n").is_err());
    assert!(RunConfig::parse("[gradcheck]\nnets = 2\nfoo = 1\n").is_err());
    assert!(RunConfig::parse("schema_version = 99\n").is_err());
}

#[test]
fn resolved_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = ritzkit(&["interp", "--deltas", "0.4,0.2", "--p", "1,4", "--seed", "3"], dir.path());
    assert!(out.status.success());
    let config = resolved(dir.path());
    assert_eq!(config.interp.deltas, vec![0.4, 0.2]);
    assert_eq!(config.interp.p, vec![1.0, 4.0]);
    assert_eq!(RunConfig::parse(&config.to_toml()).unwrap(), config);

    // replaying the echo (which names the same output directory) rewrites identical files
    let before: Vec<Vec<u8>> = ["interp.csv", "config.resolved"].iter().map(|f| std::fs::read(dir.path().join(f)).unwrap()).collect();
    let echo = tempfile::NamedTempFile::new().unwrap();
    std::fs::copy(dir.path().join("config.resolved"), echo.path()).unwrap();
    let replay = Command::new(env!("CARGO_BIN_EXE_ritzkit"))
        .args(["interp", "--config"])
        .arg(echo.path())
        .env_remove("RITZKIT_SEED")
        .output()
        .unwrap();
    assert!(replay.status.success());
    let after: Vec<Vec<u8>> = ["interp.csv", "config.resolved"].iter().map(|f| std::fs::read(dir.path().join(f)).unwrap()).collect();
    assert!(before == after);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("seeded.toml");
    std::fs::write(&config, "seed = 11\n").unwrap();
    let run = |extra: &[&str], env: Option<&str>, sub: &str| {
        let out = dir.path().join(sub);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ritzkit"));
        cmd.args(["pwl", "--hat", "--points", "10", "--out"]).arg(&out).args(extra);
        match env {
            Some(v) => cmd.env("RITZKIT_SEED", v),
            None => cmd.env_remove("RITZKIT_SEED"),
        };
        assert!(cmd.output().unwrap().status.success());
        resolved(&out).seed
    };
    let cfg = config.to_str().unwrap();
    assert_eq!(run(&[], None, "none"), Some(0));
    assert_eq!(run(&[], Some("5"), "env"), Some(5));
    assert_eq!(run(&["--config", cfg], Some("5"), "file"), Some(11));
    assert_eq!(run(&["--config", cfg, "--seed", "2"], Some("5"), "flag"), Some(2));
}

#[test]
fn pwl_and_mc_check_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = ritzkit(&["pwl", "--hat"], dir.path());
    assert!(out.status.success());
    let table = std::fs::read_to_string(dir.path().join("pwl.csv")).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "hat");
    assert!(row[5].parse::<f64>().unwrap() <= 1e-12);

    let mc = dir.path().join("mc");
    let out = ritzkit(&["mc-check", "--case", "hat_energy", "--n", "1024,4096,16384"], &mc);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(mc.join("mc_check.csv")).unwrap();
    let se: Vec<f64> = table.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(se.len(), 3);
    assert!(se.windows(2).all(|w| w[1] < w[0]), "{se:?}");
}

#[test]
fn interp_sweep_has_monotone_w1p() {
    let dir = tempfile::tempdir().unwrap();
    let out = ritzkit(&["interp", "--bump", "--deltas", "0.4,0.2,0.1,0.05", "--p", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("interp.csv")).unwrap();
    let w1p: Vec<f64> = table.lines().skip(1).map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert_eq!(w1p.len(), 4);
    assert!(w1p.windows(2).all(|w| w[1] < w[0]), "{w1p:?}");
}
