use std::path::Path;
use std::process::{Command, Output};

fn lander(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lander")).args(args).output().expect("spawn lander")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_and_config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&lander(&["no-such-command"])), 2);
    assert_eq!(code(&lander(&["config-dump", "--set", "reward.nope=1"])), 2);
    assert_eq!(code(&lander(&["config-dump", "--set", "td3.batch_size=zero"])), 2);
    assert_eq!(code(&lander(&["config-dump", "--set", "wind.p_step=1.5"])), 2);
    assert_eq!(code(&lander(&["config-dump", "--config", "/nonexistent/run.cfg"])), 2);
    let rs = tmp.path().join("rs");
    assert_eq!(code(&lander(&["reward-surface", "--res", "1", "--run-dir", path(&rs)])), 2);
    assert_eq!(code(&lander(&["benchmark", "--scenario", "SPL"])), 2);
    assert_eq!(code(&lander(&["benchmark", "--baseline", "--scenario", "XYZ"])), 2);
    assert_eq!(code(&lander(&["benchmark", "--baseline", "--wind"])), 2);

    let bogus = tmp.path().join("bogus.ckpt");
    std::fs::write(&bogus, b"not a checkpoint").unwrap();
    let out = lander(&["benchmark", "--checkpoint", path(&bogus), "--scenario", "SPL", "--trials", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let bad_trace = tmp.path().join("trace.csv");
    std::fs::write(&bad_trace, "time,oops\n1,2\n").unwrap();
    assert_eq!(code(&lander(&["replay", path(&bad_trace)])), 2);
}

#[test]
fn config_dump_round_trips_through_a_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lander(&["config-dump", "--seed", "42", "--set", "reward.alpha=4.5"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 42"));
    assert!(text.contains("reward.alpha = 4.5"));
    let file = tmp.path().join("run.cfg");
    std::fs::write(&file, &text).unwrap();
    let again = lander(&["config-dump", "--config", path(&file)]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn reward_surface_exports_full_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("surface");
    let out = lander(&["reward-surface", "--z", "0.05", "--range", "2.5", "--res", "101", "--run-dir", path(&dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("reward_surface.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,z,total,case,u_att,u_rep,beta,delta"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 101 * 101);
    for row in &rows {
        let total: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(total > -1.0 && total < 1.0);
    }
    assert!(dir.join("config.txt").exists());
}

#[test]
fn baseline_benchmark_then_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let bench = tmp.path().join("bench");
    let out = lander(&[
        "benchmark",
        "--baseline",
        "--scenario",
        "SPL,LMPL",
        "--trials",
        "2",
        "--seed",
        "3",
        "--workers",
        "2",
        "--run-dir",
        path(&bench),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("ekf-pid"));
    for f in ["report.txt", "report.csv", "report.json", "trials.csv", "config.txt"] {
        assert!(bench.join(f).exists(), "{f} missing");
    }
    let trace = bench.join("traces").join("ekf-pid_SPL_000.csv");
    assert!(trace.exists());

    let replay_dir = tmp.path().join("replay");
    let out = lander(&["replay", path(&trace), "--downsample", "5", "--run-dir", path(&replay_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("terminal: Touchdown"), "{summary}");
    let full = std::fs::read_to_string(&trace).unwrap().lines().count() - 1;
    let small = std::fs::read_to_string(replay_dir.join("trace_downsampled.csv")).unwrap().lines().count() - 1;
    assert!(small < full && small >= full / 5);
}

#[test]
fn short_training_run_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("train");
    let out = lander(&[
        "train",
        "--seed",
        "2",
        "--total-steps",
        "400",
        "--curriculum",
        "SPL,LMPL",
        "--set",
        "td3.hidden_layers=16,16",
        "--set",
        "train.eval_interval=200",
        "--set",
        "train.eval_episodes=2",
        "--set",
        "train.checkpoint_interval=400",
        "--run-dir",
        path(&dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let curve = std::fs::read_to_string(dir.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("step,mean_reward,mean_ep_len,success_rate"));
    assert_eq!(curve.lines().count(), 5);
    for f in ["final.ckpt", "phase0_SPL.ckpt", "phase1_LMPL.ckpt", "config.txt"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    assert!(dir.join("checkpoints").join("step_000000800.ckpt").exists());

    let bench = tmp.path().join("bench");
    let out = lander(&[
        "benchmark",
        "--checkpoint",
        path(&dir.join("final.ckpt")),
        "--scenario",
        "ALL",
        "--wind",
        "--trials",
        "1",
        "--run-dir",
        path(&bench),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let trials = std::fs::read_to_string(bench.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 3, "wind benchmark covers SPL and LMPL only");
}
