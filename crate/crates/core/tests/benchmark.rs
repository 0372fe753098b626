use lander_core::baseline::BaselineConfig;
use lander_core::evaluation::{
    read_trials_csv, run_benchmark, velocity_correlation, write_run, BenchmarkReport, BenchmarkSetup, Controller,
    ControllerKind,
};
use lander_core::rng::stream;
use lander_core::scenario::{platform_at, ScenarioKind, ScenarioSpec};
use lander_core::td3::{Activation, Mlp};

fn setup(trials: usize, workers: usize) -> BenchmarkSetup {
    BenchmarkSetup {
        workers,
        ..BenchmarkSetup::new(ScenarioKind::ALL.to_vec(), trials, 5)
    }
}

#[test]
fn perfect_tracker_correlates_fully() {
    let spec = ScenarioSpec::new(ScenarioKind::Ctl, 3);
    let pad: Vec<f64> = (0..600).map(|k| platform_at(&spec, k as f64 / 30.0).velocity.norm()).collect();
    let r = velocity_correlation(&pad, &pad).unwrap().unwrap();
    assert!((r - 1.0).abs() < 1e-12);
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = BaselineConfig::default();
    let one = run_benchmark(&setup(2, 1), Controller::Baseline(cfg)).unwrap();
    let three = run_benchmark(&setup(2, 3), Controller::Baseline(cfg)).unwrap();
    assert_eq!(one.trials, three.trials);
    assert_eq!(one.report.to_text(), three.report.to_text());
}

#[test]
fn controllers_see_paired_episodes() {
    let mut rng = stream(41, "agent");
    let actor: Mlp<f32> = Mlp::new(&[15, 16, 3], Activation::Relu, Activation::Tanh, &mut rng).unwrap();
    let s = setup(3, 1);
    let agent = run_benchmark(&s, Controller::Agent(&actor)).unwrap();
    let baseline = run_benchmark(&s, Controller::Baseline(BaselineConfig::default())).unwrap();
    for (a, b) in agent.trials.iter().zip(&baseline.trials) {
        assert_eq!((a.scenario, a.trial, a.seed), (b.scenario, b.trial, b.seed));
        assert_eq!(a.controller, ControllerKind::Agent);
        assert_eq!(b.controller, ControllerKind::EkfPid);
    }
    for (ta, tb) in agent.traces.iter().zip(&baseline.traces) {
        assert_eq!(ta.rows[0].pad_position(), tb.rows[0].pad_position());
    }
}

#[test]
fn report_recomputes_from_trials_csv() {
    let s = setup(2, 1);
    let run = run_benchmark(&s, Controller::Baseline(BaselineConfig::default())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_run(dir.path(), &run).unwrap();
    let file = std::fs::File::open(dir.path().join("trials.csv")).unwrap();
    let trials = read_trials_csv(std::io::BufReader::new(file)).unwrap();
    assert_eq!(trials, run.trials);
    let again = BenchmarkReport::from_trials(&s, &trials);
    assert_eq!(again.to_text(), std::fs::read_to_string(dir.path().join("report.txt")).unwrap());
    let traces = std::fs::read_dir(dir.path().join("traces")).unwrap().count();
    assert_eq!(traces, run.trials.len());
}

#[test]
fn wind_runs_are_windy_and_reproducible() {
    let mut rng = stream(42, "agent");
    let actor: Mlp<f32> = Mlp::new(&[15, 16, 3], Activation::Relu, Activation::Tanh, &mut rng).unwrap();
    let s = BenchmarkSetup {
        wind_enabled: true,
        ..BenchmarkSetup::new(vec![ScenarioKind::Spl, ScenarioKind::Lmpl], 2, 9)
    };
    let a = run_benchmark(&s, Controller::Agent(&actor)).unwrap();
    let b = run_benchmark(&s, Controller::Agent(&actor)).unwrap();
    assert_eq!(a.trials, b.trials);
    assert!(a.trials.iter().all(|t| t.wind_enabled));
    let gusts = a.traces.iter().flat_map(|t| &t.rows).filter(|r| r.wind_force() != [0.0; 3]).count();
    assert!(gusts > 0);
}
