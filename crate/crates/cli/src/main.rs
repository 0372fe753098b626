use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use lander_core::config::RunConfig;
use lander_core::environment::trace::Trace;
use lander_core::environment::{LandingEnv, Terminal};
use lander_core::evaluation::{run_benchmark, write_run, BenchmarkReport, BenchmarkRun, Controller};
use lander_core::reward::reward_surface_grid;
use lander_core::scenario::{ScenarioKind, ScenarioSpec};
use lander_core::td3::{checkpoint, write_curve_csv, DirectorySink, Trainer};
use lander_core::Error;

#[derive(Parser)]
#[command(name = "lander", version, about = "Quadrotor moving-pad landing workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Flat `section.key = value` configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set reward.alpha=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `<output_dir>/<command>-seed<seed>-<unix time>`.
    #[arg(long)]
    run_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a TD3 agent over the configured scenario curriculum.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Environment steps per curriculum phase.
        #[arg(long)]
        total_steps: Option<u64>,
        /// Comma-separated scenarios trained in order, e.g. `SPL,LMPL`.
        #[arg(long)]
        curriculum: Option<String>,
    },
    /// Benchmark a trained agent and/or the EKF+PID baseline.
    Benchmark {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Agent checkpoint to evaluate.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Evaluate the EKF+PID baseline.
        #[arg(long)]
        baseline: bool,
        /// Scenario names (comma-separated, repeatable) or ALL.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        #[arg(long)]
        trials: Option<usize>,
        /// Force wind in every episode (agent only; SPL and LMPL).
        #[arg(long)]
        wind: bool,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Export the reward surface on an XY grid at a fixed relative height.
    RewardSurface {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        z: f64,
        #[arg(long, default_value_t = 3.0)]
        range: f64,
        #[arg(long, default_value_t = 101)]
        res: usize,
    },
    /// Validate an episode trace, print a summary and write a downsampled copy.
    Replay {
        trace: PathBuf,
        #[arg(long, default_value_t = 10)]
        downsample: usize,
        #[arg(long)]
        run_dir: Option<PathBuf>,
    },
    /// Print the fully resolved configuration.
    ConfigDump {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

/// Failure with its exit code: 1 for runtime failures, 2 for usage, config and input-format errors.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config { .. }
            | Error::InvalidParameter { .. }
            | Error::Schema(_)
            | Error::Checkpoint(_)
            | Error::Io { .. } => 2,
            _ => 1,
        };
        let mut message = e.to_string();
        let mut src = std::error::Error::source(&e);
        while let Some(s) = src {
            message += &format!("\n  caused by: {s}");
            src = s.source();
        }
        Self { code, message }
    }
}

type CmdResult = Result<(), Failure>;

fn resolve_config(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config file {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for o in &args.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--set expects KEY=VALUE, got `{o}`")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn unix_time() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn prepare_run_dir(explicit: Option<&PathBuf>, cfg: &RunConfig, command: &str) -> Result<PathBuf, Failure> {
    let dir = explicit.cloned().unwrap_or_else(|| {
        Path::new(&cfg.output_dir).join(format!("{command}-seed{}-{}", cfg.seed, unix_time()))
    });
    fs::create_dir_all(&dir).map_err(|e| Failure::from(Error::Io { path: dir.clone(), source: e }))?;
    Ok(dir)
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes).map_err(|e| Failure::from(Error::Io { path: path.to_path_buf(), source: e }))
}

fn parse_scenarios(items: &[String]) -> Result<Option<Vec<ScenarioKind>>, Failure> {
    let mut out = Vec::new();
    for item in items {
        for name in item.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if name.eq_ignore_ascii_case("all") {
                out.extend(ScenarioKind::ALL);
            } else {
                out.push(name.parse::<ScenarioKind>().map_err(|e| Failure::usage(e.to_string()))?);
            }
        }
    }
    out.dedup();
    Ok((!out.is_empty()).then_some(out))
}

fn cmd_train(cfg_args: &ConfigArgs, total_steps: Option<u64>, curriculum: Option<&str>) -> CmdResult {
    let mut cfg = resolve_config(cfg_args)?;
    if let Some(n) = total_steps {
        cfg.td3.total_steps = n;
    }
    if let Some(c) = curriculum {
        cfg.set("train.curriculum", c)
            .map_err(|e| Failure::usage(format!("--curriculum: {e}")))?;
    }
    cfg.validate()?;
    let dir = prepare_run_dir(cfg_args.run_dir.as_ref(), &cfg, "train")?;
    write_file(&dir.join("config.txt"), cfg.dump().as_bytes())?;

    let make_env = |kind: ScenarioKind| {
        LandingEnv::new(
            cfg.env,
            cfg.drone_params(),
            cfg.reward,
            cfg.train_wind(),
            ScenarioSpec { kind, ..cfg.scenario },
        )
    };
    let mut trainer = Trainer::new(make_env(cfg.train.curriculum[0])?, cfg.train_config())?;
    let mut sink = DirectorySink::new(dir.join("checkpoints"));
    for (phase, &kind) in cfg.train.curriculum.iter().enumerate() {
        trainer.set_env(make_env(kind)?);
        eprintln!("phase {phase}: {kind} for {} steps", cfg.td3.total_steps);
        let result = trainer.run(cfg.td3.total_steps, &mut sink);
        if let Err(Error::EpisodeAborted { trace, .. }) = &result {
            let mut buf = Vec::new();
            if trace.write_csv(&mut buf).is_ok() {
                write_file(&dir.join("aborted_episode.csv"), &buf)?;
            }
        }
        result?;
        let mut buf = Vec::new();
        write_curve_csv(trainer.curve(), &mut buf).map_err(|e| Failure::from(Error::Io { path: dir.clone(), source: e }))?;
        write_file(&dir.join("curve.csv"), &buf)?;
        checkpoint::save_file(&trainer.learner, &dir.join(format!("phase{phase}_{kind}.ckpt")))?;
    }
    checkpoint::save_file(&trainer.learner, &dir.join("final.ckpt"))?;
    if let Some(last) = trainer.curve().last() {
        println!(
            "step {}  mean_reward {:.4}  mean_ep_len {:.1}  success_rate {:.3}",
            last.step, last.mean_reward, last.mean_ep_len, last.success_rate
        );
    }
    println!("run directory: {}", dir.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_benchmark(
    cfg_args: &ConfigArgs,
    checkpoint_path: Option<&PathBuf>,
    baseline: bool,
    scenarios: &[String],
    trials: Option<usize>,
    wind: bool,
    workers: Option<usize>,
) -> CmdResult {
    let mut cfg = resolve_config(cfg_args)?;
    if checkpoint_path.is_none() && !baseline {
        return Err(Failure::usage("choose a controller: --checkpoint PATH and/or --baseline"));
    }
    if let Some(list) = parse_scenarios(scenarios)? {
        cfg.evaluation.scenarios = list;
    }
    if let Some(t) = trials {
        cfg.evaluation.trials = t;
    }
    if let Some(w) = workers {
        cfg.evaluation.workers = w;
    }
    cfg.evaluation.wind |= wind;
    if cfg.evaluation.wind {
        if baseline {
            return Err(Failure::usage("wind benchmarks run for the agent only; drop --baseline"));
        }
        let allowed = [ScenarioKind::Spl, ScenarioKind::Lmpl];
        if scenarios.iter().any(|s| s.eq_ignore_ascii_case("all")) || scenarios.is_empty() {
            cfg.evaluation.scenarios.retain(|k| allowed.contains(k));
        }
        if let Some(k) = cfg.evaluation.scenarios.iter().find(|k| !allowed.contains(k)) {
            return Err(Failure::usage(format!("wind benchmarks cover SPL and LMPL only, not {k}")));
        }
    }
    cfg.validate()?;

    let learner = match checkpoint_path {
        Some(p) => Some(checkpoint::load_file(p)?),
        None => None,
    };
    let dir = prepare_run_dir(cfg_args.run_dir.as_ref(), &cfg, "benchmark")?;
    write_file(&dir.join("config.txt"), cfg.dump().as_bytes())?;

    let setup = cfg.benchmark_setup();
    let mut trials = Vec::new();
    let mut traces = Vec::new();
    if let Some(l) = &learner {
        let run = run_benchmark(&setup, Controller::Agent(&l.actor))?;
        trials.extend(run.trials);
        traces.extend(run.traces);
    }
    if baseline {
        let run = run_benchmark(&setup, Controller::Baseline(cfg.baseline_config()))?;
        trials.extend(run.trials);
        traces.extend(run.traces);
    }
    let report = BenchmarkReport::from_trials(&setup, &trials);
    let run = BenchmarkRun { report, trials, traces };
    write_run(&dir, &run)?;
    print!("{}", run.report.to_text());
    println!("\nrun directory: {}", dir.display());
    Ok(())
}

fn cmd_reward_surface(cfg_args: &ConfigArgs, z: f64, range: f64, res: usize) -> CmdResult {
    if res < 2 {
        return Err(Failure::usage(format!("--res must be >= 2, got {res}")));
    }
    if !(range.is_finite() && range > 0.0) || !z.is_finite() {
        return Err(Failure::usage("--range must be > 0 and --z finite"));
    }
    let cfg = resolve_config(cfg_args)?;
    cfg.reward.validate().map_err(Failure::from)?;
    let grid = reward_surface_grid(z, range, res, &cfg.reward)?;
    let dir = prepare_run_dir(cfg_args.run_dir.as_ref(), &cfg, "reward-surface")?;
    write_file(&dir.join("config.txt"), cfg.dump().as_bytes())?;
    let mut buf = Vec::new();
    grid.write_csv(&mut buf).map_err(|e| Failure::from(Error::Io { path: dir.clone(), source: e }))?;
    write_file(&dir.join("reward_surface.csv"), &buf)?;
    println!("{} cells written to {}", grid.cells.len(), dir.join("reward_surface.csv").display());
    Ok(())
}

fn cmd_replay(path: &Path, factor: usize, run_dir: Option<&PathBuf>) -> CmdResult {
    if factor == 0 {
        return Err(Failure::usage("--downsample must be >= 1"));
    }
    let f = fs::File::open(path).map_err(|e| Failure::usage(format!("cannot read trace {}: {e}", path.display())))?;
    let trace = Trace::read_csv(BufReader::new(f))?;
    let first = trace.rows.first().expect("read_csv rejects empty traces");
    let last = trace.rows.last().expect("read_csv rejects empty traces");

    let dist = |r: &lander_core::environment::trace::TraceRow| {
        let (d, p) = (r.drone_position(), r.pad_position());
        ((d[0] - p[0]).powi(2) + (d[1] - p[1]).powi(2) + (d[2] - p[2]).powi(2)).sqrt()
    };
    let min_distance = trace.rows.iter().map(dist).fold(f64::INFINITY, f64::min);
    println!("rows: {}", trace.rows.len());
    println!("time: {} .. {} s", first.time(), last.time());
    println!("terminal: {}", last.terminal);
    if last.terminal == Terminal::Touchdown {
        let (d, p) = (last.drone_position(), last.pad_position());
        println!("touchdown lateral error: {:.4} m", ((d[0] - p[0]).powi(2) + (d[1] - p[1]).powi(2)).sqrt());
    }
    println!("min drone-pad distance: {min_distance:.4} m");
    for (axis, i) in [("x", 0), ("y", 1), ("z", 2)] {
        let vals = trace.rows.iter().map(|r| r.drone_position()[i]);
        let lo = vals.clone().fold(f64::INFINITY, f64::min);
        let hi = vals.fold(f64::NEG_INFINITY, f64::max);
        println!("drone {axis} range: [{lo:.4}, {hi:.4}] m");
    }

    let dir = match run_dir {
        Some(d) => d.clone(),
        None => Path::new(&RunConfig::default().output_dir).join(format!("replay-{}", unix_time())),
    };
    fs::create_dir_all(&dir).map_err(|e| Failure::from(Error::Io { path: dir.clone(), source: e }))?;
    let mut buf = Vec::new();
    trace
        .downsample(factor)
        .write_csv(&mut buf)
        .map_err(|e| Failure::from(Error::Io { path: dir.clone(), source: e }))?;
    let out = dir.join("trace_downsampled.csv");
    write_file(&out, &buf)?;
    println!("downsampled x{factor}: {}", out.display());
    Ok(())
}

fn cmd_config_dump(cfg_args: &ConfigArgs) -> CmdResult {
    let cfg = resolve_config(cfg_args)?;
    cfg.validate()?;
    print!("{}", cfg.dump());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train {
            cfg,
            total_steps,
            curriculum,
        } => cmd_train(cfg, *total_steps, curriculum.as_deref()),
        Command::Benchmark {
            cfg,
            checkpoint,
            baseline,
            scenarios,
            trials,
            wind,
            workers,
        } => cmd_benchmark(cfg, checkpoint.as_ref(), *baseline, scenarios, *trials, *wind, *workers),
        Command::RewardSurface { cfg, z, range, res } => cmd_reward_surface(cfg, *z, *range, *res),
        Command::Replay {
            trace,
            downsample,
            run_dir,
        } => cmd_replay(trace, *downsample, run_dir.as_ref()),
        Command::ConfigDump { cfg } => cmd_config_dump(cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
