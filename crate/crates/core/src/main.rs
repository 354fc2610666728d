use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use goalreach::env::{FormulationKind, FormulationSpec};
use goalreach::eval::{
    cross_evaluate, eval_rows, evaluate_policy, load_actor, write_eval_csv, DEFAULT_EPISODES,
    DEFAULT_HORIZON,
};
use goalreach::probe::{
    mean_hits_by_timeout, run_probe, sweep_timeouts, sweep_with_seeds, verdict_for_rate,
    write_probe_csv, DEFAULT_VERDICT_THRESHOLD, PROBE_STEPS, TIMEOUT_GRID,
};
use goalreach::train::train_to_dir;
use goalreach::{EnvName, RunConfig};

#[derive(Parser)]
#[command(
    name = "goalreach",
    version,
    about = "Goal-reaching task formulations with SAC"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train SAC and write config.txt, learning_curve.csv and checkpoints.
    Train(TrainArgs),
    /// Count goal hits of the initial random policy.
    Probe(ProbeArgs),
    /// Probe a grid of timeouts.
    Sweep(SweepArgs),
    /// Steps-to-goal / steps-on-goal of a checkpoint over a fixed horizon.
    Eval(EvalArgs),
    /// Returns of a checkpoint under each formulation.
    Xeval(XevalArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// key=value config file; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<EnvName>,
    #[arg(long)]
    formulation: Option<FormulationKind>,
    #[arg(long)]
    timeout: Option<usize>,
    #[arg(long)]
    reset_penalty: Option<f64>,
    #[arg(long)]
    episode_length: Option<usize>,
    /// Total environment steps.
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` settings (any config key), applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Replace the outputs of an earlier run.
    #[arg(long)]
    force: bool,
    /// Launch this many runs (seeds seed..seed+N) as separate processes,
    /// writing to <out>/seed_<k>.
    #[arg(long)]
    num_seeds: Option<u64>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    env: EnvName,
    #[arg(long)]
    timeout: usize,
    #[arg(long, default_value_t = PROBE_STEPS)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_VERDICT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value = "runs/probe")]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    env: EnvName,
    #[arg(long, value_delimiter = ',', default_values_t = TIMEOUT_GRID)]
    timeouts: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Explicit probe seeds, reused for every timeout (overrides --repeats/--seed).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, default_value_t = PROBE_STEPS)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_VERDICT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value = "runs/sweep")]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Defaults to the checkpoint's environment.
    #[arg(long)]
    env: Option<EnvName>,
    /// Reward used for the return column; defaults to the trained formulation.
    #[arg(long)]
    formulation: Option<FormulationKind>,
    #[arg(long, default_value_t = DEFAULT_EPISODES)]
    episodes: usize,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    run_id: Option<String>,
    #[arg(long, default_value = "runs/eval")]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct XevalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    env: Option<EnvName>,
    #[arg(long, value_delimiter = ',', default_values_t = FormulationKind::ALL)]
    formulations: Vec<FormulationKind>,
    /// Minimum-time timeout; defaults to the checkpoint's.
    #[arg(long)]
    timeout: Option<usize>,
    #[arg(long)]
    reset_penalty: Option<f64>,
    #[arg(long)]
    episode_length: Option<usize>,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    /// Step cap for minimum-time episodes.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    max_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    run_id: Option<String>,
    #[arg(long, default_value = "runs/xeval")]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Cmd::Train(a) => cmd_train(a),
        Cmd::Probe(a) => cmd_probe(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Xeval(a) => cmd_xeval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn build_config(a: &TrainArgs) -> Result<RunConfig> {
    let mut c = match &a.config {
        Some(p) => RunConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(v) = a.env {
        c.env = v;
    }
    if let Some(v) = a.formulation {
        c.formulation = v;
    }
    if let Some(v) = a.timeout {
        c.timeout = v;
    }
    if let Some(v) = a.reset_penalty {
        c.reset_penalty = v;
    }
    if let Some(v) = a.episode_length {
        c.episode_length = v;
    }
    if let Some(v) = a.steps {
        c.total_env_steps = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = &a.out {
        c.out = v.clone();
    }
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        c.set(k, v)?;
    }
    c.validate()?;
    Ok(c)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let config = build_config(&a)?;
    if let Some(n) = a.num_seeds {
        return launch_seeds(&config, n, a.force);
    }
    let s = train_to_dir(&config, a.force)?;
    println!(
        "trained {} {} seed={} steps={} updates={} episodes={} hits={} -> {}",
        config.env,
        config.formulation,
        config.seed,
        s.env_steps,
        s.updates,
        s.episodes,
        s.hits,
        config.out.display()
    );
    Ok(())
}

/// Each child gets the full config through a file so it reproduces this
/// process's settings exactly.
fn launch_seeds(config: &RunConfig, n: u64, force: bool) -> Result<()> {
    fs::create_dir_all(&config.out)?;
    let exe = std::env::current_exe()?;
    let mut children = Vec::new();
    for k in 0..n {
        let mut c = config.clone();
        c.seed = config.seed + k;
        c.out = config.out.join(format!("seed_{}", c.seed));
        fs::create_dir_all(&c.out)?;
        let cfg_path = config.out.join(format!("seed_{}.txt", c.seed));
        fs::write(&cfg_path, c.echo())?;
        let mut cmd = Command::new(&exe);
        cmd.arg("train").arg("--config").arg(&cfg_path);
        if force {
            cmd.arg("--force");
        }
        children.push((c.seed, cmd.spawn()?));
    }
    let mut failed = Vec::new();
    for (seed, mut child) in children {
        if !child.wait()?.success() {
            failed.push(seed);
        }
    }
    if !failed.is_empty() {
        bail!("runs failed for seeds {failed:?}");
    }
    Ok(())
}

fn output_file(out: &Path, name: &str, force: bool) -> Result<PathBuf> {
    fs::create_dir_all(out)?;
    let path = out.join(name);
    if path.exists() && !force {
        bail!("{} exists; pass --force to overwrite", path.display());
    }
    Ok(path)
}

fn verdict_word(rate: f64, threshold: f64) -> &'static str {
    if verdict_for_rate(rate, threshold) {
        "LEARNABLE"
    } else {
        "BELOW_THRESHOLD"
    }
}

fn cmd_probe(a: ProbeArgs) -> Result<()> {
    let path = output_file(&a.out, "probe.csv", a.force)?;
    let r = run_probe(a.env, a.timeout, a.steps, a.seed)?;
    write_probe_csv(std::slice::from_ref(&r), fs::File::create(&path)?)?;
    println!(
        "probe {} timeout={} seed={} steps={} hits={} hits_per_20k={} {}",
        r.env,
        r.timeout,
        r.seed,
        r.total_steps,
        r.hits,
        r.hits_per_20k,
        verdict_word(r.hits_per_20k, a.threshold)
    );
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let path = output_file(&a.out, "probe.csv", a.force)?;
    let reports = match &a.seeds {
        Some(seeds) => sweep_with_seeds(a.env, &a.timeouts, seeds, a.steps)?,
        None => sweep_timeouts(a.env, &a.timeouts, a.repeats, a.steps, a.seed)?,
    };
    write_probe_csv(&reports, fs::File::create(&path)?)?;
    let scale = PROBE_STEPS as f64 / a.steps as f64;
    for (timeout, mean) in mean_hits_by_timeout(&reports) {
        let rate = mean * scale;
        println!(
            "sweep {} timeout={timeout} mean_hits={mean} mean_hits_per_20k={rate} {}",
            a.env,
            verdict_word(rate, a.threshold)
        );
    }
    Ok(())
}

struct Loaded {
    actor: goalreach::sac::DeterministicActor<f64>,
    env: EnvName,
    trained: FormulationKind,
    run_id: String,
    ckpt: goalreach::sac::Checkpoint,
}

fn load(path: &Path, env: Option<EnvName>, run_id: Option<String>) -> Result<Loaded> {
    let (actor, ckpt) =
        load_actor(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    let ckpt_env: EnvName = ckpt.header_parse("env")?;
    let trained: FormulationKind = ckpt.header_parse("formulation")?;
    let run_id = run_id.unwrap_or_else(|| {
        format!(
            "{}-{}-seed{}-step{}",
            ckpt_env,
            trained,
            ckpt.header_get("seed").unwrap_or("?"),
            ckpt.header_get("step").unwrap_or("?")
        )
    });
    Ok(Loaded {
        actor,
        env: env.unwrap_or(ckpt_env),
        trained,
        run_id,
        ckpt,
    })
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let mut l = load(&a.checkpoint, a.env, a.run_id)?;
    let path = output_file(&a.out, "eval.csv", a.force)?;
    let kind = a.formulation.unwrap_or(l.trained);
    let stats = evaluate_policy(&mut l.actor, l.env, kind, a.episodes, a.horizon, a.seed)?;
    let rows = eval_rows(
        &l.run_id,
        l.env.as_str(),
        l.trained.as_str(),
        kind.as_str(),
        &stats,
    );
    write_eval_csv(&rows, fs::File::create(&path)?)?;
    let (stg, stg_se) = stats.steps_to_goal();
    let (sog, sog_se) = stats.steps_on_goal();
    let (ret, ret_se) = stats.returns();
    println!(
        "eval {} env={} trained={} evaluated={} episodes={} horizon={} steps_to_goal={stg:.2}±{stg_se:.2} steps_on_goal={sog:.2}±{sog_se:.2} return={ret:.2}±{ret_se:.2}",
        l.run_id, l.env, l.trained, kind, a.episodes, a.horizon
    );
    Ok(())
}

fn cmd_xeval(a: XevalArgs) -> Result<()> {
    let mut l = load(&a.checkpoint, a.env, a.run_id)?;
    let path = output_file(&a.out, "xeval.csv", a.force)?;
    let base = FormulationSpec {
        kind: FormulationKind::MinTime,
        episode_length: match a.episode_length {
            Some(v) => v,
            None => l.ckpt.header_parse("episode_length")?,
        },
        timeout: match a.timeout {
            Some(v) => v,
            None => l.ckpt.header_parse("timeout")?,
        },
        reset_penalty: match a.reset_penalty {
            Some(v) => v,
            None => l.ckpt.header_parse("reset_penalty")?,
        },
    };
    let mut rows = Vec::new();
    for kind in &a.formulations {
        let spec = base.with_kind(*kind);
        let stats = cross_evaluate(&mut l.actor, l.env, spec, a.episodes, a.max_steps, a.seed)?;
        rows.extend(eval_rows(
            &l.run_id,
            l.env.as_str(),
            l.trained.as_str(),
            kind.as_str(),
            &stats,
        ));
        let (ret, se) = stats.returns();
        println!(
            "xeval {} env={} trained={} evaluated={} episodes={} mean_return={ret:.3} se={se:.3}",
            l.run_id, l.env, l.trained, kind, a.episodes
        );
    }
    write_eval_csv(&rows, fs::File::create(&path)?)?;
    Ok(())
}
