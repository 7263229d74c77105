//! Command-line harness for the experiments: train agents, evaluate
//! checkpoints, measure the scripted controllers, collect demonstration
//! trajectories, and render learning curves.
//!
//! Exit codes: 0 on success, 2 for configuration or input-file problems,
//! 3 for a numerical fault during training, 1 otherwise.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use ddpgwb::agent::{AgentConfig, DdpgwbAgent};
use ddpgwb::checkpoint::read_checkpoint;
use ddpgwb::config::ExperimentConfig;
use ddpgwb::error::{Error, Result};
use ddpgwb::rng::{Prng, Stream};
use ddpgwb::sim::{self, TaskKind};
use ddpgwb::train::{self, EvalPolicy};
use ddpgwb::{plot, train::run_training};

#[derive(Parser)]
#[command(
    name = "ddpgwb",
    about = "DDPG with scripted base controllers on desk-scale manipulation tasks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent; writes metrics.csv and checkpoint.bin into --out.
    Train {
        /// Optional `key = value` config file; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Task name: stacking, block-cup, or cup-cup.
        #[arg(long)]
        task: Option<String>,
        /// Variant name: full, no-bb, no-mq-arg, no-bc, no-target-actor,
        /// ensemble, or demo-bc.
        #[arg(long)]
        variant: Option<String>,
        /// Master seed for every random stream of the run.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy evaluation of a trained checkpoint (no noise, no scripted
    /// controller involvement).
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 200)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Record successful scripted-controller episodes in the trajectory
    /// dump format (one CSV line per step; time_step restarts at 0 on
    /// each episode).
    CollectDemos {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render an SVG learning curve (mean line plus min–max band across
    /// the given metrics files).
    Plot {
        /// One or more metrics.csv files from runs of the same schedule.
        #[arg(long, num_args = 1.., required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Dashed reference line: the scripted controller's success rate.
        #[arg(long)]
        base: Option<f64>,
        #[arg(long, default_value = "learning curve")]
        title: String,
    },
    /// Measure the scripted controllers on a task: the sequential
    /// controller, the same controller under Gaussian action noise, and
    /// the uniform-primitive macro controller.
    Baseline {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 500)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Noise level for the noisy-controller measurement.
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
    },
}

fn parse_task(name: &str) -> Result<TaskKind> {
    TaskKind::from_name(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown task `{name}` (expected one of: stacking, block-cup, cup-cup)"
        ))
    })
}

fn cmd_train(
    config: Option<PathBuf>,
    task: Option<String>,
    variant: Option<String>,
    seed: Option<u64>,
    out: PathBuf,
) -> Result<()> {
    let mut cfg = match config {
        Some(path) => ExperimentConfig::from_file(&path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(task) = task {
        cfg.set_key("task", &task)?;
    }
    if let Some(variant) = variant {
        cfg.set_key("variant", &variant)?;
    }
    if let Some(seed) = seed {
        cfg.set_key("seed", &seed.to_string())?;
    }
    let outcome = run_training(&cfg, &out)?;
    println!(
        "task={} variant={} seed={} env_steps={} episodes={} final_eval_success={}",
        cfg.task.name(),
        cfg.variant.name(),
        cfg.seed,
        outcome.env_steps,
        outcome.episodes,
        outcome.final_eval_success
    );
    println!("metrics={}", outcome.metrics_path.display());
    println!("checkpoint={}", outcome.checkpoint_path.display());
    Ok(())
}

fn cmd_eval(checkpoint: PathBuf, task: String, episodes: usize, seed: u64) -> Result<()> {
    let task = parse_task(&task)?;
    // The stored network shapes carry the hidden width; reconstruct the
    // agent around them rather than demanding a config file.
    let stored = read_checkpoint(&checkpoint)?;
    let hidden_width = stored
        .networks
        .first()
        .and_then(|net| net.layer_dims().get(1).copied())
        .ok_or_else(|| Error::BadFile {
            path: checkpoint.clone(),
            reason: "checkpoint holds no networks".into(),
        })?;
    let config = AgentConfig { hidden_width, ..AgentConfig::default() };
    let (agent, trained_steps) = DdpgwbAgent::load(&checkpoint, config, None)?;
    let mut env_rng = Prng::new(seed, Stream::EvalEnv);
    let mut policy_rng = Prng::new(seed, Stream::EvalNoise);
    let success = train::run_evaluation(
        task,
        EvalPolicy::GreedyActor(&agent),
        episodes,
        &mut env_rng,
        &mut policy_rng,
        0.0,
    );
    println!(
        "task={} episodes={episodes} seed={seed} trained_env_steps={trained_steps} success_rate={success}",
        task.name()
    );
    Ok(())
}

fn cmd_collect_demos(task: String, count: usize, out: PathBuf, seed: u64) -> Result<()> {
    let task = parse_task(&task)?;
    let episodes = train::collect_demo_episodes(task, count, seed)?;
    let mut text = String::new();
    text.push_str(&format!(
        "# demonstrations task={} count={} seed={}\n",
        task.name(),
        count,
        seed
    ));
    for episode in &episodes {
        for (t, tr) in episode.iter().enumerate() {
            text.push_str(&sim::trajectory_line(
                t,
                &sim::Observation(tr.state),
                &sim::ActionVector(tr.action),
                tr.reward,
                tr.done,
            ));
            text.push('\n');
        }
    }
    std::fs::write(&out, text)?;
    let steps: usize = episodes.iter().map(Vec::len).sum();
    println!("task={} episodes={} transitions={} out={}", task.name(), count, steps, out.display());
    Ok(())
}

fn cmd_baseline(task: String, episodes: usize, seed: u64, noise: f64) -> Result<()> {
    let task = parse_task(&task)?;
    let run = |policy, sigma| {
        let mut env_rng = Prng::new(seed, Stream::EvalEnv);
        let mut policy_rng = Prng::new(seed, Stream::EvalNoise);
        train::run_evaluation(task, policy, episodes, &mut env_rng, &mut policy_rng, sigma)
    };
    let sequential = run(EvalPolicy::ScriptedSequential, 0.0);
    let noisy = run(EvalPolicy::ScriptedSequential, noise);
    let macro_mix = run(EvalPolicy::ScriptedMacro, 0.0);
    println!(
        "task={} episodes={episodes} sequential_success={sequential} \
         noisy_sequential_success={noisy} macro_success={macro_mix}",
        task.name()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, task, variant, seed, out } => {
            cmd_train(config, task, variant, seed, out)
        }
        Command::Eval { checkpoint, task, episodes, seed } => {
            cmd_eval(checkpoint, task, episodes, seed)
        }
        Command::CollectDemos { task, count, out, seed } => {
            cmd_collect_demos(task, count, out, seed)
        }
        Command::Plot { metrics, out, base, title } => {
            plot::emit_plot(&metrics, base, &title, &out)
        }
        Command::Baseline { task, episodes, seed, noise } => {
            cmd_baseline(task, episodes, seed, noise)
        }
    }
}

/// The BLAS backend picks its kernel family from `OPENBLAS_CORETYPE`
/// while the process is loading, before `main` runs, and virtualized
/// CPUs often advertise a generic model that lands on a slow portable
/// kernel. When the hardware actually has AVX-512 and no explicit
/// choice was made, restart the process once with the matching family
/// selected (about 2.7x on the training loop) and one BLAS thread (the
/// matrices are too small to split profitably).
#[cfg(all(unix, target_arch = "x86_64"))]
fn reexec_with_fast_gemm_kernel() {
    use std::os::unix::process::CommandExt;
    if std::env::var_os("OPENBLAS_CORETYPE").is_some()
        || !is_x86_feature_detected!("avx512f")
    {
        return;
    }
    if let Ok(exe) = std::env::current_exe() {
        let threads =
            std::env::var_os("OPENBLAS_NUM_THREADS").unwrap_or_else(|| "1".into());
        let err = std::process::Command::new(exe)
            .args(std::env::args_os().skip(1))
            .env("OPENBLAS_CORETYPE", "SKYLAKEX")
            .env("OPENBLAS_NUM_THREADS", threads)
            // Large same-sized buffers churn every step; serving them
            // from the heap instead of fresh mmaps saves kernel time.
            .env("MALLOC_MMAP_THRESHOLD_", "1073741824")
            .env("MALLOC_TRIM_THRESHOLD_", "-1")
            .exec();
        // exec only returns on failure; continue on the slow kernel.
        eprintln!("warning: could not restart for BLAS kernel selection: {err}");
    }
}

#[cfg(not(all(unix, target_arch = "x86_64")))]
fn reexec_with_fast_gemm_kernel() {}

fn main() {
    reexec_with_fast_gemm_kernel();
    ddpgwb::tune_runtime();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
