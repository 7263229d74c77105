//! The experiment loops: training, greedy evaluation, and scripted
//! demonstration collection.
//!
//! One environment step of training runs, in order: behavior-action
//! selection, simulator step, replay push, epsilon decay, then (once the
//! buffer holds a full minibatch) one critic update, one actor update,
//! and a soft target update — all on the same sampled minibatch.
//!
//! Every random draw comes from a stream of the run's master seed, so a
//! given (config, seed) pair reproduces its metrics exactly. Evaluation
//! rollouts use their own streams and never touch the replay buffer or
//! the exploration schedule.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::agent::{candidate_action_matrices, ActorUpdateStats, DdpgwbAgent};
use crate::config::{ExperimentConfig, Variant};
use crate::control::{self, ControllerSet};
use crate::error::{Error, Result};
use crate::metrics::{MetricsRow, MetricsWriter};
use crate::replay::{ReplayBuffer, Transition};
use crate::rng::{Prng, Stream};
use crate::sim::{self, ActionVector, TaskKind, TerminationCause, HORIZON};

/// File names created inside the output directory of a training run.
pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

/// What a finished training run produced.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Success rate of the final greedy evaluation.
    pub final_eval_success: f64,
    /// Episodes completed during training.
    pub episodes: u64,
    pub env_steps: u64,
    pub metrics_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

/// Running means of per-update statistics between metrics rows.
#[derive(Debug, Default)]
struct StatWindow {
    updates: u64,
    critic_loss: f64,
    mean_q: f64,
    bc_loss: f64,
    bc_active: f64,
}

impl StatWindow {
    fn add(&mut self, critic_loss: f64, stats: &ActorUpdateStats) {
        self.updates += 1;
        self.critic_loss += critic_loss;
        self.mean_q += stats.mean_q;
        self.bc_loss += stats.bc_loss;
        self.bc_active += stats.bc_active_fraction;
    }

    fn mean(&self, sum: f64) -> Option<f64> {
        (self.updates > 0).then(|| sum / self.updates as f64)
    }
}

fn rolling_success(recent: &VecDeque<bool>) -> f64 {
    if recent.is_empty() {
        return 0.0;
    }
    recent.iter().filter(|s| **s).count() as f64 / recent.len() as f64
}

/// Scripted candidates offered at `obs`, or a hold-still placeholder for
/// the demonstration baseline (which draws scripted actions with
/// probability zero and may not consult a controller).
fn behavior_candidates(
    controllers: &Option<ControllerSet>,
    obs: &sim::Observation,
) -> Vec<ActionVector> {
    match controllers {
        Some(set) => control::ensemble_action_set(set, obs),
        None => vec![ActionVector::ZERO],
    }
}

/// Train per the experiment config, writing `metrics.csv` and
/// `checkpoint.bin` into `out_dir`. Metrics rows are flushed as they are
/// produced, so a run aborted by a numerical fault leaves every row up
/// to the fault on disk.
pub fn run_training(config: &ExperimentConfig, out_dir: &Path) -> Result<TrainOutcome> {
    let cfg = config.clone().finalized()?;
    let task = cfg.task;
    std::fs::create_dir_all(out_dir)?;
    let metrics_path = out_dir.join(METRICS_FILE);
    let checkpoint_path = out_dir.join(CHECKPOINT_FILE);

    let controllers = match cfg.variant {
        Variant::Ensemble => Some(ControllerSet::Primitives(task)),
        Variant::DemoCloning => None,
        _ => Some(ControllerSet::Single(task)),
    };

    let demo_buffer = if cfg.variant.uses_demonstrations() {
        let episodes = collect_demo_episodes(task, cfg.demo_count, cfg.seed)?;
        let total: usize = episodes.iter().map(Vec::len).sum();
        let mut buffer = ReplayBuffer::new(total)?;
        for episode in episodes {
            for transition in episode {
                buffer.push(transition);
            }
        }
        Some(buffer)
    } else {
        None
    };

    let mut agent = DdpgwbAgent::new(cfg.seed, cfg.agent.clone())?;
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
    let mut train_env_rng = Prng::new(cfg.seed, Stream::TrainEnv);
    let mut explore_rng = Prng::new(cfg.seed, Stream::Explore);
    let mut replay_rng = Prng::new(cfg.seed, Stream::Replay);
    let mut eval_env_rng = Prng::new(cfg.seed, Stream::EvalEnv);
    let mut eval_noise_rng = Prng::new(cfg.seed, Stream::EvalNoise);

    let mut writer = MetricsWriter::create(&metrics_path)?;
    let start = Instant::now();

    let (mut world, mut obs) = sim::reset(task, &mut train_env_rng);
    let mut episodes_done: u64 = 0;
    let mut recent = VecDeque::with_capacity(100);
    let mut window = StatWindow::default();
    let mut final_eval = 0.0;

    for step in 1..=cfg.total_env_steps {
        let candidates = behavior_candidates(&controllers, &obs);
        let action = agent.select_exploration_action(&obs.0, &candidates, &mut explore_rng);
        let result = sim::step(&mut world, &action);
        buffer.push(Transition {
            state: obs.0,
            action: action.0,
            reward: result.reward,
            next_state: result.observation.0,
            done: result.done,
        });
        agent.epsilon_decay();
        obs = result.observation;

        if buffer.len() >= cfg.agent.batch_size {
            let batch = buffer.sample(cfg.agent.batch_size, &mut replay_rng)?;
            let next_candidates = match (&controllers, cfg.agent.use_controller_bootstrap) {
                (Some(set), true) => candidate_action_matrices(set, &batch.next_states.view()),
                _ => Vec::new(),
            };
            let targets = agent.compute_bootstrap_targets(&batch, &next_candidates);
            let critic_loss = agent.critic_update(&batch, &targets)?;
            let stats = if let Some(demos) = &demo_buffer {
                let demo_batch = demos.sample(cfg.agent.demo_batch_size, &mut replay_rng)?;
                agent.demo_baseline_update(&batch, &demo_batch)?
            } else {
                let bc_candidates = match (&controllers, cfg.agent.use_bc_loss) {
                    (Some(set), true) => candidate_action_matrices(set, &batch.states.view()),
                    _ => Vec::new(),
                };
                agent.actor_update(&batch, &bc_candidates)?
            };
            agent.soft_update_targets();
            window.add(critic_loss, &stats);
        }

        if result.done {
            if recent.len() == 100 {
                recent.pop_front();
            }
            recent.push_back(result.termination_cause == TerminationCause::Success);
            writer.write_row(&MetricsRow {
                env_step: step,
                episode_index: episodes_done,
                epsilon: agent.epsilon(),
                train_success_rolling100: rolling_success(&recent),
                eval_success: None,
                mean_q_on_batch: window.mean(window.mean_q),
                critic_loss: window.mean(window.critic_loss),
                actor_bc_loss: window.mean(window.bc_loss),
                bc_active_fraction: window.mean(window.bc_active),
                wallclock_seconds: start.elapsed().as_secs_f64(),
            })?;
            window = StatWindow::default();
            episodes_done += 1;
            let fresh = sim::reset(task, &mut train_env_rng);
            world = fresh.0;
            obs = fresh.1;
        }

        let last = step == cfg.total_env_steps;
        if step % cfg.eval_every == 0 || last {
            let episodes = if last { cfg.final_eval_episodes } else { cfg.eval_episodes };
            let success = run_evaluation(
                task,
                EvalPolicy::GreedyActor(&agent),
                episodes,
                &mut eval_env_rng,
                &mut eval_noise_rng,
                0.0,
            );
            writer.write_row(&MetricsRow {
                env_step: step,
                episode_index: episodes_done,
                epsilon: agent.epsilon(),
                train_success_rolling100: rolling_success(&recent),
                eval_success: Some(success),
                mean_q_on_batch: None,
                critic_loss: None,
                actor_bc_loss: None,
                bc_active_fraction: None,
                wallclock_seconds: start.elapsed().as_secs_f64(),
            })?;
            if last {
                final_eval = success;
            }
        }
    }

    agent.save(&checkpoint_path, cfg.content_hash(), cfg.total_env_steps)?;
    Ok(TrainOutcome {
        final_eval_success: final_eval,
        episodes: episodes_done,
        env_steps: cfg.total_env_steps,
        metrics_path,
        checkpoint_path,
    })
}

/// Policy under evaluation.
#[derive(Debug, Clone, Copy)]
pub enum EvalPolicy<'a> {
    /// The learned actor, deterministic, no controller access.
    GreedyActor(&'a DdpgwbAgent),
    /// The scripted sequential controller.
    ScriptedSequential,
    /// Uniform per-step draw from the three scripted primitives.
    ScriptedMacro,
}

/// Success rate of `policy` over fresh episodes drawn from `env_rng`.
///
/// `policy_rng` drives the macro controller's per-step draw and, when
/// `noise_sigma > 0`, per-component Gaussian action noise (clamped to
/// the unit box) — used to measure how a controller degrades under the
/// exploration noise training injects.
pub fn run_evaluation(
    task: TaskKind,
    policy: EvalPolicy<'_>,
    episodes: usize,
    env_rng: &mut Prng,
    policy_rng: &mut Prng,
    noise_sigma: f64,
) -> f64 {
    let mut successes = 0usize;
    for _ in 0..episodes {
        let (mut world, mut obs) = sim::reset(task, env_rng);
        loop {
            let mut action = match policy {
                EvalPolicy::GreedyActor(agent) => agent.actor_action(&obs.0),
                EvalPolicy::ScriptedSequential => control::base_action(task, &obs),
                EvalPolicy::ScriptedMacro => {
                    let set = ControllerSet::Primitives(task);
                    let actions = control::ensemble_action_set(&set, &obs);
                    control::ensemble_sample(&actions, policy_rng)
                }
            };
            if noise_sigma > 0.0 {
                for v in action.0.iter_mut() {
                    *v = (*v + policy_rng.normal(0.0, noise_sigma)).clamp(-1.0, 1.0);
                }
            }
            let result = sim::step(&mut world, &action);
            obs = result.observation;
            if result.done {
                if result.termination_cause == TerminationCause::Success {
                    successes += 1;
                }
                break;
            }
        }
    }
    successes as f64 / episodes.max(1) as f64
}

/// Roll the sequential controller greedily until `count` successful
/// episodes are recorded; failed episodes are discarded. Gives up (as a
/// configuration error) after 20 attempts per requested episode, so an
/// impossible request fails loudly instead of spinning.
pub fn collect_demo_episodes(
    task: TaskKind,
    count: usize,
    master_seed: u64,
) -> Result<Vec<Vec<Transition>>> {
    let mut rng = Prng::new(master_seed, Stream::Demo);
    let max_attempts = count.saturating_mul(20);
    let mut attempts = 0usize;
    let mut episodes = Vec::with_capacity(count);
    while episodes.len() < count {
        if attempts >= max_attempts {
            return Err(Error::Config(format!(
                "collected only {} of {count} demonstration episodes on task `{}` \
                 after {max_attempts} attempts",
                episodes.len(),
                task.name()
            )));
        }
        attempts += 1;
        let (mut world, mut obs) = sim::reset(task, &mut rng);
        let mut episode = Vec::with_capacity(HORIZON);
        let success = loop {
            let action = control::base_action(task, &obs);
            let result = sim::step(&mut world, &action);
            episode.push(Transition {
                state: obs.0,
                action: action.0,
                reward: result.reward,
                next_state: result.observation.0,
                done: result.done,
            });
            obs = result.observation;
            if result.done {
                break result.termination_cause == TerminationCause::Success;
            }
        };
        if success {
            episodes.push(episode);
        }
    }
    Ok(episodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;
    use crate::metrics::read_metrics;

    /// A config small enough to train in a few seconds.
    fn tiny_config(task: &str, variant: &str, seed: u64) -> ExperimentConfig {
        let text = format!(
            "task = {task}\nvariant = {variant}\nseed = {seed}\n\
             total_env_steps = 600\neval_every = 200\neval_episodes = 2\n\
             final_eval_episodes = 3\nbuffer_capacity = 2000\ndemo_count = 3\n\
             batch_size = 32\ndemo_batch_size = 16\nhidden_width = 24\n"
        );
        parse_config_str(&text, Path::new("tiny")).unwrap()
    }

    #[test]
    fn training_run_produces_metrics_and_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config("stacking", "full", 11);
        let outcome = run_training(&cfg, dir.path()).unwrap();
        assert_eq!(outcome.env_steps, 600);
        assert!(outcome.episodes > 0);
        assert!(outcome.checkpoint_path.exists());

        let rows = read_metrics(&outcome.metrics_path).unwrap();
        // Evaluation rows at every multiple of eval_every, final one with
        // eval filled; episode rows carry no eval numbers.
        let eval_steps: Vec<u64> = rows
            .iter()
            .filter(|r| r.eval_success.is_some())
            .map(|r| r.env_step)
            .collect();
        assert_eq!(eval_steps, vec![200, 400, 600]);
        assert!(rows.iter().any(|r| r.eval_success.is_none()), "expected episode rows");
        // Epsilon follows the linear schedule at every row.
        for row in &rows {
            let expected = (cfg.agent.initial_epsilon
                - cfg.agent.epsilon_decay_rate * row.env_step as f64)
                .max(0.0);
            assert!((row.epsilon - expected).abs() < 1e-12);
        }
        // Learning statistics appear once the buffer reaches a minibatch.
        let warm = rows.iter().find(|r| r.critic_loss.is_some()).expect("warm rows");
        assert!(warm.env_step >= 32);

        // The checkpoint reloads against this config's hash.
        let (loaded, steps) = DdpgwbAgent::load(
            &outcome.checkpoint_path,
            cfg.clone().finalized().unwrap().agent,
            Some(cfg.content_hash()),
        )
        .unwrap();
        assert_eq!(steps, 600);
        assert_eq!(loaded.decay_steps(), 600, "decay counter rides along in the checkpoint");
    }

    #[test]
    fn identical_runs_are_identical_apart_from_wallclock() {
        let strip_wallclock = |text: &str| -> String {
            text.lines()
                .map(|l| l.rsplit_once(',').unwrap().0)
                .collect::<Vec<_>>()
                .join("\n")
        };
        let cfg = tiny_config("stacking", "full", 5);
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let out_a = run_training(&cfg, dir_a.path()).unwrap();
        let out_b = run_training(&cfg, dir_b.path()).unwrap();

        let csv_a = std::fs::read_to_string(&out_a.metrics_path).unwrap();
        let csv_b = std::fs::read_to_string(&out_b.metrics_path).unwrap();
        assert_eq!(strip_wallclock(&csv_a), strip_wallclock(&csv_b));

        let ckpt_a = std::fs::read(&out_a.checkpoint_path).unwrap();
        let ckpt_b = std::fs::read(&out_b.checkpoint_path).unwrap();
        assert_eq!(ckpt_a, ckpt_b, "checkpoints should be byte-identical");

        let other = tiny_config("stacking", "full", 6);
        let dir_c = tempfile::tempdir().unwrap();
        let out_c = run_training(&other, dir_c.path()).unwrap();
        let csv_c = std::fs::read_to_string(&out_c.metrics_path).unwrap();
        assert_ne!(strip_wallclock(&csv_a), strip_wallclock(&csv_c));
    }

    #[test]
    fn demo_variant_trains_without_controller_access() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config("cup-cup", "demo-bc", 3);
        let outcome = run_training(&cfg, dir.path()).unwrap();
        let rows = read_metrics(&outcome.metrics_path).unwrap();
        // The demonstration baseline never takes scripted actions.
        for row in &rows {
            assert_eq!(row.epsilon, 0.0);
        }
        assert!(rows.iter().any(|r| r.actor_bc_loss.is_some()));
    }

    #[test]
    fn collected_demos_are_successful_episodes() {
        let episodes = collect_demo_episodes(TaskKind::Stacking, 3, 9).unwrap();
        assert_eq!(episodes.len(), 3);
        for episode in &episodes {
            let last = episode.last().unwrap();
            assert_eq!(last.reward, 1.0);
            assert!(last.done);
            assert!(episode.len() <= HORIZON);
            // Sparse reward: zero everywhere before the final step.
            for t in &episode[..episode.len() - 1] {
                assert_eq!(t.reward, 0.0);
            }
        }
    }

    #[test]
    fn sequential_eval_beats_macro_eval() {
        let mut env_rng = Prng::new(21, Stream::EvalEnv);
        let mut policy_rng = Prng::new(21, Stream::EvalNoise);
        let sequential = run_evaluation(
            TaskKind::Stacking,
            EvalPolicy::ScriptedSequential,
            60,
            &mut env_rng,
            &mut policy_rng,
            0.0,
        );
        let mut env_rng = Prng::new(21, Stream::EvalEnv);
        let macro_mix = run_evaluation(
            TaskKind::Stacking,
            EvalPolicy::ScriptedMacro,
            60,
            &mut env_rng,
            &mut policy_rng,
            0.0,
        );
        assert!(sequential > 0.7, "sequential success {sequential}");
        assert!(macro_mix < sequential, "macro {macro_mix} vs sequential {sequential}");
    }

    #[test]
    fn numerical_fault_aborts_with_partial_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config("stacking", "full", 2);
        // A colossal learning rate drives the critic non-finite within a
        // few updates.
        cfg.agent.critic_lr = 1e300;
        let err = run_training(&cfg, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "got {err:?}");
        // Whatever was written before the fault is intact and parseable.
        read_metrics(&dir.path().join(METRICS_FILE)).unwrap();
    }
}
