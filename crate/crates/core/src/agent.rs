//! The learning agent: deterministic actor, action-value critic, their
//! target copies, and the three controller-aided mechanisms layered on
//! plain deterministic policy-gradient learning:
//!
//! 1. **Critic-arbitrated exploration** — greedy steps pick the best of
//!    the actor's action and the scripted candidates by critic score.
//! 2. **Controller-bootstrapped critic targets** — the bootstrap value of
//!    the next state is the best target-critic score over the target
//!    actor's action and the scripted candidates.
//! 3. **Q-filtered behavior cloning** — the actor is pulled toward a
//!    scripted candidate only where the critic scores that candidate
//!    strictly above the actor's own action.
//!
//! Every mechanism is independently switchable; with all three off the
//! update rules are exactly standard DDPG. One or several controllers are
//! supported uniformly: callers pass the per-state candidate action list,
//! and a single candidate reproduces the single-controller behavior.

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};

use crate::checkpoint::{self, CheckpointMeta};
use crate::error::{Error, Result};
use crate::nn::{Activation, GradientBundle, MlpNetwork};
use crate::optim::{soft_update, AdamState};
use crate::replay::Batch;
use crate::rng::{Prng, Stream};
use crate::sim::{ActionVector, ACTION_DIM, OBS_DIM};

/// Learning hyperparameters and mechanism switches.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    /// Discount factor.
    pub gamma: f64,
    /// Polyak averaging rate for the target networks.
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Weight of the critic-score objective inside the actor loss while
    /// the cloning term is enabled. With cloning disabled the actor
    /// maximizes the critic score directly (standard DDPG) and this
    /// weight is not applied.
    pub dpg_weight: f64,
    /// Per-update-step decrement of the exploration schedule.
    pub epsilon_decay_rate: f64,
    /// Starting value of the exploration schedule.
    pub initial_epsilon: f64,
    /// Gaussian exploration noise scale, applied per action component.
    pub exploration_sigma: f64,
    pub batch_size: usize,
    /// Minibatch size drawn from the demonstration buffer by the
    /// demonstration baseline.
    pub demo_batch_size: usize,
    pub hidden_width: usize,
    /// Use the best scripted candidate inside the critic's bootstrap
    /// target (mechanism 2 above).
    pub use_controller_bootstrap: bool,
    /// Arbitrate greedy exploration between actor and candidates by
    /// critic score (mechanism 1); otherwise greedy steps are actor-only.
    pub use_mixed_argmax: bool,
    /// Enable the Q-filtered cloning term in the actor loss (mechanism 3).
    pub use_bc_loss: bool,
    /// Compute bootstrap actions with the target actor; otherwise the
    /// online actor is used (the target critic still scores them).
    pub use_target_actor: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.99,
            tau: 5e-3,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            dpg_weight: 2e-2,
            epsilon_decay_rate: 2e-5,
            initial_epsilon: 1.0,
            exploration_sigma: 0.1,
            batch_size: 256,
            demo_batch_size: 128,
            hidden_width: 256,
            use_controller_bootstrap: true,
            use_mixed_argmax: true,
            use_bc_loss: true,
            use_target_actor: true,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must be in (0, 1], got {}", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau must be in (0, 1], got {}", self.tau)));
        }
        for (name, v) in [("actor_lr", self.actor_lr), ("critic_lr", self.critic_lr)] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dpg_weight < 0.0 || !self.dpg_weight.is_finite() {
            return Err(Error::Config(format!(
                "dpg_weight must be non-negative, got {}",
                self.dpg_weight
            )));
        }
        if self.epsilon_decay_rate < 0.0 {
            return Err(Error::Config(format!(
                "epsilon_decay_rate must be non-negative, got {}",
                self.epsilon_decay_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.initial_epsilon) {
            return Err(Error::Config(format!(
                "initial_epsilon must be in [0, 1], got {}",
                self.initial_epsilon
            )));
        }
        if self.exploration_sigma < 0.0 {
            return Err(Error::Config(format!(
                "exploration_sigma must be non-negative, got {}",
                self.exploration_sigma
            )));
        }
        if self.batch_size == 0 || self.demo_batch_size == 0 {
            return Err(Error::Config("batch sizes must be positive".into()));
        }
        if self.hidden_width == 0 {
            return Err(Error::Config("hidden_width must be positive".into()));
        }
        Ok(())
    }
}

/// Statistics reported by one actor update, all measured before the
/// parameter step.
#[derive(Debug, Clone, Copy)]
pub struct ActorUpdateStats {
    /// Mean filtered cloning loss over the minibatch (0 when disabled).
    pub bc_loss: f64,
    /// Mean critic score of the actor's own actions on the minibatch.
    pub mean_q: f64,
    /// Fraction of minibatch rows where the cloning term was active.
    pub bc_active_fraction: f64,
}

/// Actor-critic learner with controller-aided exploration, bootstrap
/// targets, and imitation. See the module docs for the mechanisms.
#[derive(Debug, Clone)]
pub struct DdpgwbAgent {
    config: AgentConfig,
    actor: MlpNetwork,
    critic: MlpNetwork,
    target_actor: MlpNetwork,
    target_critic: MlpNetwork,
    actor_opt: AdamState,
    critic_opt: AdamState,
    /// Number of schedule decrements applied so far.
    decay_steps: u64,
}

impl DdpgwbAgent {
    /// Build a fresh agent. Network initialization draws from the
    /// dedicated init stream of `master_seed`, so agents with equal seeds
    /// and equal architecture start bit-identical.
    pub fn new(master_seed: u64, config: AgentConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = Prng::new(master_seed, Stream::Init);
        let h = config.hidden_width;
        let actor = MlpNetwork::new(&[OBS_DIM, h, h, ACTION_DIM], Activation::Tanh, &mut rng);
        let critic =
            MlpNetwork::new(&[OBS_DIM + ACTION_DIM, h, h, 1], Activation::Sigmoid, &mut rng);
        let target_actor = actor.clone();
        let target_critic = critic.clone();
        let actor_opt = AdamState::new(&actor);
        let critic_opt = AdamState::new(&critic);
        Ok(DdpgwbAgent {
            config,
            actor,
            critic,
            target_actor,
            target_critic,
            actor_opt,
            critic_opt,
            decay_steps: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn actor(&self) -> &MlpNetwork {
        &self.actor
    }

    pub fn critic(&self) -> &MlpNetwork {
        &self.critic
    }

    /// Mutable actor access, for perturbation-based gradient checks.
    pub fn actor_mut(&mut self) -> &mut MlpNetwork {
        &mut self.actor
    }

    /// Mutable critic access, for perturbation-based gradient checks.
    pub fn critic_mut(&mut self) -> &mut MlpNetwork {
        &mut self.critic
    }

    pub fn target_actor(&self) -> &MlpNetwork {
        &self.target_actor
    }

    pub fn target_critic(&self) -> &MlpNetwork {
        &self.target_critic
    }

    pub fn decay_steps(&self) -> u64 {
        self.decay_steps
    }

    pub fn set_decay_steps(&mut self, n: u64) {
        self.decay_steps = n;
    }

    /// Current value of the exploration schedule:
    /// `max(0, initial − rate · steps)`.
    pub fn epsilon(&self) -> f64 {
        (self.config.initial_epsilon - self.config.epsilon_decay_rate * self.decay_steps as f64)
            .max(0.0)
    }

    /// Advance the exploration schedule by one step.
    pub fn epsilon_decay(&mut self) {
        self.decay_steps += 1;
    }

    /// Greedy actor action for a single state.
    pub fn actor_action(&self, state: &[f64; OBS_DIM]) -> ActionVector {
        let out = self.actor.forward(state);
        let mut a = [0.0; ACTION_DIM];
        a.copy_from_slice(&out);
        ActionVector(a)
    }

    /// Online critic score for a single state-action pair.
    pub fn critic_value(&self, state: &[f64; OBS_DIM], action: &[f64; ACTION_DIM]) -> f64 {
        let mut input = [0.0; OBS_DIM + ACTION_DIM];
        input[..OBS_DIM].copy_from_slice(state);
        input[OBS_DIM..].copy_from_slice(action);
        self.critic.forward(&input)[0]
    }

    /// Pick the best action among the actor's own and the scripted
    /// candidates by online critic score. Ties keep the actor's action.
    pub fn mixed_q_argmax(
        &self,
        state: &[f64; OBS_DIM],
        candidates: &[ActionVector],
    ) -> ActionVector {
        self.mixed_q_argmax_indexed(state, candidates).0
    }

    /// As [`Self::mixed_q_argmax`], also reporting the source: 0 for the
    /// actor, `k + 1` for candidate `k`.
    pub fn mixed_q_argmax_indexed(
        &self,
        state: &[f64; OBS_DIM],
        candidates: &[ActionVector],
    ) -> (ActionVector, usize) {
        let mut best = self.actor_action(state);
        let mut best_q = self.critic_value(state, &best.0);
        let mut source = 0;
        for (k, c) in candidates.iter().enumerate() {
            let q = self.critic_value(state, &c.0);
            if q > best_q {
                best = *c;
                best_q = q;
                source = k + 1;
            }
        }
        (best, source)
    }

    /// Behavioral action for one environment step: with probability
    /// epsilon a scripted candidate (uniform among several), otherwise the
    /// greedy choice — critic-arbitrated if enabled, the plain actor if
    /// not. Gaussian noise is added per component and the result is
    /// clamped to the unit box.
    pub fn select_exploration_action(
        &self,
        state: &[f64; OBS_DIM],
        candidates: &[ActionVector],
        rng: &mut Prng,
    ) -> ActionVector {
        assert!(!candidates.is_empty(), "at least one scripted candidate is required");
        let take_scripted = rng.uniform() < self.epsilon();
        let mut action = if take_scripted {
            if candidates.len() == 1 {
                candidates[0]
            } else {
                candidates[rng.index(candidates.len())]
            }
        } else if self.config.use_mixed_argmax {
            self.mixed_q_argmax(state, candidates)
        } else {
            self.actor_action(state)
        };
        for v in action.0.iter_mut() {
            *v = (*v + rng.normal(0.0, self.config.exploration_sigma)).clamp(-1.0, 1.0);
        }
        action
    }

    /// Batched online-actor actions (rows of states to rows of actions).
    fn actor_actions_batch(net: &MlpNetwork, states: &ArrayView2<f64>) -> Array2<f64> {
        net.forward_batch(states)
    }

    /// Batched critic scores for paired state and action rows.
    fn q_values_batch(
        net: &MlpNetwork,
        states: &ArrayView2<f64>,
        actions: &ArrayView2<f64>,
    ) -> Array1<f64> {
        let input = concatenate![Axis(1), *states, *actions];
        let out = net.forward_batch(&input.view());
        out.column(0).to_owned()
    }

    /// Bootstrap regression targets for the critic. Per transition:
    /// the reward alone on terminal rows; otherwise reward plus the
    /// discounted best target-critic score over the bootstrap action —
    /// the (target) actor's action, joined by every scripted candidate
    /// when controller bootstrapping is enabled. `candidate_actions_next`
    /// holds one `(n, action)` matrix per controller, evaluated at the
    /// *next* states.
    pub fn compute_bootstrap_targets(
        &self,
        batch: &Batch,
        candidate_actions_next: &[Array2<f64>],
    ) -> Array1<f64> {
        let policy = if self.config.use_target_actor { &self.target_actor } else { &self.actor };
        let next_actions = Self::actor_actions_batch(policy, &batch.next_states.view());
        let mut best_q = Self::q_values_batch(
            &self.target_critic,
            &batch.next_states.view(),
            &next_actions.view(),
        );
        if self.config.use_controller_bootstrap {
            for candidate in candidate_actions_next {
                let q = Self::q_values_batch(
                    &self.target_critic,
                    &batch.next_states.view(),
                    &candidate.view(),
                );
                best_q.zip_mut_with(&q, |b, &v| {
                    if v > *b {
                        *b = v;
                    }
                });
            }
        }
        let n = batch.len();
        let mut targets = Array1::zeros(n);
        for i in 0..n {
            targets[i] = if batch.dones[i] {
                batch.rewards[i]
            } else {
                batch.rewards[i] + self.config.gamma * best_q[i]
            };
        }
        targets
    }

    /// Mean-squared-error critic loss against `targets` and its parameter
    /// gradients, without stepping. Exposed so the gradients can be
    /// checked against finite differences.
    pub fn critic_loss_and_grads(
        &self,
        batch: &Batch,
        targets: &Array1<f64>,
    ) -> (f64, GradientBundle) {
        let n = batch.len();
        assert_eq!(targets.len(), n, "one target per transition");
        let input = concatenate![Axis(1), batch.states, batch.actions];
        let cache = self.critic.forward_batch_cached(&input.view());
        let q = cache.output().column(0);
        let mut loss = 0.0;
        let mut upstream = Array2::zeros((n, 1));
        for i in 0..n {
            let diff = q[i] - targets[i];
            loss += diff * diff;
            upstream[[i, 0]] = 2.0 * diff / n as f64;
        }
        loss /= n as f64;
        let (grads, _) = self.critic.backward_batch(&cache, &upstream);
        (loss, grads)
    }

    /// One critic regression step toward `targets`. Returns the loss
    /// measured before the step.
    pub fn critic_update(&mut self, batch: &Batch, targets: &Array1<f64>) -> Result<f64> {
        let (loss, grads) = self.critic_loss_and_grads(batch, targets);
        self.critic_opt.step(&mut self.critic, &grads, self.config.critic_lr)?;
        Ok(loss)
    }

    /// Actor loss and parameter gradients, without stepping.
    ///
    /// The loss is `clone_term − weight · mean(Q(s, actor(s)))`. The clone
    /// term pulls each actor action toward the best-scoring scripted
    /// candidate for that state, active only where that candidate's
    /// critic score strictly exceeds the actor action's score (a
    /// candidate set of one reduces to the classic filtered-cloning
    /// rule). With cloning disabled the loss is `−mean(Q)` exactly.
    /// `candidate_actions` holds one `(n, action)` matrix per controller,
    /// evaluated at the batch states.
    pub fn actor_loss_and_grads(
        &self,
        batch: &Batch,
        candidate_actions: &[Array2<f64>],
    ) -> (ActorUpdateStats, GradientBundle) {
        let n = batch.len();
        let states = batch.states.view();
        let actor_cache = self.actor.forward_batch_cached(&states);
        let actor_actions = actor_cache.output().clone();

        let critic_input = concatenate![Axis(1), batch.states, actor_actions];
        let critic_cache = self.critic.forward_batch_cached(&critic_input.view());
        let q_actor = critic_cache.output().column(0).to_owned();
        let mean_q = q_actor.mean().unwrap_or(0.0);

        let score_weight =
            if self.config.use_bc_loss { self.config.dpg_weight } else { 1.0 };
        let score_upstream = Array2::from_elem((n, 1), -score_weight / n as f64);
        let critic_input_grad =
            self.critic.backward_batch_input_only(&critic_cache, &score_upstream);
        let mut action_upstream =
            critic_input_grad.slice(ndarray::s![.., OBS_DIM..]).to_owned();

        let mut bc_loss = 0.0;
        let mut active_rows = 0usize;
        if self.config.use_bc_loss && !candidate_actions.is_empty() {
            let candidate_q: Vec<Array1<f64>> = candidate_actions
                .iter()
                .map(|c| Self::q_values_batch(&self.critic, &states, &c.view()))
                .collect();
            for i in 0..n {
                let mut best_k = 0;
                for k in 1..candidate_q.len() {
                    if candidate_q[k][i] > candidate_q[best_k][i] {
                        best_k = k;
                    }
                }
                // Strictly better than the actor's own action, or the
                // clone target is the actor itself and the term vanishes.
                if candidate_q[best_k][i] > q_actor[i] {
                    active_rows += 1;
                    for j in 0..ACTION_DIM {
                        let diff = actor_actions[[i, j]] - candidate_actions[best_k][[i, j]];
                        bc_loss += diff * diff;
                        action_upstream[[i, j]] += 2.0 * diff / n as f64;
                    }
                }
            }
            bc_loss /= n as f64;
        }

        let (grads, _) = self.actor.backward_batch(&actor_cache, &action_upstream);
        let stats = ActorUpdateStats {
            bc_loss,
            mean_q,
            bc_active_fraction: active_rows as f64 / n as f64,
        };
        (stats, grads)
    }

    /// Rows of `batch` where the cloning term is active: the best
    /// candidate by online critic score strictly outranks the actor's
    /// own action. Matches [`Self::actor_loss_and_grads`] decision for
    /// decision.
    pub fn bc_active_mask(
        &self,
        batch: &Batch,
        candidate_actions: &[Array2<f64>],
    ) -> Vec<bool> {
        let n = batch.len();
        if !self.config.use_bc_loss || candidate_actions.is_empty() {
            return vec![false; n];
        }
        let states = batch.states.view();
        let actor_actions = self.actor.forward_batch(&states);
        let q_actor = Self::q_values_batch(&self.critic, &states, &actor_actions.view());
        let candidate_q: Vec<Array1<f64>> = candidate_actions
            .iter()
            .map(|c| Self::q_values_batch(&self.critic, &states, &c.view()))
            .collect();
        (0..n)
            .map(|i| {
                let best = candidate_q.iter().map(|q| q[i]).fold(f64::NEG_INFINITY, f64::max);
                best > q_actor[i]
            })
            .collect()
    }

    /// One actor step on the combined cloning/critic-score loss. Returns
    /// pre-step statistics.
    pub fn actor_update(
        &mut self,
        batch: &Batch,
        candidate_actions: &[Array2<f64>],
    ) -> Result<ActorUpdateStats> {
        let (stats, grads) = self.actor_loss_and_grads(batch, candidate_actions);
        self.actor_opt.step(&mut self.actor, &grads, self.config.actor_lr)?;
        Ok(stats)
    }

    /// Actor loss and gradients for the demonstration baseline, without
    /// stepping: the critic-score objective on the replay minibatch plus
    /// a filtered cloning term toward recorded demonstration actions on
    /// the demonstration minibatch.
    pub fn demo_loss_and_grads(
        &self,
        replay_batch: &Batch,
        demo_batch: &Batch,
    ) -> (ActorUpdateStats, GradientBundle) {
        let n = replay_batch.len();
        let states = replay_batch.states.view();
        let actor_cache = self.actor.forward_batch_cached(&states);
        let actor_actions = actor_cache.output().clone();
        let critic_input = concatenate![Axis(1), replay_batch.states, actor_actions];
        let critic_cache = self.critic.forward_batch_cached(&critic_input.view());
        let q_actor = critic_cache.output().column(0).to_owned();
        let mean_q = q_actor.mean().unwrap_or(0.0);

        let score_upstream = Array2::from_elem((n, 1), -self.config.dpg_weight / n as f64);
        let critic_input_grad =
            self.critic.backward_batch_input_only(&critic_cache, &score_upstream);
        let score_action_upstream = critic_input_grad.slice(ndarray::s![.., OBS_DIM..]).to_owned();
        let (mut grads, _) = self.actor.backward_batch(&actor_cache, &score_action_upstream);

        // Filtered cloning toward the demonstrated actions.
        let m = demo_batch.len();
        let demo_states = demo_batch.states.view();
        let demo_cache = self.actor.forward_batch_cached(&demo_states);
        let demo_actor_actions = demo_cache.output().clone();
        let q_demo_action =
            Self::q_values_batch(&self.critic, &demo_states, &demo_batch.actions.view());
        let q_demo_actor =
            Self::q_values_batch(&self.critic, &demo_states, &demo_actor_actions.view());
        let mut bc_loss = 0.0;
        let mut active_rows = 0usize;
        let mut demo_upstream = Array2::zeros((m, ACTION_DIM));
        for i in 0..m {
            if q_demo_action[i] > q_demo_actor[i] {
                active_rows += 1;
                for j in 0..ACTION_DIM {
                    let diff = demo_actor_actions[[i, j]] - demo_batch.actions[[i, j]];
                    bc_loss += diff * diff;
                    demo_upstream[[i, j]] = 2.0 * diff / m as f64;
                }
            }
        }
        bc_loss /= m as f64;
        let (demo_grads, _) = self.actor.backward_batch(&demo_cache, &demo_upstream);
        grads.add_assign(&demo_grads);

        let stats = ActorUpdateStats {
            bc_loss,
            mean_q,
            bc_active_fraction: active_rows as f64 / m as f64,
        };
        (stats, grads)
    }

    /// One actor step for the demonstration baseline (see
    /// [`Self::demo_loss_and_grads`]); both loss terms share a single
    /// optimizer step.
    pub fn demo_baseline_update(
        &mut self,
        replay_batch: &Batch,
        demo_batch: &Batch,
    ) -> Result<ActorUpdateStats> {
        let (stats, grads) = self.demo_loss_and_grads(replay_batch, demo_batch);
        self.actor_opt.step(&mut self.actor, &grads, self.config.actor_lr)?;
        Ok(stats)
    }

    /// Polyak-average both target networks toward their online copies.
    pub fn soft_update_targets(&mut self) {
        soft_update(&mut self.target_actor, &self.actor, self.config.tau);
        soft_update(&mut self.target_critic, &self.critic, self.config.tau);
    }

    /// Persist the four networks plus progress counters.
    pub fn save(&self, path: &std::path::Path, config_hash: u64, env_steps: u64) -> Result<()> {
        let meta =
            CheckpointMeta { config_hash, env_steps, decay_steps: self.decay_steps };
        checkpoint::write_checkpoint(
            path,
            &meta,
            &[&self.actor, &self.critic, &self.target_actor, &self.target_critic],
        )
    }

    /// Restore an agent saved by [`Self::save`]. Returns the agent and the
    /// stored environment-step counter. When `expected_config_hash` is
    /// given, a mismatch is rejected.
    pub fn load(
        path: &std::path::Path,
        config: AgentConfig,
        expected_config_hash: Option<u64>,
    ) -> Result<(Self, u64)> {
        config.validate()?;
        let ckpt = checkpoint::read_checkpoint(path)?;
        if let Some(expected) = expected_config_hash {
            if ckpt.meta.config_hash != expected {
                return Err(Error::BadFile {
                    path: path.to_path_buf(),
                    reason: format!(
                        "checkpoint was produced by a different configuration \
                         (hash {:#018x}, expected {:#018x})",
                        ckpt.meta.config_hash, expected
                    ),
                });
            }
        }
        if ckpt.networks.len() != 4 {
            return Err(Error::BadFile {
                path: path.to_path_buf(),
                reason: format!("expected 4 networks, found {}", ckpt.networks.len()),
            });
        }
        let h = config.hidden_width;
        let expect_dims: [&[usize]; 4] = [
            &[OBS_DIM, h, h, ACTION_DIM],
            &[OBS_DIM + ACTION_DIM, h, h, 1],
            &[OBS_DIM, h, h, ACTION_DIM],
            &[OBS_DIM + ACTION_DIM, h, h, 1],
        ];
        for (net, expect) in ckpt.networks.iter().zip(expect_dims) {
            if net.layer_dims() != expect {
                return Err(Error::BadFile {
                    path: path.to_path_buf(),
                    reason: format!(
                        "network shape {:?} does not match configured {:?}",
                        net.layer_dims(),
                        expect
                    ),
                });
            }
        }
        let mut nets = ckpt.networks.into_iter();
        let actor = nets.next().expect("counted above");
        let critic = nets.next().expect("counted above");
        let target_actor = nets.next().expect("counted above");
        let target_critic = nets.next().expect("counted above");
        let actor_opt = AdamState::new(&actor);
        let critic_opt = AdamState::new(&critic);
        Ok((
            DdpgwbAgent {
                config,
                actor,
                critic,
                target_actor,
                target_critic,
                actor_opt,
                critic_opt,
                decay_steps: ckpt.meta.decay_steps,
            },
            ckpt.meta.env_steps,
        ))
    }
}

/// Candidate action matrices for a whole batch of states: one `(n,
/// action)` matrix per controller in `set`, rows aligned with `states`.
pub fn candidate_action_matrices(
    set: &crate::control::ControllerSet,
    states: &ArrayView2<f64>,
) -> Vec<Array2<f64>> {
    let n = states.nrows();
    let mut result = vec![Array2::zeros((n, ACTION_DIM)); set.len()];
    for i in 0..n {
        let mut obs = [0.0; OBS_DIM];
        for (j, v) in states.row(i).iter().enumerate() {
            obs[j] = *v;
        }
        let obs = crate::sim::Observation(obs);
        for (k, matrix) in result.iter_mut().enumerate() {
            let a = set.candidate(k, &obs);
            for (j, v) in a.0.iter().enumerate() {
                matrix[[i, j]] = *v;
            }
        }
    }
    result
}
