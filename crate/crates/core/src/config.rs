//! Experiment configuration: a flat `key = value` text format with
//! `#` comments, variant presets that wire the agent's mechanism
//! switches, strict validation, and a stable content hash used to match
//! checkpoints to the configuration that produced them.

use std::fmt::Write as _;
use std::path::Path;

use crate::agent::AgentConfig;
use crate::checkpoint::fnv1a64;
use crate::error::{Error, Result};
use crate::sim::TaskKind;

/// Named experiment presets. Each selects a combination of the agent's
/// mechanism switches; `Ensemble` additionally swaps the single scripted
/// controller for the three primitives, and `DemoCloning` replaces
/// scripted exploration with a pre-collected demonstration buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// All mechanisms on, single controller.
    Full,
    /// Bootstrap targets use the target actor only.
    NoBootstrap,
    /// Greedy exploration uses the actor only.
    NoMixedArgmax,
    /// No cloning term in the actor loss.
    NoCloning,
    /// Bootstrap actions from the online actor instead of the target
    /// actor.
    NoTargetActor,
    /// Full mechanisms over the three-primitive controller set.
    Ensemble,
    /// Demonstration-driven baseline: no scripted exploration, standard
    /// targets, cloning toward recorded demonstrations.
    DemoCloning,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Full,
        Variant::NoBootstrap,
        Variant::NoMixedArgmax,
        Variant::NoCloning,
        Variant::NoTargetActor,
        Variant::Ensemble,
        Variant::DemoCloning,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoBootstrap => "no-bb",
            Variant::NoMixedArgmax => "no-mq-arg",
            Variant::NoCloning => "no-bc",
            Variant::NoTargetActor => "no-target-actor",
            Variant::Ensemble => "ensemble",
            Variant::DemoCloning => "demo-bc",
        }
    }

    pub fn from_name(name: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name() == name)
    }

    /// True when this variant trains against the three-primitive
    /// controller set instead of the single sequential controller.
    pub fn uses_primitive_set(self) -> bool {
        matches!(self, Variant::Ensemble)
    }

    /// True when this variant learns from a demonstration buffer.
    pub fn uses_demonstrations(self) -> bool {
        matches!(self, Variant::DemoCloning)
    }

    /// The agent mechanism switches this preset implies, applied on top
    /// of `base` hyperparameters.
    pub fn apply_to(self, base: &mut AgentConfig) {
        base.use_controller_bootstrap = true;
        base.use_mixed_argmax = true;
        base.use_bc_loss = true;
        base.use_target_actor = true;
        base.initial_epsilon = 1.0;
        match self {
            Variant::Full | Variant::Ensemble => {}
            Variant::NoBootstrap => base.use_controller_bootstrap = false,
            Variant::NoMixedArgmax => base.use_mixed_argmax = false,
            Variant::NoCloning => base.use_bc_loss = false,
            Variant::NoTargetActor => base.use_target_actor = false,
            Variant::DemoCloning => {
                // Exploration is the actor plus noise from the start;
                // targets are standard; cloning pulls toward recorded
                // demonstration actions.
                base.use_controller_bootstrap = false;
                base.use_mixed_argmax = false;
                base.initial_epsilon = 0.0;
            }
        }
    }
}

/// Everything that determines one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub variant: Variant,
    pub seed: u64,
    pub total_env_steps: u64,
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub final_eval_episodes: usize,
    pub buffer_capacity: usize,
    /// Successful demonstration episodes collected for `demo-bc`.
    pub demo_count: usize,
    pub agent: AgentConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: TaskKind::Stacking,
            variant: Variant::Full,
            seed: 0,
            total_env_steps: 150_000,
            eval_every: 2_000,
            eval_episodes: 20,
            final_eval_episodes: 200,
            buffer_capacity: 100_000,
            demo_count: 500,
            agent: AgentConfig::default(),
        }
    }
}

/// Parse config text on top of the defaults; `origin` names the source
/// in error messages. Lines are `key = value`, `#` starts a comment,
/// blank lines are skipped, unknown keys are rejected.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    for (line_no, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected `key = value`, got `{line}`",
                origin.display(),
                line_no + 1
            ))
        })?;
        config.set_key(key.trim(), value.trim())?;
    }
    Ok(config)
}

impl ExperimentConfig {
    /// Parse a config file on top of the defaults. Returns the config
    /// with the variant preset *not yet* applied; call
    /// [`Self::finalized`] after any further overrides.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::BadFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        parse_config_str(&text, path)
    }

    /// Apply one `key = value` assignment. Unknown keys and unparsable
    /// values are configuration errors naming the key.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| {
                Error::Config(format!("key `{key}`: cannot parse value `{value}`"))
            })
        }
        match key {
            "task" => {
                self.task = TaskKind::from_name(value).ok_or_else(|| {
                    Error::Config(format!(
                        "key `task`: unknown task `{value}` (expected stacking, \
                         block-cup, or cup-cup)"
                    ))
                })?;
            }
            "variant" => {
                self.variant = Variant::from_name(value).ok_or_else(|| {
                    Error::Config(format!(
                        "key `variant`: unknown variant `{value}` (expected one of {})",
                        Variant::ALL.map(Variant::name).join(", ")
                    ))
                })?;
            }
            "seed" => self.seed = parse(key, value)?,
            "total_env_steps" => self.total_env_steps = parse(key, value)?,
            "eval_every" => self.eval_every = parse(key, value)?,
            "eval_episodes" => self.eval_episodes = parse(key, value)?,
            "final_eval_episodes" => self.final_eval_episodes = parse(key, value)?,
            "buffer_capacity" => self.buffer_capacity = parse(key, value)?,
            "demo_count" => self.demo_count = parse(key, value)?,
            "gamma" => self.agent.gamma = parse(key, value)?,
            "tau" => self.agent.tau = parse(key, value)?,
            "actor_lr" => self.agent.actor_lr = parse(key, value)?,
            "critic_lr" => self.agent.critic_lr = parse(key, value)?,
            "dpg_weight" => self.agent.dpg_weight = parse(key, value)?,
            "epsilon_decay" => self.agent.epsilon_decay_rate = parse(key, value)?,
            "noise_sigma" => self.agent.exploration_sigma = parse(key, value)?,
            "batch_size" => self.agent.batch_size = parse(key, value)?,
            "demo_batch_size" => self.agent.demo_batch_size = parse(key, value)?,
            "hidden_width" => self.agent.hidden_width = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Apply the variant preset to the agent switches and validate
    /// everything. Call once after all file/CLI overrides are in.
    pub fn finalized(mut self) -> Result<Self> {
        self.variant.apply_to(&mut self.agent);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        if self.total_env_steps == 0 {
            return Err(Error::Config("total_env_steps must be positive".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        if self.eval_episodes == 0 || self.final_eval_episodes == 0 {
            return Err(Error::Config("evaluation episode counts must be positive".into()));
        }
        if self.buffer_capacity < self.agent.batch_size {
            return Err(Error::Config(format!(
                "buffer_capacity {} is smaller than batch_size {}",
                self.buffer_capacity, self.agent.batch_size
            )));
        }
        if self.variant.uses_demonstrations() && self.demo_count == 0 {
            return Err(Error::Config(
                "demo_count must be positive for the demo-bc variant".into(),
            ));
        }
        Ok(())
    }

    /// Canonical one-line-per-field rendering. Fixed field order; floats
    /// in shortest round-trip form; excludes artifact locations, so the
    /// hash identifies the experiment, not where its outputs live.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        let a = &self.agent;
        let _ = write!(
            s,
            "task={}\nvariant={}\nseed={}\ntotal_env_steps={}\neval_every={}\n\
             eval_episodes={}\nfinal_eval_episodes={}\nbuffer_capacity={}\ndemo_count={}\n\
             gamma={}\ntau={}\nactor_lr={}\ncritic_lr={}\ndpg_weight={}\nepsilon_decay={}\n\
             initial_epsilon={}\nnoise_sigma={}\nbatch_size={}\ndemo_batch_size={}\n\
             hidden_width={}\nbootstrap={}\nmixed_argmax={}\ncloning={}\ntarget_actor={}\n",
            self.task.name(),
            self.variant.name(),
            self.seed,
            self.total_env_steps,
            self.eval_every,
            self.eval_episodes,
            self.final_eval_episodes,
            self.buffer_capacity,
            self.demo_count,
            a.gamma,
            a.tau,
            a.actor_lr,
            a.critic_lr,
            a.dpg_weight,
            a.epsilon_decay_rate,
            a.initial_epsilon,
            a.exploration_sigma,
            a.batch_size,
            a.demo_batch_size,
            a.hidden_width,
            a.use_controller_bootstrap,
            a.use_mixed_argmax,
            a.use_bc_loss,
            a.use_target_actor,
        );
        s
    }

    /// Stable 64-bit content hash of [`Self::canonical_string`].
    pub fn content_hash(&self) -> u64 {
        fnv1a64(self.canonical_string().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(contents: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, contents).unwrap();
        (dir, path)
    }

    #[test]
    fn empty_file_yields_defaults() {
        let (_dir, path) = write_config("");
        let config = ExperimentConfig::from_file(&path).unwrap().finalized().unwrap();
        assert_eq!(config, ExperimentConfig::default().finalized().unwrap());
        assert_eq!(config.agent.gamma, 0.99);
        assert_eq!(config.agent.tau, 5e-3);
        assert_eq!(config.agent.dpg_weight, 2e-2);
        assert_eq!(config.agent.epsilon_decay_rate, 2e-5);
        assert_eq!(config.agent.batch_size, 256);
        assert_eq!(config.buffer_capacity, 100_000);
        assert_eq!(config.agent.exploration_sigma, 0.1);
        assert_eq!(config.agent.actor_lr, 1e-3);
        assert_eq!(config.agent.critic_lr, 1e-3);
    }

    #[test]
    fn comments_whitespace_and_values_parse() {
        let (_dir, path) = write_config(
            "# experiment setup\n\
             task = cup-cup   # hardest task\n\
             variant=ensemble\n\
             \n\
             seed =  42\n\
             gamma = 0.95\n\
             batch_size = 64\n",
        );
        let config = ExperimentConfig::from_file(&path).unwrap().finalized().unwrap();
        assert_eq!(config.task, TaskKind::CupCup);
        assert_eq!(config.variant, Variant::Ensemble);
        assert_eq!(config.seed, 42);
        assert_eq!(config.agent.gamma, 0.95);
        assert_eq!(config.agent.batch_size, 64);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let (_dir, path) = write_config("learning_rate = 0.1\n");
        let err = ExperimentConfig::from_file(&path).unwrap_err();
        assert!(err.to_string().contains("learning_rate"), "{err}");
        let mut config = ExperimentConfig::default();
        let err = config.set_key("gama", "0.9").unwrap_err();
        assert!(err.to_string().contains("gama"), "{err}");
    }

    #[test]
    fn out_of_range_and_malformed_values_are_rejected() {
        let (_dir, path) = write_config("gamma = 1.5\n");
        let config = ExperimentConfig::from_file(&path).unwrap();
        assert!(config.finalized().is_err());

        let (_dir2, path2) = write_config("seed = banana\n");
        let err = ExperimentConfig::from_file(&path2).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");

        let (_dir3, path3) = write_config("just a line without equals\n");
        let err = ExperimentConfig::from_file(&path3).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
    }

    #[test]
    fn variant_presets_wire_agent_switches() {
        let base = |v: Variant| {
            let mut c = ExperimentConfig { variant: v, ..ExperimentConfig::default() };
            c = c.finalized().unwrap();
            c.agent
        };
        let full = base(Variant::Full);
        assert!(full.use_controller_bootstrap && full.use_mixed_argmax && full.use_bc_loss);
        assert!(full.use_target_actor);
        assert_eq!(full.initial_epsilon, 1.0);

        assert!(!base(Variant::NoBootstrap).use_controller_bootstrap);
        assert!(!base(Variant::NoMixedArgmax).use_mixed_argmax);
        assert!(!base(Variant::NoCloning).use_bc_loss);
        assert!(!base(Variant::NoTargetActor).use_target_actor);

        let demo = base(Variant::DemoCloning);
        assert!(!demo.use_mixed_argmax, "demo baseline must not mix scripted actions");
        assert!(!demo.use_controller_bootstrap);
        assert!(demo.use_bc_loss);
        assert_eq!(demo.initial_epsilon, 0.0);

        assert!(Variant::Ensemble.uses_primitive_set());
        assert!(!Variant::Full.uses_primitive_set());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(Variant::from_name(v.name()), Some(v));
        }
        assert_eq!(Variant::from_name("bogus"), None);
    }

    #[test]
    fn later_assignments_override_file_values() {
        let (_dir, path) = write_config("seed = 1\ntask = stacking\n");
        let mut config = ExperimentConfig::from_file(&path).unwrap();
        config.set_key("seed", "9").unwrap();
        config.set_key("task", "block-cup").unwrap();
        let config = config.finalized().unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.task, TaskKind::BlockCup);
    }

    #[test]
    fn content_hash_tracks_experiment_identity() {
        let a = ExperimentConfig::default().finalized().unwrap();
        let mut b = a.clone();
        assert_eq!(a.content_hash(), b.content_hash());
        b.seed = 1;
        assert_ne!(a.content_hash(), b.content_hash());
        let mut c = a.clone();
        c.agent.gamma = 0.98;
        assert_ne!(a.content_hash(), c.content_hash());
        let mut d = a.clone();
        d.variant = Variant::NoBootstrap;
        let d = d.finalized().unwrap();
        assert_ne!(a.content_hash(), d.content_hash());
    }

    #[test]
    fn inconsistent_configurations_are_rejected() {
        let small_buffer =
            ExperimentConfig { buffer_capacity: 10, ..ExperimentConfig::default() };
        assert!(small_buffer.finalized().is_err());

        let no_demos = ExperimentConfig {
            variant: Variant::DemoCloning,
            demo_count: 0,
            ..ExperimentConfig::default()
        };
        assert!(no_demos.finalized().is_err());

        let zero_steps =
            ExperimentConfig { total_env_steps: 0, ..ExperimentConfig::default() };
        assert!(zero_steps.finalized().is_err());
    }
}
