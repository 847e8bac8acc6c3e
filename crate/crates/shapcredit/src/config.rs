//! Run configuration: a flat, human-diffable `key = value` format with
//! section headers. Unknown sections or keys are hard errors so that typos
//! surface at validation time rather than silently using defaults.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::credit::CreditStrategy;
use crate::env::{DecPomdpEnv, GridworldConfig, MatrixGame, NullAgentWrapper, TeamGridworld};
use crate::trainer::{Hyperparams, TrainerError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        line: usize,
        key: String,
        section: String,
    },
    #[error("line {line}: unknown section [{0}]", .section)]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("missing required key `{key}` in section [{section}]")]
    MissingKey { key: String, section: String },
    #[error(transparent)]
    Hyperparams(#[from] TrainerError),
}

/// Environment selection and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EnvConfig {
    Matrix {
        agents: usize,
        actions: usize,
        /// Optimal joint action of the generated table.
        optimum: Vec<usize>,
        /// Payoff at the optimum.
        peak: f64,
        /// Append a null agent whose actions influence nothing.
        null_agent: bool,
    },
    Gridworld {
        width: usize,
        height: usize,
        starts: Vec<(usize, usize)>,
        targets: Vec<(usize, usize)>,
        required_occupancy: usize,
        sight_radius: usize,
        episode_limit: usize,
        step_penalty: f64,
        null_agent: bool,
    },
}

impl EnvConfig {
    /// Instantiates a fresh environment.
    pub fn build(&self) -> Box<dyn DecPomdpEnv> {
        match self {
            EnvConfig::Matrix {
                agents,
                actions,
                optimum,
                peak,
                null_agent,
            } => {
                let inner = Box::new(MatrixGame::with_unique_optimum(
                    *agents, *actions, optimum, *peak,
                ));
                if *null_agent {
                    Box::new(NullAgentWrapper::new(inner))
                } else {
                    inner
                }
            }
            EnvConfig::Gridworld {
                width,
                height,
                starts,
                targets,
                required_occupancy,
                sight_radius,
                episode_limit,
                step_penalty,
                null_agent,
            } => {
                let inner = Box::new(TeamGridworld::new(GridworldConfig {
                    width: *width,
                    height: *height,
                    starts: starts.clone(),
                    targets: targets.clone(),
                    required_occupancy: *required_occupancy,
                    sight_radius: *sight_radius,
                    episode_limit: *episode_limit,
                    step_penalty: *step_penalty,
                    gamma: 0.99,
                }));
                if *null_agent {
                    Box::new(NullAgentWrapper::new(inner))
                } else {
                    inner
                }
            }
        }
    }
}

/// A parsed and validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub hyperparams: Hyperparams,
    /// Episodes between checkpoints; 0 keeps only the final checkpoint.
    pub checkpoint_interval: usize,
    /// Default run directory; a command-line `--out` takes precedence.
    pub out_dir: Option<String>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_strict(&text)
    }

    /// Parses the sectioned key = value format.
    pub fn from_str_strict(text: &str) -> Result<Self, ConfigError> {
        let mut section = String::new();
        let mut run_kv: Vec<(usize, String, String)> = Vec::new();
        let mut env_kv: Vec<(usize, String, String)> = Vec::new();
        let mut train_kv: Vec<(usize, String, String)> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(ConfigError::Syntax {
                    line: line_no,
                    message: "unterminated section header".to_string(),
                })?;
                section = name.trim().to_string();
                match section.as_str() {
                    "run" | "env" | "train" => {}
                    other => {
                        return Err(ConfigError::UnknownSection {
                            line: line_no,
                            section: other.to_string(),
                        })
                    }
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
                line: line_no,
                message: "expected `key = value`".to_string(),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if section.is_empty() {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("key `{key}` appears before any section header"),
                });
            }
            if !seen.insert(format!("{section}.{key}")) {
                return Err(ConfigError::DuplicateKey { line: line_no, key });
            }
            match section.as_str() {
                "run" => run_kv.push((line_no, key, value)),
                "env" => env_kv.push((line_no, key, value)),
                "train" => train_kv.push((line_no, key, value)),
                _ => unreachable!(),
            }
        }

        let mut hp = Hyperparams::default();
        let mut checkpoint_interval = 0usize;
        let mut out_dir: Option<String> = None;

        for (line, key, value) in &run_kv {
            match key.as_str() {
                "seed" => hp.seed = parse(key, value)?,
                "checkpoint_interval" => checkpoint_interval = parse(key, value)?,
                "out" => out_dir = Some(value.clone()),
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line: *line,
                        key: key.clone(),
                        section: "run".to_string(),
                    })
                }
            }
        }

        let mut strategy_name: Option<String> = None;
        for (line, key, value) in &train_kv {
            match key.as_str() {
                "batch_size" => hp.batch_size = parse(key, value)?,
                "buffer_capacity" => hp.buffer_capacity = parse(key, value)?,
                "training_episodes" => hp.training_episodes = parse(key, value)?,
                "exploration_episodes" => hp.exploration_episodes = parse(key, value)?,
                "epsilon_start" => hp.epsilon_start = parse(key, value)?,
                "epsilon_end" => hp.epsilon_end = parse(key, value)?,
                "gamma" => hp.gamma = parse(key, value)?,
                "target_sync_interval" => hp.target_sync_interval = parse(key, value)?,
                "eval_interval" => hp.eval_interval = parse(key, value)?,
                "eval_episodes" => hp.eval_episodes = parse(key, value)?,
                "agent_lr" => hp.agent_lr = parse(key, value)?,
                "critic_lr" => hp.critic_lr = parse(key, value)?,
                "mc_samples" => hp.mc_samples = parse(key, value)?,
                "hidden_units" => hp.hidden_units = parse(key, value)?,
                "greedy_bootstrap" => hp.greedy_bootstrap = parse_bool(key, value)?,
                "credit_strategy" => strategy_name = Some(value.clone()),
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line: *line,
                        key: key.clone(),
                        section: "train".to_string(),
                    })
                }
            }
        }
        hp.credit_strategy = match strategy_name.as_deref() {
            None | Some("shapley_mc") => CreditStrategy::ShapleyMc {
                samples: hp.mc_samples,
            },
            Some("shapley_exact") => CreditStrategy::ShapleyExact,
            Some("plain_cf") => CreditStrategy::PlainCounterfactual,
            Some("uniform") => CreditStrategy::Uniform,
            Some(other) => {
                return Err(ConfigError::InvalidValue {
                    key: "credit_strategy".to_string(),
                    reason: format!(
                        "`{other}` is not one of shapley_mc, shapley_exact, plain_cf, uniform"
                    ),
                })
            }
        };

        let env = parse_env(&env_kv)?;
        hp.validate()?;
        Ok(RunConfig {
            env,
            hyperparams: hp,
            checkpoint_interval,
            out_dir,
        })
    }

    /// Canonical serialization; parsing it back yields an equal config.
    pub fn to_config_string(&self) -> String {
        let hp = &self.hyperparams;
        let mut s = String::new();
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "seed = {}", hp.seed);
        let _ = writeln!(s, "checkpoint_interval = {}", self.checkpoint_interval);
        if let Some(out) = &self.out_dir {
            let _ = writeln!(s, "out = {out}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "[env]");
        match &self.env {
            EnvConfig::Matrix {
                agents,
                actions,
                optimum,
                peak,
                null_agent,
            } => {
                let _ = writeln!(s, "kind = matrix");
                let _ = writeln!(s, "agents = {agents}");
                let _ = writeln!(s, "actions = {actions}");
                let _ = writeln!(s, "optimum = {}", join_usizes(optimum));
                let _ = writeln!(s, "peak = {peak}");
                let _ = writeln!(s, "null_agent = {null_agent}");
            }
            EnvConfig::Gridworld {
                width,
                height,
                starts,
                targets,
                required_occupancy,
                sight_radius,
                episode_limit,
                step_penalty,
                null_agent,
            } => {
                let _ = writeln!(s, "kind = gridworld");
                let _ = writeln!(s, "width = {width}");
                let _ = writeln!(s, "height = {height}");
                let _ = writeln!(s, "starts = {}", join_cells(starts));
                let _ = writeln!(s, "targets = {}", join_cells(targets));
                let _ = writeln!(s, "required_occupancy = {required_occupancy}");
                let _ = writeln!(s, "sight_radius = {sight_radius}");
                let _ = writeln!(s, "episode_limit = {episode_limit}");
                let _ = writeln!(s, "step_penalty = {step_penalty}");
                let _ = writeln!(s, "null_agent = {null_agent}");
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "[train]");
        let _ = writeln!(s, "batch_size = {}", hp.batch_size);
        let _ = writeln!(s, "buffer_capacity = {}", hp.buffer_capacity);
        let _ = writeln!(s, "training_episodes = {}", hp.training_episodes);
        let _ = writeln!(s, "exploration_episodes = {}", hp.exploration_episodes);
        let _ = writeln!(s, "epsilon_start = {}", hp.epsilon_start);
        let _ = writeln!(s, "epsilon_end = {}", hp.epsilon_end);
        let _ = writeln!(s, "gamma = {}", hp.gamma);
        let _ = writeln!(s, "target_sync_interval = {}", hp.target_sync_interval);
        let _ = writeln!(s, "eval_interval = {}", hp.eval_interval);
        let _ = writeln!(s, "eval_episodes = {}", hp.eval_episodes);
        let _ = writeln!(s, "agent_lr = {}", hp.agent_lr);
        let _ = writeln!(s, "critic_lr = {}", hp.critic_lr);
        let _ = writeln!(s, "mc_samples = {}", hp.mc_samples);
        let strategy = match hp.credit_strategy {
            CreditStrategy::ShapleyMc { .. } => "shapley_mc",
            CreditStrategy::ShapleyExact => "shapley_exact",
            CreditStrategy::PlainCounterfactual => "plain_cf",
            CreditStrategy::Uniform => "uniform",
        };
        let _ = writeln!(s, "credit_strategy = {strategy}");
        let _ = writeln!(s, "hidden_units = {}", hp.hidden_units);
        let _ = writeln!(s, "greedy_bootstrap = {}", hp.greedy_bootstrap);
        s
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| ConfigError::InvalidValue {
        key: key.to_string(),
        reason: format!("`{value}`: {e}"),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.to_string(),
            reason: format!("`{value}` is not `true` or `false`"),
        }),
    }
}

fn parse_usizes(key: &str, value: &str) -> Result<Vec<usize>, ConfigError> {
    value
        .split_whitespace()
        .map(|tok| parse::<usize>(key, tok))
        .collect()
}

/// Cells are written `x,y` separated by spaces: `0,0 3,0 0,3`.
fn parse_cells(key: &str, value: &str) -> Result<Vec<(usize, usize)>, ConfigError> {
    value
        .split_whitespace()
        .map(|tok| {
            let (x, y) = tok.split_once(',').ok_or_else(|| ConfigError::InvalidValue {
                key: key.to_string(),
                reason: format!("`{tok}` is not of the form x,y"),
            })?;
            Ok((parse::<usize>(key, x)?, parse::<usize>(key, y)?))
        })
        .collect()
}

fn join_usizes(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn join_cells(cells: &[(usize, usize)]) -> String {
    cells
        .iter()
        .map(|(x, y)| format!("{x},{y}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_env(kv: &[(usize, String, String)]) -> Result<EnvConfig, ConfigError> {
    let kind_entry = kv.iter().find(|(_, k, _)| k == "kind");
    let kind = match kind_entry {
        Some((_, _, v)) => v.clone(),
        None => {
            return Err(ConfigError::MissingKey {
                key: "kind".to_string(),
                section: "env".to_string(),
            })
        }
    };
    match kind.as_str() {
        "matrix" => {
            let mut agents = 2usize;
            let mut actions = 3usize;
            let mut optimum: Option<Vec<usize>> = None;
            let mut peak = 10.0f64;
            let mut null_agent = false;
            for (line, key, value) in kv {
                match key.as_str() {
                    "kind" => {}
                    "agents" => agents = parse(key, value)?,
                    "actions" => actions = parse(key, value)?,
                    "optimum" => optimum = Some(parse_usizes(key, value)?),
                    "peak" => peak = parse(key, value)?,
                    "null_agent" => null_agent = parse_bool(key, value)?,
                    _ => {
                        return Err(ConfigError::UnknownKey {
                            line: *line,
                            key: key.clone(),
                            section: "env".to_string(),
                        })
                    }
                }
            }
            let optimum = optimum.unwrap_or_else(|| (0..agents).map(|i| i % actions).collect());
            if optimum.len() != agents {
                return Err(ConfigError::InvalidValue {
                    key: "optimum".to_string(),
                    reason: format!("expected {agents} entries, got {}", optimum.len()),
                });
            }
            if let Some(&bad) = optimum.iter().find(|&&a| a >= actions) {
                return Err(ConfigError::InvalidValue {
                    key: "optimum".to_string(),
                    reason: format!("action id {bad} outside 0..{actions}"),
                });
            }
            Ok(EnvConfig::Matrix {
                agents,
                actions,
                optimum,
                peak,
                null_agent,
            })
        }
        "gridworld" => {
            let mut width = 3usize;
            let mut height = 3usize;
            let mut starts: Option<Vec<(usize, usize)>> = None;
            let mut targets: Option<Vec<(usize, usize)>> = None;
            let mut required: Option<usize> = None;
            let mut sight = 1usize;
            let mut episode_limit = 30usize;
            let mut step_penalty = 0.0f64;
            let mut null_agent = false;
            for (line, key, value) in kv {
                match key.as_str() {
                    "kind" => {}
                    "width" => width = parse(key, value)?,
                    "height" => height = parse(key, value)?,
                    "starts" => starts = Some(parse_cells(key, value)?),
                    "targets" => targets = Some(parse_cells(key, value)?),
                    "required_occupancy" => required = Some(parse(key, value)?),
                    "sight_radius" => sight = parse(key, value)?,
                    "episode_limit" => episode_limit = parse(key, value)?,
                    "step_penalty" => step_penalty = parse(key, value)?,
                    "null_agent" => null_agent = parse_bool(key, value)?,
                    _ => {
                        return Err(ConfigError::UnknownKey {
                            line: *line,
                            key: key.clone(),
                            section: "env".to_string(),
                        })
                    }
                }
            }
            let defaults = GridworldConfig::switch3();
            let starts = starts.unwrap_or(defaults.starts);
            let targets = targets.unwrap_or(defaults.targets);
            let required = required.unwrap_or(targets.len());
            for &(x, y) in starts.iter().chain(&targets) {
                if x >= width || y >= height {
                    return Err(ConfigError::InvalidValue {
                        key: "starts/targets".to_string(),
                        reason: format!("cell {x},{y} outside the {width}x{height} grid"),
                    });
                }
            }
            if required == 0 || required > targets.len() {
                return Err(ConfigError::InvalidValue {
                    key: "required_occupancy".to_string(),
                    reason: format!("must be in 1..={}", targets.len()),
                });
            }
            Ok(EnvConfig::Gridworld {
                width,
                height,
                starts,
                targets,
                required_occupancy: required,
                sight_radius: sight,
                episode_limit,
                step_penalty,
                null_agent,
            })
        }
        other => Err(ConfigError::InvalidValue {
            key: "kind".to_string(),
            reason: format!("`{other}` is not `matrix` or `gridworld`"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MATRIX_CFG: &str = "\
# one-step cooperative table
[run]
seed = 7
checkpoint_interval = 100

[env]
kind = matrix
agents = 2
actions = 3
optimum = 1 2
peak = 10
null_agent = false

[train]
training_episodes = 500
credit_strategy = shapley_mc
mc_samples = 5
";

    #[test]
    fn parses_a_matrix_config() {
        let cfg = RunConfig::from_str_strict(MATRIX_CFG).unwrap();
        assert_eq!(cfg.hyperparams.seed, 7);
        assert_eq!(cfg.checkpoint_interval, 100);
        assert_eq!(cfg.hyperparams.training_episodes, 500);
        assert_eq!(
            cfg.hyperparams.credit_strategy,
            CreditStrategy::ShapleyMc { samples: 5 }
        );
        match &cfg.env {
            EnvConfig::Matrix { agents, actions, optimum, .. } => {
                assert_eq!((*agents, *actions), (2, 3));
                assert_eq!(optimum, &vec![1, 2]);
            }
            other => panic!("unexpected env {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        let text = MATRIX_CFG.replace("mc_samples", "mc_sample");
        match RunConfig::from_str_strict(&text) {
            Err(ConfigError::UnknownKey { key, .. }) => assert_eq!(key, "mc_sample"),
            other => panic!("expected unknown-key error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_gamma_names_the_field() {
        let text = format!("{MATRIX_CFG}gamma = 1.5\n");
        match RunConfig::from_str_strict(&text) {
            Err(ConfigError::Hyperparams(TrainerError::InvalidHyperparam { field, .. })) => {
                assert_eq!(field, "gamma")
            }
            other => panic!("expected gamma violation, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let text = format!("{MATRIX_CFG}mc_samples = 6\n");
        assert!(matches!(
            RunConfig::from_str_strict(&text),
            Err(ConfigError::DuplicateKey { .. })
        ));
    }

    #[test]
    fn round_trip_preserves_semantics() {
        let cfg = RunConfig::from_str_strict(MATRIX_CFG).unwrap();
        let text = cfg.to_config_string();
        let reparsed = RunConfig::from_str_strict(&text).unwrap();
        assert_eq!(cfg, reparsed);
    }

    #[test]
    fn gridworld_round_trip() {
        let text = "\
[run]
seed = 1
[env]
kind = gridworld
width = 4
height = 4
starts = 0,0 3,0 0,3
targets = 1,1 2,1 1,2
required_occupancy = 3
step_penalty = -0.01
[train]
training_episodes = 10
";
        let cfg = RunConfig::from_str_strict(text).unwrap();
        let reparsed = RunConfig::from_str_strict(&cfg.to_config_string()).unwrap();
        assert_eq!(cfg, reparsed);
        let env = cfg.env.build();
        assert_eq!(env.spec().n_agents, 3);
        assert_eq!(env.spec().obs_dim, 9 + 2);
    }

    #[test]
    fn out_of_grid_cells_are_rejected() {
        let text = "\
[env]
kind = gridworld
width = 2
height = 2
starts = 0,0 3,0 0,3
targets = 1,1
required_occupancy = 1
[train]
training_episodes = 1
";
        assert!(matches!(
            RunConfig::from_str_strict(text),
            Err(ConfigError::InvalidValue { .. })
        ));
    }

    #[test]
    fn out_key_round_trips() {
        let text = format!("{MATRIX_CFG}").replace("[run]", "[run]\nout = runs/demo");
        let cfg = RunConfig::from_str_strict(&text).unwrap();
        assert_eq!(cfg.out_dir.as_deref(), Some("runs/demo"));
        let reparsed = RunConfig::from_str_strict(&cfg.to_config_string()).unwrap();
        assert_eq!(cfg, reparsed);
    }

    #[test]
    fn null_agent_wrapping_adds_an_agent() {
        let text = MATRIX_CFG.replace("null_agent = false", "null_agent = true");
        let cfg = RunConfig::from_str_strict(&text).unwrap();
        let env = cfg.env.build();
        assert_eq!(env.spec().n_agents, 3);
    }
}
