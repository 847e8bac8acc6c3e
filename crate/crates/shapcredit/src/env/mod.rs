//! Shared-reward, partially observable multi-agent environments.
//!
//! The contract is generative: `reset` produces the initial observations and
//! `step` advances the hidden state under a joint action, emitting one shared
//! reward and per-agent partial observations. The global state carries each
//! agent's sight-unrestricted observation for the centralized critic.

mod gridworld;
mod matrix;
mod null_agent;

pub use gridworld::{GridworldConfig, TeamGridworld};
pub use matrix::MatrixGame;
pub use null_agent::NullAgentWrapper;

use rand::rngs::StdRng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("step called after the episode terminated")]
    StepAfterDone,
    #[error("joint action has {got} entries, environment has {expected} agents")]
    WrongAgentCount { expected: usize, got: usize },
    #[error("action {action} of agent {agent} is outside 0..{space}")]
    InvalidAction {
        agent: usize,
        action: usize,
        space: usize,
    },
}

/// Static description of an environment instance.
#[derive(Debug, Clone)]
pub struct DecPomdpSpec {
    pub n_agents: usize,
    /// Per-agent action count |U|.
    pub action_space_size: usize,
    /// Width of one agent's partial observation.
    pub obs_dim: usize,
    /// Width of one agent's slice of the global state (the unrestricted
    /// observation fed to the critic).
    pub state_dim: usize,
    pub episode_limit: usize,
    pub gamma: f64,
    /// Group label per agent; equal labels share critic extractor parameters.
    pub groups: Vec<usize>,
    /// Encoding of the default action substituted for masked agents: the
    /// all-zeros vector, distinct from every one-hot.
    pub default_action_encoding: Vec<f64>,
}

impl DecPomdpSpec {
    pub fn new(
        n_agents: usize,
        action_space_size: usize,
        obs_dim: usize,
        state_dim: usize,
        episode_limit: usize,
        gamma: f64,
        groups: Vec<usize>,
    ) -> Self {
        assert!(n_agents >= 1);
        assert!(action_space_size >= 2);
        assert!(episode_limit >= 1);
        assert!((0.0..=1.0).contains(&gamma));
        assert_eq!(groups.len(), n_agents);
        DecPomdpSpec {
            n_agents,
            action_space_size,
            obs_dim,
            state_dim,
            episode_limit,
            gamma,
            groups,
            default_action_encoding: vec![0.0; action_space_size],
        }
    }

    /// One-hot encoding of an action id, the critic-side action input.
    pub fn encode_action(&self, action: usize) -> Vec<f64> {
        let mut enc = vec![0.0; self.action_space_size];
        enc[action] = 1.0;
        enc
    }
}

/// Observations, shared reward, and termination from one transition.
#[derive(Debug, Clone)]
pub struct StepResult {
    /// One partial observation per agent.
    pub observations: Vec<Vec<f64>>,
    /// Reward shared by every agent.
    pub reward: f64,
    pub done: bool,
    /// Concatenation of all agents' unrestricted observations.
    pub global_state: Vec<f64>,
}

impl StepResult {
    /// Agent `i`'s slice of the global state.
    pub fn state_slice(&self, spec: &DecPomdpSpec, agent: usize) -> &[f64] {
        &self.global_state[agent * spec.state_dim..(agent + 1) * spec.state_dim]
    }
}

/// One action id per agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointAction {
    pub actions: Vec<usize>,
}

impl JointAction {
    pub fn new(actions: Vec<usize>) -> Self {
        JointAction { actions }
    }

    pub fn validate(&self, spec: &DecPomdpSpec) -> Result<(), EnvError> {
        if self.actions.len() != spec.n_agents {
            return Err(EnvError::WrongAgentCount {
                expected: spec.n_agents,
                got: self.actions.len(),
            });
        }
        for (agent, &action) in self.actions.iter().enumerate() {
            if action >= spec.action_space_size {
                return Err(EnvError::InvalidAction {
                    agent,
                    action,
                    space: spec.action_space_size,
                });
            }
        }
        Ok(())
    }
}

/// Generative environment contract.
///
/// Instances are single-owner; run several in parallel for evaluation
/// rollouts rather than sharing one.
pub trait DecPomdpEnv: Send {
    fn spec(&self) -> &DecPomdpSpec;

    /// Returns to the initial state; `done = false`, `reward = 0`.
    fn reset(&mut self, rng: &mut StdRng) -> StepResult;

    /// Advances the state under `action`.
    fn step(&mut self, action: &JointAction) -> Result<StepResult, EnvError>;

    /// Whether this episode has met the environment's success predicate.
    fn succeeded(&self) -> bool;

    /// Analytically known optimal undiscounted return, when one exists.
    fn optimal_return(&self) -> Option<f64> {
        None
    }
}
