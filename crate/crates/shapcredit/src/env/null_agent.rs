//! Wrapper that appends an agent whose actions influence nothing.

use rand::rngs::StdRng;

use super::{DecPomdpEnv, DecPomdpSpec, EnvError, JointAction, StepResult};

/// Appends one agent to an inner environment. The appended agent's actions
/// are validated but never reach the inner transition or reward; its
/// observation is a constant zero vector. The behavioral analogue of a null
/// player, used by the credit-audit tests.
pub struct NullAgentWrapper {
    inner: Box<dyn DecPomdpEnv>,
    spec: DecPomdpSpec,
}

impl NullAgentWrapper {
    pub fn new(inner: Box<dyn DecPomdpEnv>) -> Self {
        let inner_spec = inner.spec();
        let mut groups = inner_spec.groups.clone();
        // The appended agent gets a fresh group label of its own.
        let next_label = groups.iter().max().map_or(0, |m| m + 1);
        groups.push(next_label);
        let spec = DecPomdpSpec::new(
            inner_spec.n_agents + 1,
            inner_spec.action_space_size,
            inner_spec.obs_dim,
            inner_spec.state_dim,
            inner_spec.episode_limit,
            inner_spec.gamma,
            groups,
        );
        NullAgentWrapper { inner, spec }
    }

    fn extend(&self, mut result: StepResult) -> StepResult {
        result.observations.push(vec![0.0; self.spec.obs_dim]);
        result.global_state.extend(vec![0.0; self.spec.state_dim]);
        result
    }
}

impl DecPomdpEnv for NullAgentWrapper {
    fn spec(&self) -> &DecPomdpSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut StdRng) -> StepResult {
        let inner = self.inner.reset(rng);
        self.extend(inner)
    }

    fn step(&mut self, action: &JointAction) -> Result<StepResult, EnvError> {
        action.validate(&self.spec)?;
        let inner_action = JointAction::new(action.actions[..self.spec.n_agents - 1].to_vec());
        let inner = self.inner.step(&inner_action)?;
        Ok(self.extend(inner))
    }

    fn succeeded(&self) -> bool {
        self.inner.succeeded()
    }

    fn optimal_return(&self) -> Option<f64> {
        self.inner.optimal_return()
    }
}
