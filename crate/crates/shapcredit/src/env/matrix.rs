//! One-step cooperative matrix game with a configurable payoff table.

use rand::rngs::StdRng;

use super::{DecPomdpEnv, DecPomdpSpec, EnvError, JointAction, StepResult};

/// Fully observed one-step game: the shared reward is a table entry indexed
/// by the joint action, and the episode ends immediately.
pub struct MatrixGame {
    spec: DecPomdpSpec,
    /// Row-major payoff over joint actions, length `k^n`.
    payoff: Vec<f64>,
    optimal_joint: Vec<usize>,
    optimal_value: f64,
    done: bool,
    succeeded: bool,
}

impl MatrixGame {
    pub fn new(n_agents: usize, n_actions: usize, payoff: Vec<f64>) -> Self {
        let expected = n_actions.pow(n_agents as u32);
        assert_eq!(
            payoff.len(),
            expected,
            "payoff table must cover all {expected} joint actions"
        );
        // The success predicate compares against the argmax entry
        // (first one in index order if the maximum is tied).
        let best = payoff
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, &v)| {
                if v > acc.1 {
                    (i, v)
                } else {
                    acc
                }
            });
        let optimal_joint = Self::unflatten(best.0, n_agents, n_actions);
        let spec = DecPomdpSpec::new(n_agents, n_actions, 1, 1, 1, 0.99, vec![0; n_agents]);
        MatrixGame {
            spec,
            payoff,
            optimal_joint,
            optimal_value: best.1,
            done: false,
            succeeded: false,
        }
    }

    /// Builds a table with a strict unique maximum `peak` at `optimum`,
    /// decreasing with per-agent distance from it. Every non-optimal entry
    /// additionally loses a synergy margin, so the joint payoff is not a
    /// sum of per-agent terms and credit strategies genuinely differ.
    pub fn with_unique_optimum(n_agents: usize, n_actions: usize, optimum: &[usize], peak: f64) -> Self {
        assert_eq!(optimum.len(), n_agents);
        let synergy = 2.0;
        let total = n_actions.pow(n_agents as u32);
        let mut payoff = vec![0.0; total];
        for (idx, entry) in payoff.iter_mut().enumerate() {
            let joint = Self::unflatten(idx, n_agents, n_actions);
            let mut v = peak;
            let mut off_optimum = false;
            for (i, (&u, &opt)) in joint.iter().zip(optimum).enumerate() {
                let dist = u.abs_diff(opt) as f64;
                if dist > 0.0 {
                    off_optimum = true;
                }
                v -= (2 + i) as f64 * dist;
            }
            if off_optimum {
                v -= synergy;
            }
            *entry = v;
        }
        MatrixGame::new(n_agents, n_actions, payoff)
    }

    fn unflatten(mut idx: usize, n_agents: usize, n_actions: usize) -> Vec<usize> {
        let mut joint = vec![0usize; n_agents];
        for slot in (0..n_agents).rev() {
            joint[slot] = idx % n_actions;
            idx /= n_actions;
        }
        joint
    }

    fn flatten(&self, actions: &[usize]) -> usize {
        let mut idx = 0usize;
        for &u in actions {
            idx = idx * self.spec.action_space_size + u;
        }
        idx
    }

    pub fn payoff_of(&self, actions: &[usize]) -> f64 {
        self.payoff[self.flatten(actions)]
    }

    pub fn optimal_joint_action(&self) -> &[usize] {
        &self.optimal_joint
    }

    fn observations(&self) -> Vec<Vec<f64>> {
        vec![vec![0.0]; self.spec.n_agents]
    }
}

impl DecPomdpEnv for MatrixGame {
    fn spec(&self) -> &DecPomdpSpec {
        &self.spec
    }

    fn reset(&mut self, _rng: &mut StdRng) -> StepResult {
        self.done = false;
        self.succeeded = false;
        StepResult {
            observations: self.observations(),
            reward: 0.0,
            done: false,
            global_state: vec![0.0; self.spec.n_agents],
        }
    }

    fn step(&mut self, action: &JointAction) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        action.validate(&self.spec)?;
        let reward = self.payoff[self.flatten(&action.actions)];
        self.done = true;
        self.succeeded = action.actions == self.optimal_joint;
        Ok(StepResult {
            observations: self.observations(),
            reward,
            done: true,
            global_state: vec![0.0; self.spec.n_agents],
        })
    }

    fn succeeded(&self) -> bool {
        self.succeeded
    }

    fn optimal_return(&self) -> Option<f64> {
        Some(self.optimal_value)
    }
}
