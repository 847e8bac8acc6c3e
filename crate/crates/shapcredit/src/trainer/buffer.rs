//! Recorded trajectories and the episode replay buffer.

use std::collections::VecDeque;

use rand::Rng;

use crate::env::JointAction;
use crate::nn::HiddenState;

/// One transition of a recorded episode.
#[derive(Debug, Clone)]
pub struct EpisodeStep {
    /// Per-agent partial observations the policies acted on.
    pub observations: Vec<Vec<f64>>,
    /// Per-agent slices of the global state, the critic-side inputs.
    pub critic_observations: Vec<Vec<f64>>,
    /// Per-agent recurrent state entering this step (zeros at step 0).
    pub hidden_snapshots: Vec<HiddenState>,
    pub action: JointAction,
    pub reward: f64,
    pub done: bool,
}

/// A recorded trajectory; the final step carries `done = true`.
#[derive(Debug, Clone, Default)]
pub struct Episode {
    pub steps: Vec<EpisodeStep>,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Undiscounted return.
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// FIFO ring of episodes with bounded capacity.
pub struct ReplayBuffer {
    episodes: VecDeque<Episode>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        ReplayBuffer {
            episodes: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, episode: Episode) {
        if self.episodes.len() == self.capacity {
            self.episodes.pop_front();
        }
        self.episodes.push_back(episode);
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, index: usize) -> &Episode {
        &self.episodes[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Episode> {
        self.episodes.iter()
    }

    /// Uniformly samples `batch_size` distinct episode indices; when the
    /// buffer holds fewer episodes, every index is returned.
    pub fn sample_indices<R: Rng>(&self, batch_size: usize, rng: &mut R) -> Vec<usize> {
        let len = self.episodes.len();
        if len <= batch_size {
            return (0..len).collect();
        }
        // Partial Fisher-Yates over the index range.
        let mut indices: Vec<usize> = (0..len).collect();
        for slot in 0..batch_size {
            let pick = rng.gen_range(slot..len);
            indices.swap(slot, pick);
        }
        indices.truncate(batch_size);
        indices
    }
}
