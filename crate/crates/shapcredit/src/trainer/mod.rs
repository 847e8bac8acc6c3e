//! Two-stage training loop: TD update of the central critic, then credit
//! regression of the decentralized recurrent agents, with replay buffering,
//! target-network synchronization, epsilon-greedy exploration, and periodic
//! greedy evaluation.

mod buffer;

pub use buffer::{Episode, EpisodeStep, ReplayBuffer};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::credit::{compute_credits, CounterfactualGame, CreditStrategy};
use crate::env::{DecPomdpEnv, EnvError, JointAction};
use crate::game::GameError;
use crate::nn::{
    AgentConfig, AgentNet, CriticConfig, CriticNet, NnError, Optimizer, OptimizerKind,
};

#[derive(Debug, Error)]
pub enum TrainerError {
    #[error("invalid hyperparameter `{field}`: {reason}")]
    InvalidHyperparam { field: &'static str, reason: String },
    #[error("update called with an empty batch")]
    EmptyBatch,
    #[error("evaluation requires at least one episode")]
    EmptyEvaluation,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Training hyperparameters; the presets override a subset per environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub training_episodes: usize,
    pub exploration_episodes: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub gamma: f64,
    /// Target critic refresh interval C, in episodes.
    pub target_sync_interval: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub agent_lr: f64,
    pub critic_lr: f64,
    /// Monte Carlo sample count M for Shapley credit estimation.
    pub mc_samples: usize,
    pub credit_strategy: CreditStrategy,
    pub seed: u64,
    /// Dense and recurrent layer width for both networks.
    pub hidden_units: usize,
    /// Bootstrap the TD target with the greedy next action instead of the
    /// recorded one.
    pub greedy_bootstrap: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            batch_size: 32,
            buffer_capacity: 1000,
            training_episodes: 20000,
            exploration_episodes: 1000,
            epsilon_start: 1.0,
            epsilon_end: 0.0,
            gamma: 0.99,
            target_sync_interval: 200,
            eval_interval: 100,
            eval_episodes: 100,
            agent_lr: 0.005,
            critic_lr: 0.01,
            mc_samples: 5,
            credit_strategy: CreditStrategy::ShapleyMc { samples: 5 },
            seed: 0,
            hidden_units: 64,
            greedy_bootstrap: false,
        }
    }
}

impl Hyperparams {
    /// Per-episode exploration decrement.
    pub fn sigma(&self) -> f64 {
        (self.epsilon_start - self.epsilon_end) / self.exploration_episodes as f64
    }

    pub fn validate(&self) -> Result<(), TrainerError> {
        let bad = |field: &'static str, reason: &str| {
            Err(TrainerError::InvalidHyperparam {
                field,
                reason: reason.to_string(),
            })
        };
        if self.epsilon_end > self.epsilon_start {
            return bad("epsilon_end", "must not exceed epsilon_start");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1]");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be positive");
        }
        if self.buffer_capacity == 0 {
            return bad("buffer_capacity", "must be positive");
        }
        if self.exploration_episodes == 0 {
            return bad("exploration_episodes", "must be positive");
        }
        if self.target_sync_interval == 0 {
            return bad("target_sync_interval", "must be positive");
        }
        if self.eval_interval == 0 {
            return bad("eval_interval", "must be positive");
        }
        if self.eval_episodes == 0 {
            return bad("eval_episodes", "must be positive");
        }
        if self.mc_samples == 0 {
            return bad("mc_samples", "must be positive");
        }
        if self.hidden_units == 0 {
            return bad("hidden_units", "must be positive");
        }
        if self.agent_lr <= 0.0 {
            return bad("agent_lr", "must be positive");
        }
        if self.critic_lr <= 0.0 {
            return bad("critic_lr", "must be positive");
        }
        Ok(())
    }
}

/// Exploration rate for a training episode index.
pub fn epsilon(episode: usize, hp: &Hyperparams) -> f64 {
    (hp.epsilon_start - episode as f64 * hp.sigma()).max(0.0)
}

/// Greedy action with lowest-id tie-break.
pub fn greedy_action(q_values: &[f64]) -> usize {
    let mut best = 0;
    for (a, &q) in q_values.iter().enumerate().skip(1) {
        if q > q_values[best] {
            best = a;
        }
    }
    best
}

/// One metrics row, emitted per evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub episode: usize,
    pub eval_return: f64,
    pub success_rate: f64,
    pub epsilon: f64,
    pub critic_loss: f64,
    pub agent_loss: f64,
    pub credit_mean: f64,
    pub credit_std: f64,
}

/// Rolls out one epsilon-greedy episode, recording everything needed for
/// exact replay: observations, critic-side observations, per-agent recurrent
/// snapshots, actions, rewards, and the terminal flag.
pub fn run_episode(
    agents: &[AgentNet],
    env: &mut dyn DecPomdpEnv,
    epsilon: f64,
    rng: &mut StdRng,
) -> Result<Episode, TrainerError> {
    let spec = env.spec().clone();
    let mut current = env.reset(rng);
    let mut hidden: Vec<_> = agents.iter().map(|a| a.zero_state()).collect();
    let mut episode = Episode::default();

    for _ in 0..spec.episode_limit {
        let mut actions = Vec::with_capacity(spec.n_agents);
        let mut next_hidden = Vec::with_capacity(spec.n_agents);
        for (i, agent) in agents.iter().enumerate() {
            let (q, h_next) = agent.forward(&current.observations[i], &hidden[i])?;
            let action = if rng.gen::<f64>() < epsilon {
                rng.gen_range(0..spec.action_space_size)
            } else {
                greedy_action(&q)
            };
            actions.push(action);
            next_hidden.push(h_next);
        }
        let action = JointAction::new(actions);
        let result = env.step(&action)?;

        episode.steps.push(EpisodeStep {
            observations: current.observations.clone(),
            critic_observations: (0..spec.n_agents)
                .map(|i| current.state_slice(&spec, i).to_vec())
                .collect(),
            hidden_snapshots: hidden.clone(),
            action,
            reward: result.reward,
            done: result.done,
        });

        hidden = next_hidden;
        current = result;
        if current.done {
            break;
        }
    }
    Ok(episode)
}

/// Replays the agents greedily over an episode's recorded observations and
/// returns the greedy joint action per step (used by the greedy-bootstrap
/// TD variant).
fn greedy_actions_per_step(
    agents: &[AgentNet],
    episode: &Episode,
) -> Result<Vec<Vec<usize>>, TrainerError> {
    let mut hidden: Vec<_> = agents.iter().map(|a| a.zero_state()).collect();
    let mut out = Vec::with_capacity(episode.len());
    for step in &episode.steps {
        let mut per_step = Vec::with_capacity(agents.len());
        for (i, agent) in agents.iter().enumerate() {
            let (q, h_next) = agent.forward(&step.observations[i], &hidden[i])?;
            per_step.push(greedy_action(&q));
            hidden[i] = h_next;
        }
        out.push(per_step);
    }
    Ok(out)
}

/// One TD update of the central critic over a batch of episodes (Stage 1).
///
/// Non-terminal targets bootstrap from the target critic at the next step's
/// recorded joint action (or the greedy one under the config flag); terminal
/// targets are the raw reward. Targets carry no gradient.
pub fn critic_td_update(
    critic: &mut CriticNet,
    target_critic: &CriticNet,
    batch: &[&Episode],
    optimizer: &mut Optimizer,
    agents: &[AgentNet],
    hp: &Hyperparams,
) -> Result<f64, TrainerError> {
    if batch.is_empty() {
        return Err(TrainerError::EmptyBatch);
    }
    let total_steps: usize = batch.iter().map(|e| e.len()).sum();
    let mut grads = critic.params().zeros_like();
    let mut loss = 0.0;

    for episode in batch {
        let greedy_next = if hp.greedy_bootstrap {
            Some(greedy_actions_per_step(agents, episode)?)
        } else {
            None
        };
        for (t, step) in episode.steps.iter().enumerate() {
            let enc: Vec<Vec<f64>> = step
                .action
                .actions
                .iter()
                .map(|&a| one_hot(a, critic.config().act_dim))
                .collect();
            let trace = critic.forward_traced(&step.critic_observations, &enc)?;
            let target = if t + 1 < episode.len() {
                let next = &episode.steps[t + 1];
                let next_actions: &[usize] = match &greedy_next {
                    Some(g) => &g[t + 1],
                    None => &next.action.actions,
                };
                let next_enc: Vec<Vec<f64>> = next_actions
                    .iter()
                    .map(|&a| one_hot(a, critic.config().act_dim))
                    .collect();
                let bootstrap = target_critic.forward(&next.critic_observations, &next_enc)?;
                step.reward + hp.gamma * bootstrap
            } else {
                step.reward
            };
            let diff = trace.output - target;
            loss += diff * diff;
            critic.backward_into(&trace, 2.0 * diff / total_steps as f64, &mut grads)?;
        }
    }

    optimizer.step(critic.params_mut(), &grads)?;
    Ok(loss / total_steps as f64)
}

/// Resets the target critic to the live critic every `C` episodes.
pub fn sync_target(
    critic: &CriticNet,
    target_critic: &mut CriticNet,
    episode_index: usize,
    hp: &Hyperparams,
) -> Result<bool, TrainerError> {
    if episode_index % hp.target_sync_interval == 0 {
        target_critic.set_params(critic.params())?;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Credit statistics accumulated during agent updates.
#[derive(Debug, Clone, Copy, Default)]
pub struct CreditStats {
    pub count: usize,
    sum: f64,
    sum_sq: f64,
}

impl CreditStats {
    pub fn record(&mut self, value: f64) {
        self.count += 1;
        self.sum += value;
        self.sum_sq += value * value;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn std(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let mean = self.mean();
        (self.sum_sq / self.count as f64 - mean * mean).max(0.0).sqrt()
    }

    pub fn merge(&mut self, other: &CreditStats) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }
}

/// One credit-regression update of every agent (Stage 2).
///
/// Credits are computed per step from the freshly updated critic under the
/// configured strategy and treated as constants; each agent replays the
/// episode recurrence from the zero initial state and regresses its taken
/// action's value onto its credit.
pub fn agent_update(
    agents: &mut [AgentNet],
    critic: &CriticNet,
    batch: &[&Episode],
    optimizers: &mut [Optimizer],
    hp: &Hyperparams,
    rng: &mut StdRng,
) -> Result<(f64, CreditStats), TrainerError> {
    if batch.is_empty() {
        return Err(TrainerError::EmptyBatch);
    }
    let n_agents = agents.len();
    let total_steps: usize = batch.iter().map(|e| e.len()).sum();
    let count = (n_agents * total_steps) as f64;
    let mut stats = CreditStats::default();

    // Stage 2a: per-step credits, shared by all agents.
    let mut credits: Vec<Vec<Vec<f64>>> = Vec::with_capacity(batch.len());
    for episode in batch {
        let mut per_episode = Vec::with_capacity(episode.len());
        for step in &episode.steps {
            let enc: Vec<Vec<f64>> = step
                .action
                .actions
                .iter()
                .map(|&a| one_hot(a, critic.config().act_dim))
                .collect();
            let game = CounterfactualGame::new(critic, &step.critic_observations, enc);
            let credit = compute_credits(&game, hp.credit_strategy, rng)?;
            for &c in &credit.credits {
                stats.record(c);
            }
            per_episode.push(credit.credits);
        }
        credits.push(per_episode);
    }

    // Stage 2b: per-agent regression toward the credits.
    let mut loss = 0.0;
    for (i, agent) in agents.iter_mut().enumerate() {
        let mut grads = agent.params().zeros_like();
        for (e, episode) in batch.iter().enumerate() {
            let mut unroll = agent.begin_unroll();
            let mut upstream = Vec::with_capacity(episode.len());
            for (t, step) in episode.steps.iter().enumerate() {
                let q = agent.forward_recorded(&mut unroll, &step.observations[i])?;
                let taken = step.action.actions[i];
                let diff = q[taken] - credits[e][t][i];
                loss += diff * diff;
                let mut dq = vec![0.0; q.len()];
                dq[taken] = 2.0 * diff / count;
                upstream.push(dq);
            }
            agent.backward_into(&unroll, &upstream, &mut grads)?;
        }
        optimizers[i].step(agent.params_mut(), &grads)?;
    }

    Ok((loss / count, stats))
}

/// Greedy evaluation: `episodes` rollouts at epsilon = 0; returns the mean
/// undiscounted return and the success fraction.
pub fn evaluate(
    agents: &[AgentNet],
    env: &mut dyn DecPomdpEnv,
    episodes: usize,
    rng: &mut StdRng,
) -> Result<(f64, f64), TrainerError> {
    if episodes == 0 {
        return Err(TrainerError::EmptyEvaluation);
    }
    let mut total_return = 0.0;
    let mut successes = 0usize;
    for _ in 0..episodes {
        let episode = run_episode(agents, env, 0.0, rng)?;
        total_return += episode.total_reward();
        if env.succeeded() {
            successes += 1;
        }
    }
    Ok((
        total_return / episodes as f64,
        successes as f64 / episodes as f64,
    ))
}

fn one_hot(action: usize, width: usize) -> Vec<f64> {
    let mut enc = vec![0.0; width];
    enc[action] = 1.0;
    enc
}

/// Owns the networks, optimizers, buffer, and rng streams of one run.
pub struct Trainer {
    hp: Hyperparams,
    env: Box<dyn DecPomdpEnv>,
    eval_env: Box<dyn DecPomdpEnv>,
    pub critic: CriticNet,
    pub target_critic: CriticNet,
    pub agents: Vec<AgentNet>,
    critic_opt: Optimizer,
    agent_opts: Vec<Optimizer>,
    buffer: ReplayBuffer,
    rng: StdRng,
    eval_rng: StdRng,
    /// Incremented on every critic optimizer step.
    critic_version: u64,
    /// Critic version visible to the most recent credit computation.
    last_credit_version: u64,
}

impl Trainer {
    /// Builds a run from an environment factory; the factory is invoked
    /// twice (training and evaluation instances must not be shared).
    pub fn new<F>(env_factory: F, hp: Hyperparams) -> Result<Self, TrainerError>
    where
        F: Fn() -> Box<dyn DecPomdpEnv>,
    {
        hp.validate()?;
        let env = env_factory();
        let eval_env = env_factory();
        let spec = env.spec().clone();

        let mut rng = StdRng::seed_from_u64(hp.seed);
        let eval_rng = StdRng::seed_from_u64(hp.seed ^ 0x5eed_0e7a);

        let critic_cfg = CriticConfig {
            n_agents: spec.n_agents,
            obs_dim: spec.state_dim,
            act_dim: spec.action_space_size,
            hidden: hp.hidden_units,
            head_hidden: hp.hidden_units,
            groups: spec.groups.clone(),
        };
        let mut critic = CriticNet::new(critic_cfg.clone())?;
        critic.init(&mut rng);
        let mut target_critic = CriticNet::new(critic_cfg)?;
        target_critic.set_params(critic.params())?;

        let mut agents = Vec::with_capacity(spec.n_agents);
        for _ in 0..spec.n_agents {
            let mut agent = AgentNet::new(AgentConfig {
                obs_dim: spec.obs_dim,
                n_actions: spec.action_space_size,
                hidden: hp.hidden_units,
            });
            agent.init(&mut rng);
            agents.push(agent);
        }

        let critic_opt = Optimizer::new(OptimizerKind::AdamStyle, hp.critic_lr, critic.params().len());
        let agent_opts = agents
            .iter()
            .map(|a| Optimizer::new(OptimizerKind::RmsPropStyle, hp.agent_lr, a.params().len()))
            .collect();
        let buffer = ReplayBuffer::new(hp.buffer_capacity);

        Ok(Trainer {
            hp,
            env,
            eval_env,
            critic,
            target_critic,
            agents,
            critic_opt,
            agent_opts,
            buffer,
            rng,
            eval_rng,
            critic_version: 0,
            last_credit_version: 0,
        })
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn critic_version(&self) -> u64 {
        self.critic_version
    }

    pub fn last_credit_version(&self) -> u64 {
        self.last_credit_version
    }

    fn evaluate_now(&mut self) -> Result<(f64, f64), TrainerError> {
        evaluate(
            &self.agents,
            self.eval_env.as_mut(),
            self.hp.eval_episodes,
            &mut self.eval_rng,
        )
    }

    /// One collect-and-update iteration; returns the losses when the buffer
    /// produced a batch.
    fn iteration(&mut self, episode_index: usize) -> Result<(f64, f64, CreditStats), TrainerError> {
        let eps = epsilon(episode_index, &self.hp);
        let episode = run_episode(&self.agents, self.env.as_mut(), eps, &mut self.rng)?;
        self.buffer.push(episode);

        let indices = self.buffer.sample_indices(self.hp.batch_size, &mut self.rng);
        let batch: Vec<&Episode> = indices.iter().map(|&k| self.buffer.get(k)).collect();

        let critic_loss = critic_td_update(
            &mut self.critic,
            &self.target_critic,
            &batch,
            &mut self.critic_opt,
            &self.agents,
            &self.hp,
        )?;
        self.critic_version += 1;
        sync_target(
            &self.critic,
            &mut self.target_critic,
            episode_index + 1,
            &self.hp,
        )?;
        self.last_credit_version = self.critic_version;
        let (agent_loss, stats) = agent_update(
            &mut self.agents,
            &self.critic,
            &batch,
            &mut self.agent_opts,
            &self.hp,
            &mut self.rng,
        )?;
        Ok((critic_loss, agent_loss, stats))
    }

    /// Runs the full loop, forwarding each metrics record (plus a view of
    /// the trainer, e.g. for checkpointing) to `on_record`; returning
    /// `false` stops training early. The stream always begins with an
    /// initial evaluation record at episode 0.
    pub fn run_with<F>(&mut self, mut on_record: F) -> Result<Vec<MetricsRecord>, TrainerError>
    where
        F: FnMut(&MetricsRecord, &Trainer) -> bool,
    {
        let mut records = Vec::new();
        let (eval_return, success_rate) = self.evaluate_now()?;
        let initial = MetricsRecord {
            episode: 0,
            eval_return,
            success_rate,
            epsilon: epsilon(0, &self.hp),
            critic_loss: 0.0,
            agent_loss: 0.0,
            credit_mean: 0.0,
            credit_std: 0.0,
        };
        let keep_going = on_record(&initial, self);
        records.push(initial);
        if !keep_going {
            return Ok(records);
        }

        let mut critic_loss_sum = 0.0;
        let mut agent_loss_sum = 0.0;
        let mut loss_count = 0usize;
        let mut stats_acc = CreditStats::default();

        for episode_index in 0..self.hp.training_episodes {
            let (critic_loss, agent_loss, stats) = self.iteration(episode_index)?;
            critic_loss_sum += critic_loss;
            agent_loss_sum += agent_loss;
            loss_count += 1;
            stats_acc.merge(&stats);

            let episode_number = episode_index + 1;
            if episode_number % self.hp.eval_interval == 0 {
                let (eval_return, success_rate) = self.evaluate_now()?;
                let record = MetricsRecord {
                    episode: episode_number,
                    eval_return,
                    success_rate,
                    epsilon: epsilon(episode_number, &self.hp),
                    critic_loss: critic_loss_sum / loss_count as f64,
                    agent_loss: agent_loss_sum / loss_count as f64,
                    credit_mean: stats_acc.mean(),
                    credit_std: stats_acc.std(),
                };
                let keep_going = on_record(&record, self);
                records.push(record);
                critic_loss_sum = 0.0;
                agent_loss_sum = 0.0;
                loss_count = 0;
                stats_acc = CreditStats::default();
                if !keep_going {
                    break;
                }
            }
        }
        Ok(records)
    }

    /// Runs the full loop to completion.
    pub fn run(&mut self) -> Result<Vec<MetricsRecord>, TrainerError> {
        self.run_with(|_, _| true)
    }
}
