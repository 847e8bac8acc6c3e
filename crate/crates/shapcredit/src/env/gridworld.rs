//! Cooperative target-occupancy gridworld with limited sight.

use rand::rngs::StdRng;

use super::{DecPomdpEnv, DecPomdpSpec, EnvError, JointAction, StepResult};

/// Actions: up, down, left, right, no-op.
pub const GRID_ACTIONS: usize = 5;

/// Cell codes before normalization; observations divide by the maximum.
const CODE_OUT_OF_BOUNDS: f64 = 1.0;
const CODE_TARGET: f64 = 2.0;
const CODE_AGENT: f64 = 3.0;
const CODE_AGENT_ON_TARGET: f64 = 4.0;
const CODE_MAX: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct GridworldConfig {
    pub width: usize,
    pub height: usize,
    /// Fixed start cell per agent.
    pub starts: Vec<(usize, usize)>,
    pub targets: Vec<(usize, usize)>,
    /// Reward +1 on every step in which at least this many distinct target
    /// cells are occupied.
    pub required_occupancy: usize,
    pub sight_radius: usize,
    pub episode_limit: usize,
    /// Added every step; 0 for audits, a small negative value to sharpen
    /// desk-scale learning curves.
    pub step_penalty: f64,
    pub gamma: f64,
}

impl GridworldConfig {
    /// The 3-agent switch room shipped as a preset: three agents one move
    /// away from three switch cells, reward while all three switches are
    /// held simultaneously.
    pub fn switch3() -> Self {
        GridworldConfig {
            width: 3,
            height: 3,
            starts: vec![(0, 0), (2, 0), (0, 2)],
            targets: vec![(1, 0), (0, 1), (1, 1)],
            required_occupancy: 3,
            sight_radius: 1,
            episode_limit: 15,
            step_penalty: 0.0,
            gamma: 0.99,
        }
    }
}

/// Agents move on a rectangular grid; moving into the boundary leaves the
/// agent in place. All moves are simultaneous and cells may be shared; the
/// occupancy condition counts distinct target cells that hold an agent.
pub struct TeamGridworld {
    cfg: GridworldConfig,
    spec: DecPomdpSpec,
    positions: Vec<(usize, usize)>,
    steps_taken: usize,
    done: bool,
    succeeded: bool,
}

impl TeamGridworld {
    pub fn new(cfg: GridworldConfig) -> Self {
        let n = cfg.starts.len();
        assert!(n >= 1, "at least one agent start required");
        assert!(!cfg.targets.is_empty());
        assert!(cfg.required_occupancy >= 1 && cfg.required_occupancy <= cfg.targets.len());
        for &(x, y) in cfg.starts.iter().chain(&cfg.targets) {
            assert!(x < cfg.width && y < cfg.height, "cell ({x},{y}) outside grid");
        }
        let window = 2 * cfg.sight_radius + 1;
        let obs_dim = window * window + 2;
        let state_dim = cfg.width * cfg.height + 2;
        let spec = DecPomdpSpec::new(
            n,
            GRID_ACTIONS,
            obs_dim,
            state_dim,
            cfg.episode_limit,
            cfg.gamma,
            vec![0; n],
        );
        let positions = cfg.starts.clone();
        TeamGridworld {
            cfg,
            spec,
            positions,
            steps_taken: 0,
            done: false,
            succeeded: false,
        }
    }

    pub fn config(&self) -> &GridworldConfig {
        &self.cfg
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    fn cell_code(&self, x: isize, y: isize, viewer: usize) -> f64 {
        if x < 0 || y < 0 || x >= self.cfg.width as isize || y >= self.cfg.height as isize {
            return CODE_OUT_OF_BOUNDS;
        }
        let cell = (x as usize, y as usize);
        let occupied = self
            .positions
            .iter()
            .enumerate()
            .any(|(i, &p)| i != viewer && p == cell);
        let target = self.cfg.targets.contains(&cell);
        match (occupied, target) {
            (true, true) => CODE_AGENT_ON_TARGET,
            (true, false) => CODE_AGENT,
            (false, true) => CODE_TARGET,
            (false, false) => 0.0,
        }
    }

    fn observe(&self, agent: usize) -> Vec<f64> {
        let r = self.cfg.sight_radius as isize;
        let (ax, ay) = self.positions[agent];
        let mut obs = Vec::with_capacity(self.spec.obs_dim);
        for dy in -r..=r {
            for dx in -r..=r {
                let code = self.cell_code(ax as isize + dx, ay as isize + dy, agent);
                obs.push(code / CODE_MAX);
            }
        }
        obs.push(Self::norm_coord(ax, self.cfg.width));
        obs.push(Self::norm_coord(ay, self.cfg.height));
        obs
    }

    /// Sight-unrestricted observation: the full grid plus own position.
    fn observe_unrestricted(&self, agent: usize) -> Vec<f64> {
        let mut obs = Vec::with_capacity(self.spec.state_dim);
        for y in 0..self.cfg.height {
            for x in 0..self.cfg.width {
                obs.push(self.cell_code(x as isize, y as isize, agent) / CODE_MAX);
            }
        }
        let (ax, ay) = self.positions[agent];
        obs.push(Self::norm_coord(ax, self.cfg.width));
        obs.push(Self::norm_coord(ay, self.cfg.height));
        obs
    }

    fn norm_coord(v: usize, extent: usize) -> f64 {
        if extent <= 1 {
            0.0
        } else {
            v as f64 / (extent - 1) as f64
        }
    }

    fn snapshot(&self, reward: f64, done: bool) -> StepResult {
        let observations = (0..self.spec.n_agents).map(|i| self.observe(i)).collect();
        let mut global_state = Vec::with_capacity(self.spec.n_agents * self.spec.state_dim);
        for i in 0..self.spec.n_agents {
            global_state.extend(self.observe_unrestricted(i));
        }
        StepResult {
            observations,
            reward,
            done,
            global_state,
        }
    }

    fn occupancy_met(&self) -> bool {
        let occupied = self
            .cfg
            .targets
            .iter()
            .filter(|t| self.positions.contains(t))
            .count();
        occupied >= self.cfg.required_occupancy
    }

    /// Fewest steps until the occupancy condition can first hold: the best
    /// assignment of agents to distinct targets by Manhattan distance.
    fn min_steps_to_occupancy(&self) -> Option<usize> {
        let n = self.spec.n_agents;
        let m = self.cfg.required_occupancy;
        if m > n {
            return None;
        }
        fn assign(
            starts: &[(usize, usize)],
            targets: &[(usize, usize)],
            used_agents: &mut Vec<bool>,
            remaining: usize,
            target_idx: usize,
            current_max: usize,
            chosen_targets: &mut Vec<usize>,
            best: &mut Option<usize>,
        ) {
            if remaining == 0 {
                *best = Some(best.map_or(current_max, |b: usize| b.min(current_max)));
                return;
            }
            if target_idx >= targets.len() {
                return;
            }
            // Skip this target.
            assign(
                starts,
                targets,
                used_agents,
                remaining,
                target_idx + 1,
                current_max,
                chosen_targets,
                best,
            );
            // Or hand it to any unused agent.
            for a in 0..starts.len() {
                if used_agents[a] {
                    continue;
                }
                let d = starts[a].0.abs_diff(targets[target_idx].0)
                    + starts[a].1.abs_diff(targets[target_idx].1);
                used_agents[a] = true;
                assign(
                    starts,
                    targets,
                    used_agents,
                    remaining - 1,
                    target_idx + 1,
                    current_max.max(d),
                    chosen_targets,
                    best,
                );
                used_agents[a] = false;
            }
        }
        let mut best = None;
        assign(
            &self.cfg.starts,
            &self.cfg.targets,
            &mut vec![false; n],
            m,
            0,
            0,
            &mut Vec::new(),
            &mut best,
        );
        best
    }
}

impl DecPomdpEnv for TeamGridworld {
    fn spec(&self) -> &DecPomdpSpec {
        &self.spec
    }

    fn reset(&mut self, _rng: &mut StdRng) -> StepResult {
        self.positions = self.cfg.starts.clone();
        self.steps_taken = 0;
        self.done = false;
        self.succeeded = false;
        self.snapshot(0.0, false)
    }

    fn step(&mut self, action: &JointAction) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        action.validate(&self.spec)?;
        for (agent, &a) in action.actions.iter().enumerate() {
            let (x, y) = self.positions[agent];
            let (nx, ny) = match a {
                0 => (x as isize, y as isize - 1),
                1 => (x as isize, y as isize + 1),
                2 => (x as isize - 1, y as isize),
                3 => (x as isize + 1, y as isize),
                _ => (x as isize, y as isize),
            };
            // Moves into the boundary leave the agent in place.
            if nx >= 0 && ny >= 0 && nx < self.cfg.width as isize && ny < self.cfg.height as isize {
                self.positions[agent] = (nx as usize, ny as usize);
            }
        }
        self.steps_taken += 1;
        let mut reward = self.cfg.step_penalty;
        if self.occupancy_met() {
            reward += 1.0;
            self.succeeded = true;
        }
        self.done = self.steps_taken >= self.cfg.episode_limit;
        Ok(self.snapshot(reward, self.done))
    }

    fn succeeded(&self) -> bool {
        self.succeeded
    }

    fn optimal_return(&self) -> Option<f64> {
        let t_star = self.min_steps_to_occupancy()?;
        let limit = self.cfg.episode_limit;
        let first_reward_step = t_star.max(1);
        let reward_steps = if first_reward_step > limit {
            0
        } else {
            limit - first_reward_step + 1
        };
        Some(reward_steps as f64 + limit as f64 * self.cfg.step_penalty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn small() -> TeamGridworld {
        TeamGridworld::new(GridworldConfig::switch3())
    }

    #[test]
    fn reset_is_deterministic_under_fixed_seed() {
        let mut env = small();
        let mut rng = StdRng::seed_from_u64(7);
        let a = env.reset(&mut rng);
        let mut rng = StdRng::seed_from_u64(7);
        let b = env.reset(&mut rng);
        assert_eq!(a.observations, b.observations);
        assert_eq!(a.global_state, b.global_state);
    }

    #[test]
    fn blocked_moves_keep_the_agent_in_place() {
        let mut env = small();
        let mut rng = StdRng::seed_from_u64(0);
        env.reset(&mut rng);
        // Agent 0 starts at (0,0); moving up and left is blocked.
        env.step(&JointAction::new(vec![0, 4, 4])).unwrap();
        assert_eq!(env.positions()[0], (0, 0));
        env.step(&JointAction::new(vec![2, 4, 4])).unwrap();
        assert_eq!(env.positions()[0], (0, 0));
        env.step(&JointAction::new(vec![3, 4, 4])).unwrap();
        assert_eq!(env.positions()[0], (1, 0));
    }

    #[test]
    fn reward_fires_only_on_full_occupancy() {
        // Targets are (1,0), (0,1), (1,1). Park two agents, then the third.
        let mut cfg = GridworldConfig::switch3();
        cfg.starts = vec![(1, 0), (0, 1), (2, 1)];
        let mut env = TeamGridworld::new(cfg);
        let mut rng = StdRng::seed_from_u64(0);
        env.reset(&mut rng);
        // Two agents already on targets, third adrift: no reward.
        let r = env.step(&JointAction::new(vec![4, 4, 4])).unwrap();
        assert_eq!(r.reward, 0.0);
        assert!(!env.succeeded());
        // Third agent steps left onto (1,1): all three targets held.
        let r = env.step(&JointAction::new(vec![4, 4, 2])).unwrap();
        assert_eq!(r.reward, 1.0);
        assert!(env.succeeded());
        // Stacking two agents on one target breaks distinctness.
        let r = env.step(&JointAction::new(vec![1, 4, 4])).unwrap();
        assert_eq!(r.reward, 0.0);
    }

    #[test]
    fn episode_terminates_at_the_limit() {
        let mut env = small();
        let mut rng = StdRng::seed_from_u64(0);
        env.reset(&mut rng);
        let limit = env.spec().episode_limit;
        for t in 1..=limit {
            let r = env.step(&JointAction::new(vec![4, 4, 4])).unwrap();
            assert_eq!(r.done, t == limit);
        }
        assert!(env.step(&JointAction::new(vec![4, 4, 4])).is_err());
    }

    #[test]
    fn observation_dimensions_match_spec() {
        let mut env = small();
        let mut rng = StdRng::seed_from_u64(0);
        let r = env.reset(&mut rng);
        let spec = env.spec();
        assert_eq!(r.observations.len(), spec.n_agents);
        for o in &r.observations {
            assert_eq!(o.len(), spec.obs_dim);
        }
        assert_eq!(r.global_state.len(), spec.n_agents * spec.state_dim);
        // Everything normalized into [0, 1].
        for v in r.observations.iter().flatten().chain(&r.global_state) {
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn neighbouring_agents_are_visible_in_the_window() {
        let mut cfg = GridworldConfig::switch3();
        cfg.starts = vec![(1, 1), (2, 1), (0, 2)];
        let mut env = TeamGridworld::new(cfg);
        let mut rng = StdRng::seed_from_u64(0);
        let r = env.reset(&mut rng);
        // Agent 0 at (1,1) sees agent 1 at (2,1) in the window's
        // center-right cell, and (0,1) below-left holds a bare target.
        let window = 3;
        let obs = &r.observations[0];
        let center_right = window + 2;
        assert_eq!(obs[center_right], CODE_AGENT / CODE_MAX);
        let below_left = 2 * window;
        assert_eq!(obs[below_left], CODE_TARGET / CODE_MAX);
    }

    #[test]
    fn optimal_return_matches_hand_count() {
        // switch3: starts (0,0),(2,0),(0,2); targets (1,0),(0,1),(1,1).
        // The best assignment has distances (1,1,2), so occupancy holds
        // from step 2 through 15: 14 reward steps.
        let env = small();
        assert_eq!(env.optimal_return(), Some(14.0));

        let mut cfg = GridworldConfig::switch3();
        cfg.step_penalty = -0.01;
        let env = TeamGridworld::new(cfg);
        let expected = 14.0 + 15.0 * -0.01;
        assert!((env.optimal_return().unwrap() - expected).abs() < 1e-12);

        // Starting on the targets: reward every step.
        let mut cfg = GridworldConfig::switch3();
        cfg.starts = cfg.targets.clone();
        let env = TeamGridworld::new(cfg);
        assert_eq!(env.optimal_return(), Some(15.0));
    }
}
