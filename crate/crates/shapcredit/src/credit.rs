//! Counterfactual credit assignment over a frozen critic snapshot.
//!
//! One time step's observations and taken actions define a cooperative game:
//! the worth of a coalition is how much the critic's joint value drops when
//! the coalition's action encodings are replaced by the default encoding.
//! Shapley values of that game are the per-agent credits.

use std::cell::{Cell, RefCell};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::game::{
    exact_shapley, mc_shapley, CharacteristicFn, Coalition, GameError,
};
use crate::nn::CriticNet;

/// How a [`CreditVector`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CreditStrategy {
    ShapleyMc { samples: usize },
    ShapleyExact,
    PlainCounterfactual,
    Uniform,
}

impl std::fmt::Display for CreditStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CreditStrategy::ShapleyMc { samples } => write!(f, "shapley_mc({samples})"),
            CreditStrategy::ShapleyExact => write!(f, "shapley_exact"),
            CreditStrategy::PlainCounterfactual => write!(f, "plain_cf"),
            CreditStrategy::Uniform => write!(f, "uniform"),
        }
    }
}

/// Per-agent credits in joint-value units.
#[derive(Debug, Clone)]
pub struct CreditVector {
    pub credits: Vec<f64>,
    pub strategy: CreditStrategy,
}

/// The per-step counterfactual game `w(S) = f(H_A) - f(H with S masked)`.
///
/// `f(H_A)` is evaluated once at construction; `w(empty) = 0` exactly. The
/// critic must stay frozen for the lifetime of the game.
pub struct CounterfactualGame<'a> {
    critic: &'a CriticNet,
    obs: &'a [Vec<f64>],
    taken: Vec<Vec<f64>>,
    baseline: Vec<f64>,
    grand: f64,
    evaluations: Cell<usize>,
    scratch: RefCell<Vec<Vec<f64>>>,
}

impl<'a> CounterfactualGame<'a> {
    /// `obs` are the critic-side observations and `taken` the one-hot
    /// encodings of the actions actually taken at this step.
    pub fn new(critic: &'a CriticNet, obs: &'a [Vec<f64>], taken: Vec<Vec<f64>>) -> Self {
        let baseline = vec![0.0; critic.config().act_dim];
        let grand = critic
            .forward(obs, &taken)
            .expect("counterfactual game inputs must match the critic");
        let scratch = RefCell::new(taken.clone());
        CounterfactualGame {
            critic,
            obs,
            taken,
            baseline,
            grand,
            evaluations: Cell::new(1),
            scratch,
        }
    }

    /// Cached joint value of the unmasked step, `f(H_A)`.
    pub fn grand_value(&self) -> f64 {
        self.grand
    }

    /// Critic forward passes performed so far (the cached grand value
    /// counts once).
    pub fn critic_evaluations(&self) -> usize {
        self.evaluations.get()
    }
}

impl CharacteristicFn for CounterfactualGame<'_> {
    fn player_count(&self) -> usize {
        self.critic.config().n_agents
    }

    fn eval(&self, coalition: Coalition) -> f64 {
        if coalition.is_empty() {
            return 0.0;
        }
        let mut masked = self.scratch.borrow_mut();
        for (agent, slot) in masked.iter_mut().enumerate() {
            if coalition.contains(agent) {
                slot.copy_from_slice(&self.baseline);
            } else {
                slot.copy_from_slice(&self.taken[agent]);
            }
        }
        let value = self
            .critic
            .forward(self.obs, &masked)
            .expect("masked inputs keep the critic shapes");
        self.evaluations.set(self.evaluations.get() + 1);
        self.grand - value
    }
}

fn check_player_count(game: &CounterfactualGame<'_>, coalition: Coalition) -> Result<(), GameError> {
    if coalition.player_count() != game.player_count() {
        return Err(GameError::PlayerCountMismatch {
            left: game.player_count(),
            right: coalition.player_count(),
        });
    }
    Ok(())
}

/// Contribution of the coalition `S`: `f(H_A) - f(H with S masked)`.
pub fn coalition_contribution(
    game: &CounterfactualGame<'_>,
    coalition: Coalition,
) -> Result<f64, GameError> {
    check_player_count(game, coalition)?;
    Ok(game.eval(coalition))
}

/// Marginal credit of `agent` inside `S`: `w(S) - w(S \ {agent})`.
pub fn marginal_credit(
    game: &CounterfactualGame<'_>,
    agent: usize,
    coalition: Coalition,
) -> Result<f64, GameError> {
    check_player_count(game, coalition)?;
    crate::game::marginal_contribution(game, agent, coalition)
}

/// Exact Shapley credits of the counterfactual game.
pub fn shapley_credits_exact(game: &CounterfactualGame<'_>) -> Result<CreditVector, GameError> {
    let result = exact_shapley(game)?;
    Ok(CreditVector {
        credits: result.values,
        strategy: CreditStrategy::ShapleyExact,
    })
}

/// Monte Carlo Shapley credits with `samples` coalitions drawn independently
/// per agent; draw fresh per step.
pub fn shapley_credits_mc<R: Rng>(
    game: &CounterfactualGame<'_>,
    samples: usize,
    rng: &mut R,
) -> Result<CreditVector, GameError> {
    let result = mc_shapley(game, samples, rng)?;
    Ok(CreditVector {
        credits: result.values,
        strategy: CreditStrategy::ShapleyMc { samples },
    })
}

/// Plain per-agent counterfactual: each agent's singleton contribution.
pub fn plain_counterfactual_credits(game: &CounterfactualGame<'_>) -> CreditVector {
    let n = game.player_count();
    let credits = (0..n)
        .map(|i| game.eval(Coalition::from_members(n, &[i]).unwrap()))
        .collect();
    CreditVector {
        credits,
        strategy: CreditStrategy::PlainCounterfactual,
    }
}

/// Control baseline: the joint value split evenly.
pub fn uniform_credits(game: &CounterfactualGame<'_>) -> CreditVector {
    let n = game.player_count();
    let share = game.grand_value() / n as f64;
    CreditVector {
        credits: vec![share; n],
        strategy: CreditStrategy::Uniform,
    }
}

/// Computes credits under the requested strategy.
pub fn compute_credits<R: Rng>(
    game: &CounterfactualGame<'_>,
    strategy: CreditStrategy,
    rng: &mut R,
) -> Result<CreditVector, GameError> {
    match strategy {
        CreditStrategy::ShapleyMc { samples } => shapley_credits_mc(game, samples, rng),
        CreditStrategy::ShapleyExact => shapley_credits_exact(game),
        CreditStrategy::PlainCounterfactual => Ok(plain_counterfactual_credits(game)),
        CreditStrategy::Uniform => Ok(uniform_credits(game)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{CriticConfig, CriticNet};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Critic computing `sum_i w_i * enc_i[0]` exactly: pass-through
    /// extractors and a single accumulating head unit, with non-negative
    /// intermediate values so the rectifiers are the identity everywhere.
    fn linear_critic(weights: &[f64]) -> CriticNet {
        let n = weights.len();
        let cfg = CriticConfig {
            n_agents: n,
            obs_dim: 1,
            act_dim: 1,
            hidden: 2,
            head_hidden: 1,
            groups: (0..n).collect(),
        };
        let mut net = CriticNet::new(cfg).unwrap();
        for g in 0..n {
            // First layer: unit 0 reads the encoding input (index 1).
            net.params_mut()
                .segment_mut(&format!("group{g}.w1"))
                .unwrap()[1] = 1.0;
            // Second layer: pass unit 0 through.
            net.params_mut()
                .segment_mut(&format!("group{g}.w2"))
                .unwrap()[0] = 1.0;
        }
        {
            let head = net.params_mut().segment_mut("head.w1").unwrap();
            for (i, &w) in weights.iter().enumerate() {
                head[i * 2] = w;
            }
        }
        net.params_mut().segment_mut("head.w2").unwrap()[0] = 1.0;
        net
    }

    /// Critic computing the product of two binary scalar encodings:
    /// relu(e0 + e1 - 1) equals e0 * e1 on {0,1}^2.
    fn product_critic() -> CriticNet {
        let cfg = CriticConfig {
            n_agents: 2,
            obs_dim: 1,
            act_dim: 1,
            hidden: 1,
            head_hidden: 1,
            groups: vec![0, 0],
        };
        let mut net = CriticNet::new(cfg).unwrap();
        net.params_mut().segment_mut("group0.w1").unwrap()[1] = 1.0;
        net.params_mut().segment_mut("group0.w2").unwrap()[0] = 1.0;
        net.params_mut()
            .segment_mut("head.w1")
            .unwrap()
            .copy_from_slice(&[1.0, 1.0]);
        net.params_mut().segment_mut("head.b1").unwrap()[0] = -1.0;
        net.params_mut().segment_mut("head.w2").unwrap()[0] = 1.0;
        net
    }

    fn random_critic(n: usize, seed: u64) -> (CriticNet, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let cfg = CriticConfig {
            n_agents: n,
            obs_dim: 2,
            act_dim: 3,
            hidden: 6,
            head_hidden: 6,
            groups: vec![0; n],
        };
        let mut net = CriticNet::new(cfg).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        net.init(&mut rng);
        let obs = (0..n)
            .map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let enc = (0..n)
            .map(|_| {
                let mut e = vec![0.0; 3];
                e[rng.gen_range(0..3)] = 1.0;
                e
            })
            .collect();
        (net, obs, enc)
    }

    #[test]
    fn empty_coalition_contributes_exactly_zero() {
        let (net, obs, enc) = random_critic(3, 1);
        let game = CounterfactualGame::new(&net, &obs, enc);
        assert_eq!(
            coalition_contribution(&game, Coalition::empty(3)).unwrap(),
            0.0
        );
    }

    #[test]
    fn masking_is_idempotent_on_baseline_actions() {
        let (net, obs, _) = random_critic(3, 2);
        let baseline_enc = vec![vec![0.0; 3]; 3];
        let game = CounterfactualGame::new(&net, &obs, baseline_enc);
        for c in Coalition::enumerate_all(3) {
            assert_eq!(coalition_contribution(&game, c).unwrap(), 0.0);
        }
    }

    #[test]
    fn linear_critic_contribution_is_the_masked_weight_sum() {
        let net = linear_critic(&[0.5, 1.0, 2.0]);
        let obs = vec![vec![0.0]; 3];
        let enc = vec![vec![1.0]; 3];
        let game = CounterfactualGame::new(&net, &obs, enc);
        assert_eq!(game.grand_value(), 3.5);
        let s = Coalition::from_members(3, &[0, 2]).unwrap();
        assert_eq!(coalition_contribution(&game, s).unwrap(), 2.5);
        let s = Coalition::from_members(3, &[1]).unwrap();
        assert_eq!(coalition_contribution(&game, s).unwrap(), 1.0);
    }

    #[test]
    fn marginal_credit_forms_agree() {
        // The definition subtracts two coalition contributions (each one
        // referencing the grand value); the algebraic identity collapses it
        // to a difference of two masked critic evaluations. Both routes
        // must agree on random critics.
        let (net, obs, enc) = random_critic(4, 3);
        let masked_forward = |coalition: Coalition| -> f64 {
            let masked: Vec<Vec<f64>> = enc
                .iter()
                .enumerate()
                .map(|(a, e)| {
                    if coalition.contains(a) {
                        vec![0.0; e.len()]
                    } else {
                        e.clone()
                    }
                })
                .collect();
            net.forward(&obs, &masked).unwrap()
        };
        let game = CounterfactualGame::new(&net, &obs, enc.clone());
        for c in Coalition::enumerate_all(4) {
            for i in c.members().collect::<Vec<_>>() {
                let three_eval = marginal_credit(&game, i, c).unwrap();
                let two_eval = masked_forward(c.without(i).unwrap()) - masked_forward(c);
                assert!(
                    (three_eval - two_eval).abs() < 1e-12,
                    "{three_eval} vs {two_eval}"
                );
            }
        }
    }

    #[test]
    fn marginal_credit_of_singleton_is_the_contribution() {
        let (net, obs, enc) = random_critic(3, 4);
        let game = CounterfactualGame::new(&net, &obs, enc);
        for i in 0..3 {
            let s = Coalition::from_members(3, &[i]).unwrap();
            assert_eq!(
                marginal_credit(&game, i, s).unwrap(),
                coalition_contribution(&game, s).unwrap()
            );
        }
    }

    #[test]
    fn linear_critic_collapses_all_strategies() {
        let net = linear_critic(&[0.5, 1.0, 2.0]);
        let obs = vec![vec![0.0]; 3];
        let enc = vec![vec![1.0]; 3];
        let game = CounterfactualGame::new(&net, &obs, enc);
        let exact = shapley_credits_exact(&game).unwrap();
        assert_eq!(exact.credits, vec![0.5, 1.0, 2.0]);
        let plain = plain_counterfactual_credits(&game);
        assert_eq!(plain.credits, exact.credits);
        for seed in 0..3 {
            let mut rng = StdRng::seed_from_u64(seed);
            let mc = shapley_credits_mc(&game, 4, &mut rng).unwrap();
            assert_eq!(mc.credits, exact.credits);
        }
    }

    #[test]
    fn all_baseline_actions_produce_zero_credits() {
        let (net, obs, _) = random_critic(3, 5);
        let game = CounterfactualGame::new(&net, &obs, vec![vec![0.0; 3]; 3]);
        let exact = shapley_credits_exact(&game).unwrap();
        assert_eq!(exact.credits, vec![0.0; 3]);
        let plain = plain_counterfactual_credits(&game);
        assert_eq!(plain.credits, vec![0.0; 3]);
    }

    #[test]
    fn exact_credits_satisfy_efficiency() {
        for seed in 0..10 {
            let (net, obs, enc) = random_critic(4, 100 + seed);
            let game = CounterfactualGame::new(&net, &obs, enc);
            let exact = shapley_credits_exact(&game).unwrap();
            let full = game.eval(Coalition::full(4));
            let total: f64 = exact.credits.iter().sum();
            let tol = 1e-9 * (1.0 + game.grand_value().abs());
            assert!((total - full).abs() <= tol, "{total} vs {full}");
        }
    }

    #[test]
    fn exact_credits_match_ordering_oracle_on_random_critic() {
        let (net, obs, enc) = random_critic(3, 6);
        let game = CounterfactualGame::new(&net, &obs, enc);
        let exact = shapley_credits_exact(&game).unwrap();
        // All-orderings oracle over the 3! permutations.
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let mut oracle = vec![0.0; 3];
        for perm in perms {
            let mut prefix = Coalition::empty(3);
            let mut prev = game.eval(prefix);
            for p in perm {
                prefix = prefix.with(p).unwrap();
                let cur = game.eval(prefix);
                oracle[p] += (cur - prev) / 6.0;
                prev = cur;
            }
        }
        for (e, o) in exact.credits.iter().zip(&oracle) {
            assert!((e - o).abs() < 1e-9);
        }
    }

    #[test]
    fn mc_credits_are_deterministic_and_fresh_draws_differ() {
        let (net, obs, enc) = random_critic(4, 7);
        let game = CounterfactualGame::new(&net, &obs, enc);
        let mut rng_a = StdRng::seed_from_u64(11);
        let mut rng_b = StdRng::seed_from_u64(11);
        let a = shapley_credits_mc(&game, 3, &mut rng_a).unwrap();
        let b = shapley_credits_mc(&game, 3, &mut rng_b).unwrap();
        assert_eq!(a.credits, b.credits);
        // The rng steps forward, so a second call on the same stream
        // draws different subsets.
        let c = shapley_credits_mc(&game, 3, &mut rng_a).unwrap();
        assert_ne!(a.credits, c.credits);
    }

    #[test]
    fn mc_respects_the_evaluation_budget() {
        for (n, samples) in [(3usize, 5usize), (5, 2), (6, 8)] {
            let (net, obs, enc) = random_critic(n, 40 + n as u64);
            let game = CounterfactualGame::new(&net, &obs, enc);
            let mut rng = StdRng::seed_from_u64(0);
            shapley_credits_mc(&game, samples, &mut rng).unwrap();
            let budget = 2 * samples * n + 1;
            assert!(
                game.critic_evaluations() <= budget,
                "n={n} M={samples}: {} > {budget}",
                game.critic_evaluations()
            );
        }
    }

    #[test]
    fn mc_means_approach_exact_credits() {
        let (net, obs, enc) = random_critic(5, 8);
        let game = CounterfactualGame::new(&net, &obs, enc);
        let exact = shapley_credits_exact(&game).unwrap();
        let seeds = 20;
        let mut means = vec![0.0; 5];
        for seed in 0..seeds {
            let mut rng = StdRng::seed_from_u64(seed);
            let mc = shapley_credits_mc(&game, 2000, &mut rng).unwrap();
            for (m, c) in means.iter_mut().zip(&mc.credits) {
                *m += c / seeds as f64;
            }
        }
        for (m, e) in means.iter().zip(&exact.credits) {
            assert!((m - e).abs() <= 0.05, "{m} vs {e}");
        }
    }

    #[test]
    fn plain_and_shapley_disagree_on_the_product_critic() {
        // f = e0 * e1 with both encodings taken at 1: masking either agent
        // zeroes the product, so w(empty)=0, w({0})=w({1})=1, w({0,1})=1.
        // Plain counterfactual reads the singletons, [1, 1]; the Shapley
        // split halves the shared unit of value, [0.5, 0.5].
        let net = product_critic();
        let obs = vec![vec![0.0], vec![0.0]];
        let game = CounterfactualGame::new(&net, &obs, vec![vec![1.0], vec![1.0]]);
        assert_eq!(game.eval(Coalition::from_members(2, &[0]).unwrap()), 1.0);
        assert_eq!(game.eval(Coalition::from_members(2, &[1]).unwrap()), 1.0);
        assert_eq!(game.eval(Coalition::full(2)), 1.0);
        let plain = plain_counterfactual_credits(&game);
        assert_eq!(plain.credits, vec![1.0, 1.0]);
        let exact = shapley_credits_exact(&game).unwrap();
        assert_eq!(exact.credits, vec![0.5, 0.5]);
    }

    #[test]
    fn uniform_credits_split_the_grand_value() {
        let net = linear_critic(&[1.0, 1.0, 1.0]);
        let obs = vec![vec![0.0]; 3];
        let game = CounterfactualGame::new(&net, &obs, vec![vec![1.0]; 3]);
        let u = uniform_credits(&game);
        assert_eq!(u.credits, vec![1.0; 3]);
        let total: f64 = u.credits.iter().sum();
        assert_eq!(total, game.grand_value());
    }

    #[test]
    fn masked_agent_with_dead_encoding_gets_zero_exact_credit() {
        // Agent 2's encoding weights are zero, so masking it never moves
        // the critic output.
        let cfg = CriticConfig {
            n_agents: 3,
            obs_dim: 2,
            act_dim: 2,
            hidden: 4,
            head_hidden: 4,
            groups: vec![0, 0, 1],
        };
        let mut net = CriticNet::new(cfg).unwrap();
        let mut rng = StdRng::seed_from_u64(21);
        net.init(&mut rng);
        // Zero the encoding columns of agent 2's (unshared) extractor.
        {
            let w1 = net.params_mut().segment_mut("group1.w1").unwrap();
            // Layout: rows of width obs_dim + act_dim = 4; last 2 columns
            // read the encoding.
            for row in 0..4 {
                w1[row * 4 + 2] = 0.0;
                w1[row * 4 + 3] = 0.0;
            }
        }
        let obs = vec![vec![0.3, -0.4], vec![0.1, 0.9], vec![-0.2, 0.5]];
        let enc = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let game = CounterfactualGame::new(&net, &obs, enc);
        let exact = shapley_credits_exact(&game).unwrap();
        assert!(exact.credits[2].abs() <= 1e-9, "{}", exact.credits[2]);
        assert!(exact.credits[0].abs() > 1e-6);
    }
}
