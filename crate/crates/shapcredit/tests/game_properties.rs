//! Property tests for the cooperative-game core.

mod common;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::random_game;
use shapcredit::game::{
    exact_shapley, exact_shapley_capped, mc_shapley, sample_subset_containing, AdditiveGame,
    CharacteristicFn, Coalition,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Exact credits always sum to v(full) - v(empty), scale-aware.
    #[test]
    fn efficiency_holds_for_random_games(n in 2usize..=10, seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let game = random_game(n, &mut rng);
        let result = exact_shapley_capped(&game, 12).unwrap();
        let span = game.eval(Coalition::full(n)) - game.eval(Coalition::empty(n));
        let total: f64 = result.values.iter().sum();
        let grand = game.eval(Coalition::full(n));
        prop_assert!((total - span).abs() <= 1e-9 * (1.0 + grand.abs()));
    }

    /// The sampler always returns a subset containing the requested agent,
    /// within bounds.
    #[test]
    fn sampler_always_contains_the_agent(n in 1usize..=16, pick in any::<u64>(), seed in any::<u64>()) {
        let agent = (pick % n as u64) as usize;
        let mut rng = StdRng::seed_from_u64(seed);
        let s = sample_subset_containing(agent, n, &mut rng);
        prop_assert!(s.contains(agent));
        prop_assert!(s.size() >= 1 && s.size() <= n);
        prop_assert!(s.members().all(|i| i < n));
    }

    /// Monte Carlo credits collapse to the exact values on additive games
    /// with exactly representable weights, for any sample count and seed.
    #[test]
    fn additive_collapse(
        raw in proptest::collection::vec(-16i32..=16, 2..=8),
        samples in 1usize..=16,
        seed in any::<u64>(),
    ) {
        let weights: Vec<f64> = raw.iter().map(|&k| k as f64 / 4.0).collect();
        let game = AdditiveGame::new(weights);
        let exact = exact_shapley(&game).unwrap().values;
        let mut rng = StdRng::seed_from_u64(seed);
        let mc = mc_shapley(&game, samples, &mut rng).unwrap().values;
        for (a, b) in mc.iter().zip(&exact) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    /// Same seed, same sample count, same game: identical output.
    #[test]
    fn mc_is_deterministic(n in 2usize..=6, samples in 1usize..=8, seed in any::<u64>()) {
        let mut game_rng = StdRng::seed_from_u64(seed.wrapping_add(1));
        let game = random_game(n, &mut game_rng);
        let a = mc_shapley(&game, samples, &mut StdRng::seed_from_u64(seed)).unwrap();
        let b = mc_shapley(&game, samples, &mut StdRng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a.values, b.values);
    }
}

/// Under the size-uniform subset law, a single sampled marginal is an
/// unbiased estimate of the exact Shapley value: the empirical mean over
/// many draws stays within three standard errors.
#[test]
fn sampler_is_unbiased_for_the_exact_value() {
    let draws = 100_000usize;
    for (game_seed, n) in [(1u64, 4usize), (2, 5), (3, 6)] {
        let mut game_rng = StdRng::seed_from_u64(game_seed);
        let game = random_game(n, &mut game_rng);
        let exact = exact_shapley(&game).unwrap().values;
        let mut rng = StdRng::seed_from_u64(900 + game_seed);
        for agent in 0..n {
            let mut sum = 0.0f64;
            let mut sum_sq = 0.0f64;
            for _ in 0..draws {
                let s = sample_subset_containing(agent, n, &mut rng);
                let delta = game.eval(s) - game.eval(s.without(agent).unwrap());
                sum += delta;
                sum_sq += delta * delta;
            }
            let mean = sum / draws as f64;
            let var = (sum_sq / draws as f64 - mean * mean).max(0.0);
            let stderr = (var / draws as f64).sqrt();
            let err = (mean - exact[agent]).abs();
            assert!(
                err <= 3.0 * stderr + 1e-12,
                "game {game_seed} agent {agent}: |{mean} - {}| = {err} > 3 x {stderr}",
                exact[agent]
            );
        }
    }
}
