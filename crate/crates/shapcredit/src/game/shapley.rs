//! Exact and Monte Carlo Shapley values over an arbitrary characteristic function.

use std::collections::HashMap;

use rand::Rng;

use super::coalition::{CharacteristicFn, Coalition, GameError};

/// Default player-count cap for exhaustive enumeration.
///
/// Exhaustive Shapley touches all 2^n coalitions; beyond the cap the exact
/// routine refuses rather than silently approximating.
pub const DEFAULT_EXACT_CAP: usize = 12;

/// How a [`ShapleyResult`] was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapleyMethod {
    Exact,
    MonteCarlo { samples: usize },
}

/// Per-player credit vector plus bookkeeping about the computation.
#[derive(Debug, Clone)]
pub struct ShapleyResult {
    /// One credit per player, indexed by agent id.
    pub values: Vec<f64>,
    pub method: ShapleyMethod,
    /// Distinct characteristic-function evaluations performed (post-memoization).
    pub evaluations: usize,
}

/// Memoizing wrapper around a characteristic function.
///
/// Values are deterministic by contract, so repeated coalitions are served
/// from the cache; `evaluations` counts cache misses only.
struct MemoEval<'a, V: CharacteristicFn + ?Sized> {
    game: &'a V,
    cache: HashMap<u64, f64>,
}

impl<'a, V: CharacteristicFn + ?Sized> MemoEval<'a, V> {
    fn new(game: &'a V) -> Self {
        MemoEval {
            game,
            cache: HashMap::new(),
        }
    }

    fn eval(&mut self, coalition: Coalition) -> f64 {
        let bits = coalition.bits();
        if let Some(&v) = self.cache.get(&bits) {
            return v;
        }
        let v = self.game.eval(coalition);
        self.cache.insert(bits, v);
        v
    }

    fn evaluations(&self) -> usize {
        self.cache.len()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// The marginal contribution of `agent` inside `coalition`: `v(S) - v(S \ {i})`.
pub fn marginal_contribution<V: CharacteristicFn + ?Sized>(
    game: &V,
    agent: usize,
    coalition: Coalition,
) -> Result<f64, GameError> {
    let n = game.player_count();
    if agent >= n {
        return Err(GameError::AgentOutOfRange { agent, n });
    }
    if !coalition.contains(agent) {
        return Err(GameError::NotAMember {
            agent,
            coalition: coalition.bits(),
        });
    }
    Ok(game.eval(coalition) - game.eval(coalition.without(agent)?))
}

/// Exact Shapley values by exhaustive enumeration, with the default cap.
pub fn exact_shapley<V: CharacteristicFn + ?Sized>(game: &V) -> Result<ShapleyResult, GameError> {
    exact_shapley_capped(game, DEFAULT_EXACT_CAP)
}

/// Exact Shapley values with a caller-chosen enumeration cap.
///
/// For each player i, averages the marginal contributions over all subsets
/// containing i: the sizes are weighted equally and, within a size, every
/// subset equally. Sums are accumulated per size and divided by the exact
/// subset count, so games with exactly representable marginals come out
/// exact as well.
pub fn exact_shapley_capped<V: CharacteristicFn + ?Sized>(
    game: &V,
    cap: usize,
) -> Result<ShapleyResult, GameError> {
    let n = game.player_count();
    if n == 0 || n > 64 {
        return Err(GameError::InvalidPlayerCount(n));
    }
    if n > cap {
        return Err(GameError::ExactCapExceeded { n, cap });
    }

    let mut memo = MemoEval::new(game);
    let mut values = vec![0.0f64; n];

    for i in 0..n {
        // size_sums[k-1] accumulates marginals over subsets of size k containing i.
        let mut size_sums = vec![0.0f64; n];
        for coalition in Coalition::enumerate_all(n) {
            if !coalition.contains(i) {
                continue;
            }
            let k = coalition.size();
            let delta = memo.eval(coalition) - memo.eval(coalition.without(i).unwrap());
            size_sums[k - 1] += delta;
        }
        let mut total = 0.0f64;
        for k in 1..=n {
            total += size_sums[k - 1] / binomial(n - 1, k - 1);
        }
        values[i] = total / n as f64;
    }

    Ok(ShapleyResult {
        values,
        method: ShapleyMethod::Exact,
        evaluations: memo.evaluations(),
    })
}

/// Draws a coalition containing `agent`: size k uniform on {1..n}, then a
/// uniform size-k subset containing `agent`.
///
/// Implemented by partially shuffling the other n-1 indices and taking the
/// first k-1, which makes each size-k subset containing `agent` equally
/// likely and keeps the estimator in [`mc_shapley`] unbiased.
pub fn sample_subset_containing<R: Rng>(agent: usize, n: usize, rng: &mut R) -> Coalition {
    assert!(agent < n, "agent index {agent} out of range for n={n}");
    let k = rng.gen_range(1..=n);
    let mut others: Vec<usize> = (0..n).filter(|&j| j != agent).collect();
    let mut coalition = Coalition::empty(n).with(agent).unwrap();
    // Partial Fisher-Yates: the first k-1 entries become a uniform draw.
    for slot in 0..k - 1 {
        let pick = rng.gen_range(slot..others.len());
        others.swap(slot, pick);
        coalition = coalition.with(others[slot]).unwrap();
    }
    coalition
}

/// Monte Carlo Shapley estimate: for each player, the mean marginal
/// contribution over `samples` independently drawn coalitions containing it.
///
/// Performs exactly `samples * n` subset draws; memoization bounds the
/// distinct characteristic evaluations by `2 * samples * n`.
pub fn mc_shapley<V: CharacteristicFn + ?Sized, R: Rng>(
    game: &V,
    samples: usize,
    rng: &mut R,
) -> Result<ShapleyResult, GameError> {
    let n = game.player_count();
    if n == 0 || n > 64 {
        return Err(GameError::InvalidPlayerCount(n));
    }
    if samples == 0 {
        return Err(GameError::InvalidSampleCount(samples));
    }

    let mut memo = MemoEval::new(game);
    let mut values = vec![0.0f64; n];
    for (i, value) in values.iter_mut().enumerate() {
        let mut sum = 0.0f64;
        for _ in 0..samples {
            let coalition = sample_subset_containing(i, n, rng);
            sum += memo.eval(coalition) - memo.eval(coalition.without(i).unwrap());
        }
        *value = sum / samples as f64;
    }

    Ok(ShapleyResult {
        values,
        method: ShapleyMethod::MonteCarlo { samples },
        evaluations: memo.evaluations(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::coalition::{AdditiveGame, FnGame};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    /// The glove game on 3 players: worth 1 iff player 2 is present together
    /// with at least one of players 0 and 1.
    pub(crate) fn glove_game() -> FnGame<impl Fn(Coalition) -> f64> {
        FnGame::new(3, |s: Coalition| {
            if s.contains(2) && (s.contains(0) || s.contains(1)) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Independent oracle: average of positional marginals over all n!
    /// player orderings.
    pub(crate) fn ordering_oracle<V: CharacteristicFn>(game: &V) -> Vec<f64> {
        let n = game.player_count();
        let mut order: Vec<usize> = (0..n).collect();
        let mut sums = vec![0.0f64; n];
        let mut count = 0usize;
        permute(&mut order, 0, &mut |perm| {
            let mut prefix = Coalition::empty(n);
            let mut prev = game.eval(prefix);
            for &p in perm {
                prefix = prefix.with(p).unwrap();
                let cur = game.eval(prefix);
                sums[p] += cur - prev;
                prev = cur;
            }
            count += 1;
        });
        sums.iter().map(|s| s / count as f64).collect()
    }

    fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, visit);
            items.swap(k, i);
        }
    }

    #[test]
    fn marginal_of_additive_game_is_own_weight() {
        let g = AdditiveGame::new(vec![1.0, 2.0, 3.0]);
        let s = Coalition::from_members(3, &[0, 1]).unwrap();
        assert_eq!(marginal_contribution(&g, 1, s).unwrap(), 2.0);
    }

    #[test]
    fn marginal_of_singleton_is_value_over_empty() {
        let g = glove_game();
        for i in 0..3 {
            let s = Coalition::from_members(3, &[i]).unwrap();
            let expected = g.eval(s) - g.eval(Coalition::empty(3));
            assert_eq!(marginal_contribution(&g, i, s).unwrap(), expected);
        }
    }

    #[test]
    fn marginal_glove_game_table_lookup() {
        // v({0,2}) = 1, v({0}) = 0.
        let g = glove_game();
        let s = Coalition::from_members(3, &[0, 2]).unwrap();
        assert_eq!(marginal_contribution(&g, 2, s).unwrap(), 1.0);
    }

    #[test]
    fn marginal_rejects_non_member_and_bad_index() {
        let g = AdditiveGame::new(vec![1.0, 2.0, 3.0]);
        let s = Coalition::from_members(3, &[0, 1]).unwrap();
        assert!(matches!(
            marginal_contribution(&g, 2, s),
            Err(GameError::NotAMember { .. })
        ));
        assert!(matches!(
            marginal_contribution(&g, 5, s),
            Err(GameError::AgentOutOfRange { .. })
        ));
    }

    #[test]
    fn exact_shapley_of_additive_game_is_weight_vector() {
        let g = AdditiveGame::new(vec![1.0, 2.0, 3.0]);
        let r = exact_shapley(&g).unwrap();
        assert_eq!(r.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(r.method, ShapleyMethod::Exact);
        assert_eq!(r.evaluations, 8);
    }

    #[test]
    fn exact_shapley_glove_game_matches_ordering_oracle() {
        let g = glove_game();
        let r = exact_shapley(&g).unwrap();
        let oracle = ordering_oracle(&g);
        // Brute-force average over all 3! orderings gives [1/6, 1/6, 2/3].
        for (got, want) in r.values.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!((r.values[0] - 1.0 / 6.0).abs() < 1e-12);
        assert!((r.values[1] - 1.0 / 6.0).abs() < 1e-12);
        assert!((r.values[2] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_shapley_of_constant_game_is_zero() {
        let g = FnGame::new(4, |_| 7.5);
        let r = exact_shapley(&g).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exact_shapley_refuses_above_cap() {
        let g = FnGame::new(13, |s: Coalition| s.size() as f64);
        assert_eq!(
            exact_shapley(&g).unwrap_err(),
            GameError::ExactCapExceeded { n: 13, cap: 12 }
        );
        assert!(exact_shapley_capped(&g, 13).is_ok());
    }

    #[test]
    fn sampler_trivial_single_player() {
        let mut rng = StdRng::seed_from_u64(0);
        for _ in 0..50 {
            let s = sample_subset_containing(0, 1, &mut rng);
            assert_eq!(s, Coalition::full(1));
        }
    }

    #[test]
    fn sampler_two_players_splits_evenly() {
        let mut rng = StdRng::seed_from_u64(7);
        let draws = 100_000;
        let mut singles = 0usize;
        for _ in 0..draws {
            let s = sample_subset_containing(0, 2, &mut rng);
            assert!(s.contains(0));
            if s.size() == 1 {
                singles += 1;
            }
        }
        let p = singles as f64 / draws as f64;
        assert!((p - 0.5).abs() < 0.01, "P(size 1) = {p}");
    }

    #[test]
    fn sampler_size_is_uniform_for_three_players() {
        let mut rng = StdRng::seed_from_u64(11);
        let draws = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let s = sample_subset_containing(0, 3, &mut rng);
            assert!(s.contains(0));
            counts[s.size() - 1] += 1;
        }
        for c in counts {
            let p = c as f64 / draws as f64;
            assert!((p - 1.0 / 3.0).abs() < 0.01, "size probability {p}");
        }
    }

    #[test]
    fn mc_shapley_collapses_to_exact_on_additive_games() {
        let g = AdditiveGame::new(vec![1.0, 2.0, 3.0]);
        let exact = exact_shapley(&g).unwrap();
        for seed in 0..5u64 {
            for samples in [1, 2, 7] {
                let mut rng = StdRng::seed_from_u64(seed);
                let mc = mc_shapley(&g, samples, &mut rng).unwrap();
                assert_eq!(mc.values, exact.values);
            }
        }
    }

    #[test]
    fn mc_shapley_constant_game_single_sample_is_zero() {
        let g = FnGame::new(5, |_| 3.0);
        let mut rng = StdRng::seed_from_u64(0);
        let r = mc_shapley(&g, 1, &mut rng).unwrap();
        assert_eq!(r.values, vec![0.0; 5]);
    }

    #[test]
    fn mc_shapley_glove_game_converges_to_exact() {
        let g = glove_game();
        let exact = exact_shapley(&g).unwrap();
        let mut means = vec![0.0f64; 3];
        let seeds = 20;
        for seed in 0..seeds {
            let mut rng = StdRng::seed_from_u64(seed);
            let mc = mc_shapley(&g, 2000, &mut rng).unwrap();
            for (m, v) in means.iter_mut().zip(&mc.values) {
                *m += v / seeds as f64;
            }
        }
        for (m, e) in means.iter().zip(&exact.values) {
            assert!((m - e).abs() < 0.05, "mean {m} vs exact {e}");
        }
    }

    #[test]
    fn mc_shapley_rejects_zero_samples() {
        let g = AdditiveGame::new(vec![1.0]);
        let mut rng = StdRng::seed_from_u64(0);
        assert_eq!(
            mc_shapley(&g, 0, &mut rng).unwrap_err(),
            GameError::InvalidSampleCount(0)
        );
    }

    #[test]
    fn mc_shapley_is_deterministic_under_fixed_seed() {
        let g = glove_game();
        let run = |seed| {
            let mut rng = StdRng::seed_from_u64(seed);
            mc_shapley(&g, 64, &mut rng).unwrap().values
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn mc_evaluation_budget_is_respected() {
        let g = glove_game();
        let mut rng = StdRng::seed_from_u64(1);
        let r = mc_shapley(&g, 5, &mut rng).unwrap();
        assert!(r.evaluations <= 2 * 5 * 3, "evals {}", r.evaluations);
    }
}
