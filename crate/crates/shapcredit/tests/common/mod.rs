//! Shared helpers for the acceptance suite: the independent all-orderings
//! Shapley oracle, random game generators, and pass/fail reporting.

// Each test binary compiles this module separately and uses a subset of it.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;

use shapcredit::game::{CharacteristicFn, Coalition, TableGame};

/// Independent Shapley oracle: the average of positional marginal
/// contributions over all n! player orderings. Deliberately brute force and
/// separate from the enumeration implementation it cross-checks.
pub fn ordering_oracle<V: CharacteristicFn>(game: &V) -> Vec<f64> {
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

/// Random characteristic function: independent values uniform in [-1, 1]
/// for every non-empty coalition, zero for the empty one.
pub fn random_game(n: usize, rng: &mut StdRng) -> TableGame {
    let mut values = vec![0.0f64; 1 << n];
    for v in values.iter_mut().skip(1) {
        *v = rng.gen_range(-1.0..1.0);
    }
    TableGame::new(n, values)
}

/// Prints the per-criterion verdict line and panics on failure.
pub fn report(criterion: &str, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} — {detail}");
    assert!(passed, "criterion {criterion} failed: {detail}");
}
