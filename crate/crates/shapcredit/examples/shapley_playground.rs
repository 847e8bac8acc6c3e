//! Exact and Monte Carlo Shapley values on hand-built cooperative games,
//! plus an axiom report.
//!
//! ```bash
//! cargo run --release --example shapley_playground
//! ```

use rand::rngs::StdRng;
use rand::SeedableRng;

use shapcredit::game::{
    exact_shapley, mc_shapley, verify_axioms, AdditiveGame, Coalition, FnGame,
};

fn main() {
    // Additive game: each player's credit is its own weight.
    let additive = AdditiveGame::new(vec![1.0, 2.0, 3.0]);
    let exact = exact_shapley(&additive).unwrap();
    println!("additive game  values = {:?}", exact.values);
    println!("               characteristic evaluations = {}", exact.evaluations);

    // Glove game: player 2 holds the left glove, players 0 and 1 each hold
    // a right glove; a pair is worth 1.
    let glove = FnGame::new(3, |s: Coalition| {
        if s.contains(2) && (s.contains(0) || s.contains(1)) {
            1.0
        } else {
            0.0
        }
    });
    let exact = exact_shapley(&glove).unwrap();
    println!("glove game     values = {:?}  (thirds: 1/6, 1/6, 2/3)", exact.values);

    // Monte Carlo approximation converges to the exact values.
    for samples in [1, 10, 100, 10_000] {
        let mut rng = StdRng::seed_from_u64(7);
        let mc = mc_shapley(&glove, samples, &mut rng).unwrap();
        let err: f64 = mc
            .values
            .iter()
            .zip(&exact.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("mc M={samples:<6} values = {:?}  max abs err = {err:.4}", mc.values);
    }

    // The five axioms, checked on the glove game against its double.
    let doubled = FnGame::new(3, |s: Coalition| {
        2.0 * if s.contains(2) && (s.contains(0) || s.contains(1)) {
            1.0
        } else {
            0.0
        }
    });
    // Doubling the game dominates the original marginal-for-marginal, so
    // coherency applies to every player.
    let report = verify_axioms(&doubled, &glove, 1e-9).unwrap();
    println!("axiom report:");
    println!("  efficiency  pass = {}", report.efficiency.passed);
    println!(
        "  symmetry    pass = {} (interchangeable pairs {:?})",
        report.symmetry.passed, report.symmetric_pairs
    );
    println!(
        "  nullity     pass = {} (null players {:?})",
        report.nullity.passed, report.null_players
    );
    println!("  linearity   pass = {}", report.linearity.passed);
    println!(
        "  coherency   pass = {} (dominated players {:?})",
        report.coherency.passed, report.dominated_players
    );

    // Reports serialize for run summaries.
    println!("\nas JSON:\n{}", serde_json::to_string_pretty(&report).unwrap());
}
