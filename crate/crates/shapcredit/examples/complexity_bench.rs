//! Evaluation-count benchmark: exact Shapley credits touch every coalition
//! (2^n distinct critic calls) while the Monte Carlo estimator stays within
//! 2*M*n + 1 regardless of n.
//!
//! ```bash
//! cargo run --release --example complexity_bench
//! ```

use shapcredit::harness::run_bench;

fn main() {
    let dir = std::env::temp_dir().join("shapcredit_example_bench");
    let _ = std::fs::remove_dir_all(&dir);

    let n_list: Vec<usize> = (2..=10).collect();
    let outcome = run_bench(&n_list, &[1, 5, 10], 0, &dir, true).unwrap();

    println!("{:>3} {:>8} {:>4} {:>12} {:>12} {:>10}", "n", "method", "M", "critic_evals", "demand_evals", "wall_ms");
    for r in &outcome.rows {
        println!(
            "{:>3} {:>8} {:>4} {:>12} {:>12} {:>10.3}",
            r.n_agents, r.method, r.mc_samples, r.critic_evals, r.demand_evals, r.wall_ms
        );
    }

    let exact10 = outcome
        .rows
        .iter()
        .find(|r| r.n_agents == 10 && r.method == "exact")
        .unwrap();
    let mc10 = outcome
        .rows
        .iter()
        .find(|r| r.n_agents == 10 && r.method == "mc" && r.mc_samples == 5)
        .unwrap();
    println!(
        "\nat n = 10: exact demands {} marginal evaluations, MC with M = 5 demands {} ({}x fewer)",
        exact10.demand_evals,
        mc10.demand_evals,
        exact10.demand_evals / mc10.demand_evals
    );
    println!("bench.csv written to {}", dir.display());
}
