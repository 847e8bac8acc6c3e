//! Per-agent credits from a critic-backed counterfactual game: exact
//! Shapley, Monte Carlo Shapley, plain counterfactual, and uniform.
//!
//! ```bash
//! cargo run --release --example counterfactual_credits
//! ```

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use shapcredit::credit::{
    plain_counterfactual_credits, shapley_credits_exact, shapley_credits_mc, uniform_credits,
    CounterfactualGame,
};
use shapcredit::game::{CharacteristicFn, Coalition};
use shapcredit::nn::{CriticConfig, CriticNet};

fn main() {
    // A random critic over 4 agents; one step's observations and actions.
    let n = 4;
    let cfg = CriticConfig {
        n_agents: n,
        obs_dim: 3,
        act_dim: 3,
        hidden: 16,
        head_hidden: 16,
        groups: vec![0; n],
    };
    let mut critic = CriticNet::new(cfg).unwrap();
    let mut rng = StdRng::seed_from_u64(42);
    critic.init(&mut rng);

    let obs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let taken: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut e = vec![0.0; 3];
            e[rng.gen_range(0..3)] = 1.0;
            e
        })
        .collect();

    let game = CounterfactualGame::new(&critic, &obs, taken);
    println!("grand joint value f(H_A) = {:.6}", game.grand_value());
    println!(
        "whole-team contribution w(full) = {:.6}",
        game.eval(Coalition::full(n))
    );

    let exact = shapley_credits_exact(&game).unwrap();
    let mut mc_rng = StdRng::seed_from_u64(1);
    let mc = shapley_credits_mc(&game, 5, &mut mc_rng).unwrap();
    let plain = plain_counterfactual_credits(&game);
    let uniform = uniform_credits(&game);

    println!("agent |    exact | mc (M=5) |    plain |  uniform");
    for i in 0..n {
        println!(
            "{i:>5} | {:>8.4} | {:>8.4} | {:>8.4} | {:>8.4}",
            exact.credits[i], mc.credits[i], plain.credits[i], uniform.credits[i]
        );
    }

    // Efficiency: exact credits sum to the whole-team contribution.
    let total: f64 = exact.credits.iter().sum();
    println!(
        "sum of exact credits = {total:.6} (matches w(full) within {:.1e})",
        (total - game.eval(Coalition::full(n))).abs()
    );
    println!(
        "critic evaluations so far = {} (grand value cached once)",
        game.critic_evaluations()
    );

    // A two-agent critic computing the product of binary encodings shows
    // where plain counterfactual and Shapley disagree: the shared unit of
    // value is double-counted by the plain method and split by Shapley.
    let mut product = CriticNet::new(CriticConfig {
        n_agents: 2,
        obs_dim: 1,
        act_dim: 1,
        hidden: 1,
        head_hidden: 1,
        groups: vec![0, 0],
    })
    .unwrap();
    product.params_mut().segment_mut("group0.w1").unwrap()[1] = 1.0;
    product.params_mut().segment_mut("group0.w2").unwrap()[0] = 1.0;
    product
        .params_mut()
        .segment_mut("head.w1")
        .unwrap()
        .copy_from_slice(&[1.0, 1.0]);
    product.params_mut().segment_mut("head.b1").unwrap()[0] = -1.0;
    product.params_mut().segment_mut("head.w2").unwrap()[0] = 1.0;

    let obs = vec![vec![0.0], vec![0.0]];
    let game = CounterfactualGame::new(&product, &obs, vec![vec![1.0], vec![1.0]]);
    let plain = plain_counterfactual_credits(&game);
    let exact = shapley_credits_exact(&game).unwrap();
    println!("product critic: plain = {:?}, shapley = {:?}", plain.credits, exact.credits);
}
