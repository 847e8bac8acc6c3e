//! Training on the 3-agent switch gridworld: reward flows only while all
//! three switch cells are held simultaneously, so credit must be carved out
//! of a joint success signal.
//!
//! ```bash
//! cargo run --release --example train_gridworld
//! ```

use shapcredit::config::EnvConfig;
use shapcredit::credit::CreditStrategy;
use shapcredit::trainer::{Hyperparams, Trainer};

fn main() {
    let env = EnvConfig::Gridworld {
        width: 3,
        height: 3,
        starts: vec![(0, 0), (2, 0), (0, 2)],
        targets: vec![(1, 0), (0, 1), (1, 1)],
        required_occupancy: 3,
        sight_radius: 1,
        episode_limit: 15,
        step_penalty: -0.01,
        null_agent: false,
    };
    let optimal = env.build().optimal_return().unwrap();
    println!("analytically optimal mean return: {optimal:.2}");

    let hp = Hyperparams {
        training_episodes: 4000,
        exploration_episodes: 3000,
        batch_size: 16,
        hidden_units: 32,
        eval_episodes: 50,
        credit_strategy: CreditStrategy::ShapleyMc { samples: 5 },
        seed: 0,
        ..Hyperparams::default()
    };
    let env_factory = {
        let env = env.clone();
        move || env.build()
    };
    let mut trainer = Trainer::new(env_factory, hp).unwrap();
    let records = trainer
        .run_with(|r, _| {
            if r.episode % 500 == 0 {
                println!(
                    "episode {:>5}  eval return {:>6.2}  success rate {:>5.2}  epsilon {:.2}",
                    r.episode, r.eval_return, r.success_rate, r.epsilon
                );
            }
            // Stop once the greedy policy is within 95% of optimal.
            r.eval_return < 0.95 * optimal
        })
        .unwrap();

    let last = records.last().unwrap();
    println!(
        "finished at episode {}: return {:.2} ({:.0}% of optimal), success rate {:.2}",
        last.episode,
        last.eval_return,
        100.0 * last.eval_return / optimal,
        last.success_rate
    );
}
