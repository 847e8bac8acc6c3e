//! Two-stage training on the one-step matrix game, comparing the Shapley
//! Monte Carlo arm against the plain-counterfactual arm.
//!
//! ```bash
//! cargo run --release --example train_matrix
//! ```

use shapcredit::config::EnvConfig;
use shapcredit::credit::CreditStrategy;
use shapcredit::trainer::{Hyperparams, Trainer};

fn main() {
    let env = EnvConfig::Matrix {
        agents: 2,
        actions: 3,
        optimum: vec![1, 2],
        peak: 10.0,
        null_agent: false,
    };

    for strategy in [
        CreditStrategy::ShapleyMc { samples: 5 },
        CreditStrategy::PlainCounterfactual,
    ] {
        let hp = Hyperparams {
            training_episodes: 1500,
            credit_strategy: strategy,
            seed: 0,
            ..Hyperparams::default()
        };
        let env = env.clone();
        let mut trainer = Trainer::new(move || env.build(), hp).unwrap();
        println!("training with credit strategy {strategy}");
        let records = trainer.run().unwrap();
        for r in records.iter().step_by(3) {
            println!(
                "  episode {:>5}  eval return {:>6.2}  optimal-joint-action rate {:>5.2}  epsilon {:.2}",
                r.episode, r.eval_return, r.success_rate, r.epsilon
            );
        }
        let last = records.last().unwrap();
        println!(
            "  final: return {:.2} (optimum 10.00), success rate {:.2}\n",
            last.eval_return, last.success_rate
        );
    }
}
