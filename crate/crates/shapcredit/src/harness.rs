//! Train / audit / bench entry points behind the command-line binary:
//! run-directory management, metrics and audit CSVs, checkpoints, and the
//! machine-readable run summaries.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use thiserror::Error;

use crate::checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
use crate::config::{ConfigError, RunConfig};
use crate::credit::{
    plain_counterfactual_credits, shapley_credits_exact, shapley_credits_mc, uniform_credits,
    CounterfactualGame,
};
use crate::env::JointAction;
use crate::game::{CharacteristicFn, Coalition, DEFAULT_EXACT_CAP};
use crate::nn::{CriticConfig, CriticNet};
use crate::trainer::{greedy_action, MetricsRecord, Trainer, TrainerError};

/// Fixed header of `metrics.csv`.
pub const METRICS_HEADER: &str =
    "episode,eval_return,success_rate,epsilon,critic_loss,agent_loss,credit_mean,credit_std";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trainer(#[from] TrainerError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("i/o failure at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("output directory {0} already exists (pass --overwrite to replace it)")]
    OutputExists(PathBuf),
    #[error("audit requires at least one Monte Carlo sample count")]
    EmptyMcList,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Renders metric records with the fixed header; byte-stable for a given
/// record stream.
pub fn metrics_to_csv(records: &[MetricsRecord]) -> String {
    let mut csv = String::from(METRICS_HEADER);
    csv.push('\n');
    for r in records {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.episode,
            r.eval_return,
            r.success_rate,
            r.epsilon,
            r.critic_loss,
            r.agent_loss,
            r.credit_mean,
            r.credit_std
        );
    }
    csv
}

/// Final stats plus reproducibility context, serialized as JSON.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub credit_strategy: String,
    pub episodes_trained: usize,
    pub evaluations: usize,
    pub final_eval_return: f64,
    pub final_success_rate: f64,
    pub optimal_return: Option<f64>,
    pub wall_time_secs: f64,
    pub config_echo: String,
}

pub struct TrainOutcome {
    pub records: Vec<MetricsRecord>,
    pub summary: RunSummary,
    pub out_dir: PathBuf,
}

/// Runs training per the config and writes `metrics.csv`, `run_summary.json`,
/// `config.cfg`, and checkpoints into `out_dir`.
///
/// Refuses to reuse an existing directory unless `overwrite` is set. The
/// optional `stop` predicate ends the run early when it returns true for a
/// metrics record.
pub fn run_train(
    config: &RunConfig,
    out_dir: &Path,
    overwrite: bool,
    stop: Option<&dyn Fn(&MetricsRecord) -> bool>,
) -> Result<TrainOutcome, HarnessError> {
    if out_dir.exists() {
        if !overwrite {
            return Err(HarnessError::OutputExists(out_dir.to_path_buf()));
        }
        std::fs::remove_dir_all(out_dir).map_err(|source| HarnessError::Io {
            path: out_dir.to_path_buf(),
            source,
        })?;
    }
    create_dir(out_dir)?;
    let config_echo = config.to_config_string();
    write_file(&out_dir.join("config.cfg"), config_echo.as_bytes())?;

    let start = Instant::now();
    let env_cfg = config.env.clone();
    let mut trainer = Trainer::new(move || env_cfg.build(), config.hyperparams.clone())?;
    let optimal_return = config.env.build().optimal_return();

    let cadence = config.checkpoint_interval;
    let mut checkpoint_result: Result<(), HarnessError> = Ok(());
    let records = trainer.run_with(|record, t| {
        if cadence > 0 && record.episode > 0 && record.episode % cadence == 0 {
            let base = out_dir.join(format!("checkpoint_{:06}", record.episode));
            if let Err(e) = save_checkpoint(&base, &t.critic, &t.agents) {
                checkpoint_result = Err(e.into());
                return false;
            }
        }
        match stop {
            Some(predicate) => !predicate(record),
            None => true,
        }
    })?;
    checkpoint_result?;

    save_checkpoint(&out_dir.join("checkpoint_final"), &trainer.critic, &trainer.agents)?;
    write_file(
        &out_dir.join("metrics.csv"),
        metrics_to_csv(&records).as_bytes(),
    )?;

    let last = records.last().expect("at least the initial record exists");
    let summary = RunSummary {
        seed: config.hyperparams.seed,
        credit_strategy: config.hyperparams.credit_strategy.to_string(),
        episodes_trained: last.episode,
        evaluations: records.len(),
        final_eval_return: last.eval_return,
        final_success_rate: last.success_rate,
        optimal_return,
        wall_time_secs: start.elapsed().as_secs_f64(),
        config_echo,
    };
    write_file(
        &out_dir.join("run_summary.json"),
        serde_json::to_string_pretty(&summary)
            .expect("summary serializes")
            .as_bytes(),
    )?;

    Ok(TrainOutcome {
        records,
        summary,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Error statistics of one Monte Carlo column against the exact column.
#[derive(Debug, Clone, Serialize)]
pub struct McErrorStats {
    pub samples: usize,
    /// Mean absolute error over all audited (step, agent) cells.
    pub mean_absolute_error: f64,
    /// Mean per-step Spearman rank correlation between the MC and exact
    /// credit vectors.
    pub rank_correlation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditSummary {
    pub seed: u64,
    pub checkpoint: PathBuf,
    pub steps: usize,
    pub n_agents: usize,
    /// False when the agent count exceeds the exact-enumeration cap; the
    /// exact column and error statistics are then omitted.
    pub exact_available: bool,
    pub mc_stats: Vec<McErrorStats>,
    /// Mean |exact credit| per agent over the audited steps.
    pub per_agent_mean_abs_exact: Vec<f64>,
    pub config_echo: String,
}

pub struct AuditOutcome {
    pub summary: AuditSummary,
    pub csv: String,
    pub out_dir: PathBuf,
}

/// Rolls out `steps` greedy steps from the checkpointed agents and, at each
/// step, emits per-agent credits under every strategy: exact Shapley (when
/// the agent count is within the enumeration cap), Monte Carlo Shapley for
/// every M in `mc_list`, plain counterfactual, and uniform.
pub fn run_audit(
    checkpoint_base: &Path,
    config: &RunConfig,
    steps: usize,
    mc_list: &[usize],
    out_dir: &Path,
    overwrite: bool,
) -> Result<AuditOutcome, HarnessError> {
    if mc_list.is_empty() {
        return Err(HarnessError::EmptyMcList);
    }
    if out_dir.exists() && !overwrite {
        return Err(HarnessError::OutputExists(out_dir.to_path_buf()));
    }
    create_dir(out_dir)?;

    let checkpoint = load_checkpoint(checkpoint_base)?;
    let mut env = config.env.build();
    let spec = env.spec().clone();
    let n = spec.n_agents;
    let exact_available = n <= DEFAULT_EXACT_CAP;
    let seed = config.hyperparams.seed;
    let mut env_rng = StdRng::seed_from_u64(seed);
    let mut mc_rng = StdRng::seed_from_u64(seed ^ 0x000d_17a5);

    // Header: step,agent[,exact],mc_m<M>...,plain,uniform.
    let mut header = String::from("step,agent");
    if exact_available {
        header.push_str(",exact");
    }
    for m in mc_list {
        let _ = write!(header, ",mc_m{m}");
    }
    header.push_str(",plain,uniform");
    let mut csv = header;
    csv.push('\n');

    let mut mae_acc = vec![0.0f64; mc_list.len()];
    let mut corr_acc = vec![0.0f64; mc_list.len()];
    let mut abs_exact = vec![0.0f64; n];
    let mut current = env.reset(&mut env_rng);
    let mut hidden: Vec<_> = checkpoint.agents.iter().map(|a| a.zero_state()).collect();

    for step_idx in 0..steps {
        // Greedy joint action from the checkpointed agents.
        let mut actions = Vec::with_capacity(n);
        for (i, agent) in checkpoint.agents.iter().enumerate() {
            let (q, h_next) = agent
                .forward(&current.observations[i], &hidden[i])
                .map_err(TrainerError::from)?;
            actions.push(greedy_action(&q));
            hidden[i] = h_next;
        }
        let action = JointAction::new(actions);
        let critic_obs: Vec<Vec<f64>> = (0..n)
            .map(|i| current.state_slice(&spec, i).to_vec())
            .collect();
        let enc: Vec<Vec<f64>> = action.actions.iter().map(|&a| spec.encode_action(a)).collect();
        let game = CounterfactualGame::new(&checkpoint.critic, &critic_obs, enc);

        let exact = if exact_available {
            Some(shapley_credits_exact(&game).map_err(TrainerError::from)?)
        } else {
            None
        };
        let mc_columns: Vec<Vec<f64>> = mc_list
            .iter()
            .map(|&m| {
                shapley_credits_mc(&game, m, &mut mc_rng)
                    .map(|c| c.credits)
                    .map_err(TrainerError::from)
            })
            .collect::<Result<_, _>>()?;
        let plain = plain_counterfactual_credits(&game);
        let uniform = uniform_credits(&game);

        if let Some(exact) = &exact {
            for (k, col) in mc_columns.iter().enumerate() {
                let mae: f64 = col
                    .iter()
                    .zip(&exact.credits)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
                    / n as f64;
                mae_acc[k] += mae;
                corr_acc[k] += spearman(col, &exact.credits);
            }
            for (acc, c) in abs_exact.iter_mut().zip(&exact.credits) {
                *acc += c.abs();
            }
        }

        for agent in 0..n {
            let _ = write!(csv, "{step_idx},{agent}");
            if let Some(exact) = &exact {
                let _ = write!(csv, ",{}", exact.credits[agent]);
            }
            for col in &mc_columns {
                let _ = write!(csv, ",{}", col[agent]);
            }
            let _ = writeln!(csv, ",{},{}", plain.credits[agent], uniform.credits[agent]);
        }

        // Advance the environment; begin a fresh episode when done.
        let result = env.step(&action).map_err(TrainerError::from)?;
        if result.done {
            current = env.reset(&mut env_rng);
            hidden = checkpoint.agents.iter().map(|a| a.zero_state()).collect();
        } else {
            current = result;
        }
    }

    let mc_stats = mc_list
        .iter()
        .enumerate()
        .map(|(k, &m)| McErrorStats {
            samples: m,
            mean_absolute_error: mae_acc[k] / steps as f64,
            rank_correlation: corr_acc[k] / steps as f64,
        })
        .collect();
    let per_agent_mean_abs_exact = abs_exact.iter().map(|a| a / steps as f64).collect();

    let summary = AuditSummary {
        seed,
        checkpoint: checkpoint_base.to_path_buf(),
        steps,
        n_agents: n,
        exact_available,
        mc_stats,
        per_agent_mean_abs_exact,
        config_echo: config.to_config_string(),
    };
    write_file(&out_dir.join("audit.csv"), csv.as_bytes())?;
    write_file(
        &out_dir.join("audit_summary.json"),
        serde_json::to_string_pretty(&summary)
            .expect("summary serializes")
            .as_bytes(),
    )?;

    Ok(AuditOutcome {
        summary,
        csv,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side has no rank variance.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - mean) * (y - mean);
        var_a += (x - mean) * (x - mean);
        var_b += (y - mean) * (y - mean);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return 0.0;
    }
    cov / (var_a.sqrt() * var_b.sqrt())
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut k = 0;
    while k < order.len() {
        let mut j = k;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[k]] {
            j += 1;
        }
        let avg = (k + j) as f64 / 2.0 + 1.0;
        for &idx in &order[k..=j] {
            ranks[idx] = avg;
        }
        k = j + 1;
    }
    ranks
}

/// One row of the complexity benchmark.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n_agents: usize,
    pub method: String,
    pub mc_samples: usize,
    /// Distinct critic evaluations via the memoized estimators.
    pub critic_evals: usize,
    /// Raw marginal-evaluation demand without memoization.
    pub demand_evals: usize,
    pub wall_ms: f64,
}

pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub csv: String,
    pub out_dir: PathBuf,
}

/// Measures characteristic-evaluation counts and wall time of exact vs.
/// Monte Carlo credits on synthetic random critics across agent counts.
pub fn run_bench(
    n_list: &[usize],
    mc_list: &[usize],
    seed: u64,
    out_dir: &Path,
    overwrite: bool,
) -> Result<BenchOutcome, HarnessError> {
    if out_dir.exists() && !overwrite {
        return Err(HarnessError::OutputExists(out_dir.to_path_buf()));
    }
    create_dir(out_dir)?;

    let mut rows = Vec::new();
    for &n in n_list {
        let mut rng = StdRng::seed_from_u64(seed.wrapping_add(n as u64));
        let mut critic = CriticNet::new(CriticConfig {
            n_agents: n,
            obs_dim: 3,
            act_dim: 3,
            hidden: 8,
            head_hidden: 8,
            groups: vec![0; n],
        })
        .map_err(TrainerError::from)?;
        critic.init(&mut rng);
        let obs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let enc: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut e = vec![0.0; 3];
                e[rng.gen_range(0..3)] = 1.0;
                e
            })
            .collect();

        // Exact credits through the memoized estimator.
        {
            let game = CounterfactualGame::new(&critic, &obs, enc.clone());
            let t0 = Instant::now();
            shapley_credits_exact(&game).map_err(TrainerError::from)?;
            let wall = t0.elapsed().as_secs_f64() * 1e3;
            let distinct = game.critic_evaluations();
            // Raw demand: every (agent, coalition-containing-it) pair asks
            // for two values; counted directly on a fresh game.
            let demand_game = CounterfactualGame::new(&critic, &obs, enc.clone());
            let mut demand = 0usize;
            for i in 0..n {
                for coalition in Coalition::enumerate_all(n) {
                    if coalition.contains(i) {
                        demand_game.eval(coalition);
                        demand_game.eval(coalition.without(i).unwrap());
                        demand += 2;
                    }
                }
            }
            rows.push(BenchRow {
                n_agents: n,
                method: "exact".to_string(),
                mc_samples: 0,
                critic_evals: distinct,
                demand_evals: demand,
                wall_ms: wall,
            });
        }

        for &m in mc_list {
            let game = CounterfactualGame::new(&critic, &obs, enc.clone());
            let mut mc_rng = StdRng::seed_from_u64(seed ^ 0xbe4c);
            let t0 = Instant::now();
            shapley_credits_mc(&game, m, &mut mc_rng).map_err(TrainerError::from)?;
            let wall = t0.elapsed().as_secs_f64() * 1e3;
            rows.push(BenchRow {
                n_agents: n,
                method: "mc".to_string(),
                mc_samples: m,
                critic_evals: game.critic_evaluations(),
                demand_evals: 2 * m * n,
                wall_ms: wall,
            });
        }
    }

    let mut csv = String::from("n,method,mc_samples,critic_evals,demand_evals,wall_ms\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.n_agents, r.method, r.mc_samples, r.critic_evals, r.demand_evals, r.wall_ms
        );
    }
    write_file(&out_dir.join("bench.csv"), csv.as_bytes())?;
    #[derive(Serialize)]
    struct BenchSummary<'a> {
        seed: u64,
        n_list: &'a [usize],
        mc_list: &'a [usize],
        rows: &'a [BenchRow],
    }
    write_file(
        &out_dir.join("bench_summary.json"),
        serde_json::to_string_pretty(&BenchSummary {
            seed,
            n_list,
            mc_list,
            rows: &rows,
        })
        .expect("summary serializes")
        .as_bytes(),
    )?;

    Ok(BenchOutcome {
        rows,
        csv,
        out_dir: out_dir.to_path_buf(),
    })
}
