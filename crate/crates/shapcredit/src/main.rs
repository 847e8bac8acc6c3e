use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shapcredit::config::RunConfig;
use shapcredit::harness::{run_audit, run_bench, run_train};

#[derive(Parser)]
#[command(
    name = "shapcredit",
    about = "Cooperative multi-agent RL with Shapley counterfactual credit assignment"
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Run training from a config file; writes metrics.csv, run_summary.json,
    /// and checkpoints into the run directory.
    Train {
        /// Path to a run configuration (see presets/).
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run directory (default: runs/<config stem>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace an existing run directory.
        #[arg(long)]
        overwrite: bool,
    },
    /// Per-step credit audit of a trained checkpoint: exact Shapley, Monte
    /// Carlo columns for each M, plain counterfactual, and uniform.
    Audit {
        /// Checkpoint base path (with or without .params).
        checkpoint: PathBuf,
        /// Environment and seed come from this config.
        config: PathBuf,
        /// Number of greedy steps to audit.
        #[arg(long)]
        steps: usize,
        /// Comma-separated Monte Carlo sample counts, e.g. 1,2,4,5,8.
        #[arg(long = "M", value_name = "LIST", default_value = "1,2,4,5,8")]
        mc: String,
        /// Output directory (default: audit).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace an existing output directory.
        #[arg(long)]
        overwrite: bool,
    },
    /// Characteristic-evaluation benchmark of exact vs. Monte Carlo credits
    /// on synthetic random critics.
    Bench {
        /// Agent counts: a range like 2..10 or a comma list like 2,4,6.
        #[arg(long, default_value = "2..10")]
        n: String,
        /// Comma-separated Monte Carlo sample counts.
        #[arg(long = "M", value_name = "LIST", default_value = "1,5,10")]
        mc: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (default: bench).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace an existing output directory.
        #[arg(long)]
        overwrite: bool,
    },
}

fn parse_list(text: &str, what: &str) -> Result<Vec<usize>, String> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo
            .trim()
            .parse()
            .map_err(|e| format!("bad {what} range start `{lo}`: {e}"))?;
        let hi: usize = hi
            .trim()
            .parse()
            .map_err(|e| format!("bad {what} range end `{hi}`: {e}"))?;
        if lo > hi {
            return Err(format!("empty {what} range {lo}..{hi}"));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|e| format!("bad {what} entry `{tok}`: {e}"))
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Commands::Train {
            config,
            seed,
            out,
            overwrite,
        } => {
            let mut cfg = RunConfig::from_file(&config).map_err(|e| e.to_string())?;
            if let Some(seed) = seed {
                cfg.hyperparams.seed = seed;
            }
            let out_dir = out
                .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| {
                    let stem = config
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "run".to_string());
                    PathBuf::from("runs").join(stem)
                });
            println!("training -> {}", out_dir.display());
            println!("{}", shapcredit::harness::METRICS_HEADER);
            let outcome = run_train(&cfg, &out_dir, overwrite, None).map_err(|e| e.to_string())?;
            for r in &outcome.records {
                println!(
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
            println!(
                "done: episodes={} eval_return={} success_rate={} wall={:.1}s",
                outcome.summary.episodes_trained,
                outcome.summary.final_eval_return,
                outcome.summary.final_success_rate,
                outcome.summary.wall_time_secs
            );
            Ok(())
        }
        Commands::Audit {
            checkpoint,
            config,
            steps,
            mc,
            out,
            overwrite,
        } => {
            let cfg = RunConfig::from_file(&config).map_err(|e| e.to_string())?;
            let mc_list = parse_list(&mc, "M")?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from("audit"));
            let outcome = run_audit(&checkpoint, &cfg, steps, &mc_list, &out_dir, overwrite)
                .map_err(|e| e.to_string())?;
            let s = &outcome.summary;
            println!(
                "audited {} steps of {} agents -> {}",
                s.steps,
                s.n_agents,
                outcome.out_dir.display()
            );
            if s.exact_available {
                println!("M,mae_vs_exact,rank_correlation");
                for stat in &s.mc_stats {
                    println!(
                        "{},{},{}",
                        stat.samples, stat.mean_absolute_error, stat.rank_correlation
                    );
                }
                println!(
                    "per-agent mean |exact credit|: {:?}",
                    s.per_agent_mean_abs_exact
                );
            } else {
                println!(
                    "agent count {} exceeds the exact-enumeration cap; exact column omitted",
                    s.n_agents
                );
            }
            Ok(())
        }
        Commands::Bench {
            n,
            mc,
            seed,
            out,
            overwrite,
        } => {
            let n_list = parse_list(&n, "n")?;
            let mc_list = parse_list(&mc, "M")?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from("bench"));
            let outcome = run_bench(&n_list, &mc_list, seed, &out_dir, overwrite)
                .map_err(|e| e.to_string())?;
            print!("{}", outcome.csv);
            println!("written -> {}", outcome.out_dir.display());
            Ok(())
        }
    }
}
