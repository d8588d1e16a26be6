//! `lead` — run, profile, analyze, and replay long-horizon puzzle
//! execution experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use lead_core::analytics::{
    error_rate_histogram, profile_step_errors, rank_order_accuracies, ErrorBreakdown,
    StepErrorStats,
};
use lead_core::executors::StepVerdict;
use lead_core::io::{
    load_config, load_run, run_experiment, single_agent, summarize, write_summary, AgentKind,
    ConfigError, ExperimentConfig, HarnessError,
};
use lead_core::listing::render_solution_listing;
use lead_core::puzzle::PuzzleKind;

#[derive(Parser)]
#[command(name = "lead", version, about = "Stepwise puzzle execution harness")]
struct Cli {
    /// Experiment config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for transcripts, summaries, and analysis tables.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for independent episodes.
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,
    /// Override the configured agent (oracle | mock | endpoint).
    #[arg(long, global = true)]
    agent: Option<AgentKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the optimal solution listing for a puzzle instance.
    Solve {
        #[arg(long)]
        puzzle: PuzzleKind,
        #[arg(short, long)]
        n: usize,
    },
    /// Run a strategy experiment described by the config file.
    Run,
    /// Estimate per-step error rates along the reference trajectory.
    Profile {
        /// Samples per step (defaults to the config's samples_per_step).
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Recompute analysis tables from one or more stored runs.
    Analyze {
        /// Run directories produced by `lead run --out-dir`.
        runs: Vec<PathBuf>,
    },
    /// Re-grade a stored run from its transcripts.
    Replay {
        /// Run directory produced by `lead run --out-dir`.
        run: PathBuf,
    },
}

fn load_and_override(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let path = cli.config.as_deref().ok_or_else(|| {
        HarnessError::Config(ConfigError::Invalid {
            field: "--config".to_string(),
            message: "this command needs a config file".to_string(),
        })
    })?;
    let mut config = load_config(path)?;
    if let Some(seed) = cli.seed {
        config.experiment.seed = seed;
    }
    if let Some(kind) = cli.agent {
        config.agent.kind = kind;
        config.validate()?;
    }
    Ok(config)
}

fn cmd_solve(puzzle: PuzzleKind, n: usize) -> Result<()> {
    let steps = puzzle
        .oracle_solve(n)
        .with_context(|| format!("cannot solve {} with n = {n}", puzzle.name()))?;
    println!("{}", render_solution_listing(&steps));
    Ok(())
}

fn cmd_run(cli: &Cli) -> Result<(), HarnessError> {
    let config = load_and_override(cli)?;
    let outcome = run_experiment(&config, cli.out_dir.as_deref(), cli.parallel)?;
    print!("{}", outcome.summary.success);
    if let Some(dir) = &cli.out_dir {
        eprintln!(
            "wrote {} episode transcripts, summary tables, and manifest under {}",
            outcome.records.len(),
            dir.display()
        );
    }
    Ok(())
}

fn step_stats_csv(stats: &[StepErrorStats]) -> String {
    let mut out =
        String::from("step_index,samples,errors,error_rate,move_finding,move_execution,parse\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{:.4},{},{},{}\n",
            s.step_index,
            s.samples,
            s.errors,
            s.error_rate(),
            s.breakdown.move_finding,
            s.breakdown.move_execution,
            s.breakdown.parse
        ));
    }
    out
}

fn cmd_profile(cli: &Cli, samples: Option<u64>) -> Result<(), HarnessError> {
    let config = load_and_override(cli)?;
    let agent = single_agent(&config)?;
    let samples = samples.unwrap_or(config.experiment.samples_per_step);
    let stats = profile_step_errors(
        agent.as_ref(),
        config.experiment.puzzle,
        config.experiment.n,
        samples,
    )?;
    let table = step_stats_csv(&stats);
    let hist = error_rate_histogram(&stats, 0.05);
    let mut hist_csv = String::from("rate_bucket,steps\n");
    for (lo, count) in hist {
        hist_csv.push_str(&format!("{lo:.2},{count}\n"));
    }
    match &cli.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("step_errors.csv"), table)?;
            std::fs::write(dir.join("error_histogram.csv"), hist_csv)?;
            eprintln!("wrote step_errors.csv and error_histogram.csv under {}", dir.display());
        }
        None => {
            print!("{table}");
        }
    }
    Ok(())
}

fn cmd_analyze(out_dir: Option<&Path>, runs: &[PathBuf]) -> Result<(), HarnessError> {
    if runs.is_empty() {
        return Err(HarnessError::Config(ConfigError::Invalid {
            field: "runs".to_string(),
            message: "give at least one run directory".to_string(),
        }));
    }
    let mut records = Vec::new();
    for dir in runs {
        let (_, mut run_records) = load_run(dir)?;
        records.append(&mut run_records);
    }
    let tables = summarize(&records);

    // Rank-ordered per-step accuracy across all loaded episodes.
    let mut per_step: std::collections::BTreeMap<usize, (u64, u64)> =
        std::collections::BTreeMap::new();
    for r in &records {
        for (i, verdict) in r.step_verdicts.iter().enumerate() {
            let slot = per_step.entry(i).or_default();
            slot.0 += 1;
            if *verdict != StepVerdict::Ok {
                slot.1 += 1;
            }
        }
    }
    let stats: Vec<StepErrorStats> = per_step
        .into_iter()
        .map(|(step_index, (samples, errors))| StepErrorStats {
            step_index,
            samples,
            errors,
            breakdown: ErrorBreakdown::default(),
        })
        .collect();
    let ranked = rank_order_accuracies(&stats, false);
    let mut rank_csv = String::from("rank,step_index,accuracy\n");
    for r in &ranked {
        rank_csv.push_str(&format!("{},{},{:.4}\n", r.rank, r.step_index, r.accuracy));
    }

    match out_dir {
        Some(dir) => {
            let written = write_summary(dir, &tables)?;
            std::fs::write(dir.join("rank_order.csv"), rank_csv)?;
            eprintln!(
                "wrote {} summary tables and rank_order.csv under {}",
                written.len(),
                dir.display()
            );
        }
        None => {
            print!("{}", tables.success);
            if let Some(tv) = &tables.tv_matrix {
                print!("{tv}");
            }
        }
    }
    Ok(())
}

fn cmd_replay(run: &Path) -> Result<(), HarnessError> {
    let (manifest, records) = load_run(run)?;
    println!("run {} ({} episodes)", manifest.run_id, records.len());
    let mut successes = 0;
    for record in &records {
        match record.first_error_index {
            None => {
                successes += 1;
                println!("episode {:05}: success", record.episode_id);
            }
            Some(step) => {
                println!("episode {:05}: failure at step {step}", record.episode_id)
            }
        }
    }
    println!(
        "replay verdict: {successes}/{} succeeded (manifest recorded {})",
        records.len(),
        manifest.totals.successes
    );
    Ok(())
}

fn exit_code_for(err: &HarnessError) -> ExitCode {
    match err {
        HarnessError::Config(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<(), HarnessError> = match &cli.command {
        Command::Solve { puzzle, n } => match cmd_solve(*puzzle, *n) {
            Ok(()) => Ok(()),
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
        },
        Command::Run => cmd_run(&cli),
        Command::Profile { samples } => cmd_profile(&cli, *samples),
        Command::Analyze { runs } => cmd_analyze(cli.out_dir.as_deref(), runs),
        Command::Replay { run } => cmd_replay(run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
