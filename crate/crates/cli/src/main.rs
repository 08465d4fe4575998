//! `mcrank` — generate multi-conditional ranking benchmarks, run ranking
//! strategies against a backend, and score the results.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::ScenarioFilter;
use mcrank_core::backend::BackendKind;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "mcrank", version, about = "Multi-conditional ranking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Write a synthetic labeled item pool (JSONL, one item per line).
    Pool {
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        /// Item level: token, paragraph, or both.
        #[arg(long, default_value = "both")]
        level: String,
        /// Entries per level.
        #[arg(long, default_value_t = 60)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a dataset from a pool across the selected scenarios.
    Gen {
        /// Pool file (may contain both item levels).
        #[arg(long)]
        pool: PathBuf,
        /// Output dataset file.
        #[arg(long)]
        out: PathBuf,
        /// Candidate samples per condition category and scenario.
        #[arg(long, default_value_t = 10)]
        per_category: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scenario selector, e.g. level=token,conds=2|3,items=5.
        #[arg(long)]
        filter: Option<ScenarioFilter>,
    },
    /// Execute a ranking strategy over a dataset, writing a trace.
    Run {
        /// TOML config; command-line flags override file values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// base | cot | exsir
        #[arg(long)]
        strategy: Option<String>,
        /// oracle | http
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        base_url: Option<String>,
        /// Env var holding the API key (http backend).
        #[arg(long)]
        api_key_env: Option<String>,
        /// Oracle adjacent-swap noise probability.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Seeded per-scenario subsample size.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        filter: Option<ScenarioFilter>,
        /// Output directory for the trace.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        concurrency: Option<usize>,
    },
    /// Score a trace against its dataset and write reports.
    Eval {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Output directory (scores.jsonl, report.csv, report.md).
        #[arg(long)]
        out: PathBuf,
        /// category (per-category rows + All) or scenario (All rows only).
        #[arg(long, default_value = "category")]
        group_by: String,
    },
    /// Re-render reports from an existing scores file.
    Report {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// csv | md | both
        #[arg(long, default_value = "both")]
        format: String,
        #[arg(long, default_value = "category")]
        group_by: String,
    },
}

fn parse_backend_kind(s: &str) -> anyhow::Result<BackendKind> {
    match s.to_ascii_lowercase().as_str() {
        "http" => Ok(BackendKind::Http),
        "oracle" => Ok(BackendKind::Oracle),
        other => anyhow::bail!("unknown backend {:?} (expected http|oracle)", other),
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pool {
            out,
            level,
            size,
            seed,
        } => commands::pool(&out, &level, size, seed),
        Command::Gen {
            pool,
            out,
            per_category,
            seed,
            filter,
        } => commands::gen(&pool, &out, per_category, seed, filter.unwrap_or_default()),
        Command::Run {
            config,
            dataset,
            strategy,
            backend,
            model,
            base_url,
            api_key_env,
            epsilon,
            seed,
            limit,
            filter,
            out,
            cache_dir,
            concurrency,
        } => {
            let backend_kind = backend.as_deref().map(parse_backend_kind).transpose();
            match backend_kind {
                Err(e) => Err(e),
                Ok(kind) => commands::run(commands::RunArgs {
                    config,
                    dataset,
                    strategy,
                    overrides: config::BackendOverrides {
                        kind,
                        base_url,
                        api_key_env,
                        model,
                        epsilon,
                        seed,
                        cache_dir,
                        concurrency,
                    },
                    seed,
                    limit,
                    filter,
                    out,
                }),
            }
        }
        Command::Eval {
            trace,
            dataset,
            out,
            group_by,
        } => commands::eval(&trace, &dataset, &out, &group_by),
        Command::Report {
            scores,
            dataset,
            out,
            format,
            group_by,
        } => commands::report(&scores, &dataset, &out, &format, &group_by),
    };
    if let Err(err) = result {
        eprintln!("mcrank: {:#}", err);
        std::process::exit(1);
    }
}
