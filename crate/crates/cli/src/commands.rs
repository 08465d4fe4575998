//! Subcommand implementations.

use crate::config::{
    load_run_config, parse_strategy, resolve_backend, BackendOverrides, ScenarioFilter,
};
use anyhow::{bail, Context, Result};
use mcrank_core::backend::{catalog_from_items, Backend};
use mcrank_core::gen::{dataset_stats, generate_scenario, synth_pool, Sample, Scenario};
use mcrank_core::io::{load_pools, read_jsonl, write_jsonl};
use mcrank_core::metrics::{
    aggregate, emit_report, score_sample, GroupBy, MetricsReport, ReportFormat, SampleScore,
};
use mcrank_core::pipeline::{append_trace, read_trace, run_strategy, RankingRun, Strategy};
use mcrank_core::seed::{self, tag};
use mcrank_core::ItemLevel;
use rand::seq::SliceRandom;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;

pub fn pool(out: &Path, level: &str, size: usize, seed: u64) -> Result<()> {
    let levels: Vec<ItemLevel> = match level {
        "token" => vec![ItemLevel::Token],
        "paragraph" => vec![ItemLevel::Paragraph],
        "both" => vec![ItemLevel::Token, ItemLevel::Paragraph],
        other => bail!("unknown level {:?} (expected token|paragraph|both)", other),
    };
    if size < 7 {
        bail!("pool size must be at least 7 (the largest item draw)");
    }
    let mut entries = Vec::new();
    for l in levels {
        entries.extend(synth_pool(l, size, seed)?.entries);
    }
    write_jsonl(out, &entries)?;
    println!("wrote {} pool entries to {}", entries.len(), out.display());
    Ok(())
}

pub fn gen(
    pool_path: &Path,
    out: &Path,
    per_category: u32,
    gen_seed: u64,
    filter: ScenarioFilter,
) -> Result<()> {
    let pools = load_pools(pool_path)
        .with_context(|| format!("cannot load pool {}", pool_path.display()))?;
    if pools.is_empty() {
        bail!("pool file {} contains no items", pool_path.display());
    }
    let mut samples: Vec<Sample> = Vec::new();
    let mut scenarios_emitted = 0usize;
    for scenario in Scenario::all() {
        if !filter.matches_scenario(scenario.level, scenario.n_conditions, scenario.n_items) {
            continue;
        }
        let Some(pool) = pools.iter().find(|p| p.level == scenario.level) else {
            continue;
        };
        let generated = generate_scenario(pool, scenario, per_category, gen_seed)
            .with_context(|| format!("generation failed for scenario {}", scenario.label()))?;
        println!("{}: {} samples", scenario.label(), generated.len());
        samples.extend(generated);
        scenarios_emitted += 1;
    }
    if scenarios_emitted == 0 {
        bail!("no scenario matches the filter (or the pool lacks the filtered levels)");
    }
    write_jsonl(out, &samples)?;
    println!(
        "\nwrote {} samples across {} scenarios to {}",
        samples.len(),
        scenarios_emitted,
        out.display()
    );
    println!(
        "\naverage samples per condition count:\n{}",
        dataset_stats(&samples)
    );
    Ok(())
}

pub struct RunArgs {
    pub config: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub strategy: Option<String>,
    pub overrides: BackendOverrides,
    pub seed: Option<u64>,
    pub limit: Option<usize>,
    pub filter: Option<ScenarioFilter>,
    pub out: Option<PathBuf>,
}

pub fn run(args: RunArgs) -> Result<()> {
    let file_cfg = match &args.config {
        Some(path) => load_run_config(path)?,
        None => Default::default(),
    };

    let dataset_path = args
        .dataset
        .or(file_cfg.dataset)
        .context("no dataset given (use --dataset or the config file)")?;
    let strategy_name = args
        .strategy
        .or(file_cfg.strategy)
        .context("no strategy given (use --strategy base|cot|exsir)")?;
    let strategy = parse_strategy(&strategy_name)?;
    let out_dir = args
        .out
        .or(file_cfg.output_dir)
        .unwrap_or_else(|| PathBuf::from("out"));
    let seed = args.seed.or(file_cfg.seed).unwrap_or(0);
    let limit = args.limit.or(file_cfg.sample_limit);
    let filter = args.filter.or(file_cfg.filter).unwrap_or_default();

    let mut backend_cfg = resolve_backend(file_cfg.backend.as_ref(), &args.overrides);
    if args.overrides.seed.is_none() && file_cfg.backend.as_ref().and_then(|b| b.rng_seed).is_none()
    {
        backend_cfg.rng_seed = seed;
    }

    let samples: Vec<Sample> = read_jsonl(&dataset_path)
        .with_context(|| format!("cannot load dataset {}", dataset_path.display()))?;
    if samples.is_empty() {
        bail!("dataset {} is empty", dataset_path.display());
    }

    let selected = select_samples(&samples, &filter, limit, seed);
    if selected.is_empty() {
        bail!("no samples match the filter");
    }

    let trace_path = out_dir.join(format!("trace-{}.jsonl", strategy.name()));
    let done: BTreeSet<String> = read_trace(&trace_path)?
        .into_iter()
        .map(|r| r.sample_id)
        .collect();
    let pending: Vec<&Sample> = selected
        .iter()
        .copied()
        .filter(|s| !done.contains(&s.id))
        .collect();
    println!(
        "{} samples selected, {} already traced, {} to run",
        selected.len(),
        selected.len() - pending.len(),
        pending.len()
    );
    if pending.is_empty() {
        println!("trace {} is already complete", trace_path.display());
        return Ok(());
    }

    let catalog = catalog_from_items(pending.iter().flat_map(|s| s.items_presented.iter()));
    let backend = Backend::new(backend_cfg.clone(), catalog)
        .map_err(|e| anyhow::anyhow!("backend setup failed: {}", e))?;

    let runs = execute(&pending, &backend, strategy, backend_cfg.concurrency_limit);
    let invalid = runs.iter().filter(|r| r.predicted.is_none()).count();
    let prompt_tokens: u64 = runs.iter().map(|r| r.usage_totals.prompt_tokens).sum();
    let completion_tokens: u64 = runs.iter().map(|r| r.usage_totals.completion_tokens).sum();
    append_trace(&trace_path, &runs)?;
    println!(
        "ran {} samples ({} invalid), usage: {} prompt + {} completion tokens",
        runs.len(),
        invalid,
        prompt_tokens,
        completion_tokens
    );
    println!("trace written to {}", trace_path.display());
    Ok(())
}

/// Apply the scenario filter, then a seeded per-scenario subsample.
fn select_samples<'s>(
    samples: &'s [Sample],
    filter: &ScenarioFilter,
    limit: Option<usize>,
    seed: u64,
) -> Vec<&'s Sample> {
    let mut by_scenario: BTreeMap<Scenario, Vec<&Sample>> = BTreeMap::new();
    for sample in samples.iter().filter(|s| filter.matches_sample(s)) {
        by_scenario.entry(sample.scenario).or_default().push(sample);
    }
    let mut out = Vec::new();
    for (scenario, mut group) in by_scenario {
        if let Some(limit) = limit {
            let mut rng = seed::rng(seed, &[tag::SUBSAMPLE, scenario.index()]);
            group.shuffle(&mut rng);
            group.truncate(limit);
            group.sort_by(|a, b| a.id.cmp(&b.id));
        }
        out.extend(group);
    }
    out
}

/// Run samples on a small worker pool; results come back in input order so
/// trace bytes do not depend on scheduling.
fn execute(
    pending: &[&Sample],
    backend: &Backend,
    strategy: Strategy,
    concurrency: usize,
) -> Vec<RankingRun> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<RankingRun>>> = pending.iter().map(|_| Mutex::new(None)).collect();
    let workers = concurrency.clamp(1, pending.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, AtomicOrdering::SeqCst);
                if idx >= pending.len() {
                    break;
                }
                let run = run_strategy(pending[idx], backend, strategy);
                *slots[idx].lock().unwrap() = Some(run);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled slot"))
        .collect()
}

fn score_all<'a>(
    runs: &[RankingRun],
    samples: &'a [Sample],
) -> Result<(Vec<SampleScore>, BTreeMap<String, &'a Sample>)> {
    let by_id: BTreeMap<String, &Sample> = samples.iter().map(|s| (s.id.clone(), s)).collect();
    let mut scores = Vec::new();
    let mut skipped = 0usize;
    for run in runs {
        match by_id.get(&run.sample_id) {
            None => {
                eprintln!(
                    "warning: trace sample {} not found in dataset, skipped",
                    run.sample_id
                );
                skipped += 1;
            }
            Some(sample) => match score_sample(run, sample) {
                Ok(score) => scores.push(score),
                Err(e) => {
                    eprintln!("warning: {}", e);
                    skipped += 1;
                }
            },
        }
    }
    if scores.is_empty() {
        bail!(
            "no trace entries joined to the dataset ({} skipped)",
            skipped
        );
    }
    Ok((scores, by_id))
}

fn write_reports(report: &MetricsReport, out_dir: &Path, format: &str) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    if format == "csv" || format == "both" {
        std::fs::write(
            out_dir.join("report.csv"),
            emit_report(report, ReportFormat::Csv),
        )?;
    }
    if format == "md" || format == "both" {
        std::fs::write(
            out_dir.join("report.md"),
            emit_report(report, ReportFormat::Markdown),
        )?;
    }
    Ok(())
}

pub fn eval(trace_path: &Path, dataset_path: &Path, out_dir: &Path, group_by: &str) -> Result<()> {
    let group_by = GroupBy::from_str(group_by).map_err(|e| anyhow::anyhow!(e))?;
    let samples: Vec<Sample> = read_jsonl(dataset_path)
        .with_context(|| format!("cannot load dataset {}", dataset_path.display()))?;
    let runs = read_trace(trace_path)?;
    if runs.is_empty() {
        bail!("trace {} is empty", trace_path.display());
    }
    let (scores, by_id) = score_all(&runs, &samples)?;
    let report = aggregate(&scores, &by_id, group_by).map_err(|e| anyhow::anyhow!(e))?;
    std::fs::create_dir_all(out_dir)?;
    write_jsonl(&out_dir.join("scores.jsonl"), &scores)?;
    write_reports(&report, out_dir, "both")?;
    println!(
        "scored {} runs; reports in {}",
        scores.len(),
        out_dir.display()
    );
    print!(
        "{}",
        String::from_utf8_lossy(&emit_report(&report, ReportFormat::Csv))
    );
    Ok(())
}

pub fn report(
    scores_path: &Path,
    dataset_path: &Path,
    out_dir: &Path,
    format: &str,
    group_by: &str,
) -> Result<()> {
    if !matches!(format, "csv" | "md" | "both") {
        bail!("unknown format {:?} (expected csv|md|both)", format);
    }
    let group_by = GroupBy::from_str(group_by).map_err(|e| anyhow::anyhow!(e))?;
    let samples: Vec<Sample> = read_jsonl(dataset_path)?;
    let scores: Vec<SampleScore> = read_jsonl(scores_path)?;
    if scores.is_empty() {
        bail!("scores file {} is empty", scores_path.display());
    }
    let by_id: BTreeMap<String, &Sample> = samples.iter().map(|s| (s.id.clone(), s)).collect();
    let report = aggregate(&scores, &by_id, group_by).map_err(|e| anyhow::anyhow!(e))?;
    write_reports(&report, out_dir, format)?;
    println!("reports written to {}", out_dir.display());
    Ok(())
}
