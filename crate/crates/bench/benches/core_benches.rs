//! Benchmarks for the hot paths: condition parsing/rendering, gold-ranking
//! folds, the exhaustive brute-force oracle, scenario generation, and a full
//! oracle-backed EXSIR run.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mcrank_core::backend::{catalog_from_items, Backend, BackendConfig};
use mcrank_core::gen::{generate_scenario, synth_pool, Sample, Scenario};
use mcrank_core::pipeline::{run_strategy, Strategy};
use mcrank_core::{brute_force_gold, gold_ranking, parse_condition, render_condition, ItemLevel};
use std::hint::black_box;

fn fixture_samples(n_items: u8) -> Vec<Sample> {
    let pool = synth_pool(ItemLevel::Token, 60, 1).unwrap();
    generate_scenario(&pool, Scenario::new(ItemLevel::Token, 3, n_items), 10, 42).unwrap()
}

fn bench_condition_dsl(c: &mut Criterion) {
    let surface = "(high priority): Items that have \"country of citizenship\" in \"France\" \
                   should appear at the beginning";
    c.bench_function("parse_condition", |b| {
        b.iter(|| parse_condition(black_box(surface)).unwrap())
    });
    let cond = parse_condition(surface).unwrap();
    c.bench_function("render_condition", |b| {
        b.iter(|| render_condition(black_box(&cond), true))
    });
}

fn bench_engine(c: &mut Criterion) {
    let samples = fixture_samples(7);
    let sample = samples[0].clone();
    c.bench_function("gold_ranking_3cond_7items", |b| {
        b.iter(|| {
            gold_ranking(
                black_box(&sample.items_presented),
                black_box(&sample.presented_order()),
                black_box(&sample.conditions_presented),
            )
            .unwrap()
        })
    });

    let small = fixture_samples(5)[0].clone();
    c.bench_function("brute_force_gold_3cond_5items", |b| {
        b.iter(|| {
            brute_force_gold(
                black_box(&small.items_presented),
                black_box(&small.presented_order()),
                black_box(&small.conditions_presented),
            )
            .unwrap()
        })
    });
}

fn bench_generation(c: &mut Criterion) {
    let pool = synth_pool(ItemLevel::Token, 60, 1).unwrap();
    let scenario = Scenario::new(ItemLevel::Token, 3, 5);
    c.bench_function("generate_scenario_20_per_category", |b| {
        b.iter(|| generate_scenario(black_box(&pool), scenario, 20, 42).unwrap())
    });
}

fn bench_exsir_oracle(c: &mut Criterion) {
    let samples = fixture_samples(5);
    let catalog = catalog_from_items(samples.iter().flat_map(|s| s.items_presented.iter()));
    let backend = Backend::new(BackendConfig::oracle(7, 0.0), catalog).unwrap();
    let sample = samples[0].clone();
    c.bench_function("exsir_oracle_run_3cond_5items", |b| {
        b.iter_batched(
            || sample.clone(),
            |s| run_strategy(&s, &backend, Strategy::Exsir),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(
    benches,
    bench_condition_dsl,
    bench_engine,
    bench_generation,
    bench_exsir_oracle
);
criterion_main!(benches);
