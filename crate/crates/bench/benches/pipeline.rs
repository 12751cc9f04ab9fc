use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use labelforge_bench::{box_pairs, dense_problem, pipeline_config, washington_problem};
use labelforge_core::geometry::boxes_intersect;
use labelforge_core::optimizer::{evolve, init_population, OptimizerConfig, Rng64};
use labelforge_core::parallel::{scatter_generate_gather, WorkerPlan};
use labelforge_core::quality::{FitnessTable, Placement, QualityWeights, Scorer};
use labelforge_core::{run_pipeline, synthetic, LayerConfig};
use rand::SeedableRng;

fn geometry(c: &mut Criterion) {
    let pairs = box_pairs(1024);
    c.bench_function("sat_1024_pairs", |b| {
        b.iter(|| pairs.iter().filter(|(x, y)| boxes_intersect(black_box(x), black_box(y))).count())
    });
}

fn scoring(c: &mut Criterion) {
    let problem = washington_problem();
    let scorer = Scorer::new(&problem.features, QualityWeights::default());
    let genes = vec![0u8; problem.q()];
    let placement = Placement::from_genes(&problem, &genes);
    c.bench_function("total_score_washington", |b| b.iter(|| scorer.total_score(black_box(&placement))));
    c.bench_function("fitness_table_build_washington", |b| b.iter(|| FitnessTable::new(&problem, &scorer)));
    let table = FitnessTable::new(&problem, &scorer);
    c.bench_function("table_evaluate_washington", |b| b.iter(|| table.evaluate(black_box(&genes))));
}

fn optimizer(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve_generation");
    for (name, problem) in [("washington", washington_problem()), ("dense", dense_problem())] {
        let scorer = Scorer::new(&problem.features, QualityWeights::default());
        let table = FitnessTable::new(&problem, &scorer);
        let cfg = OptimizerConfig::default();
        let mut rng = Rng64::seed_from_u64(1);
        let pop = init_population(&table, &cfg, &mut rng);
        group.bench_function(name, |b| b.iter(|| evolve(&pop, &cfg, &table, &mut rng)));
    }
    group.finish();
}

fn parallel(c: &mut Criterion) {
    let features = synthetic::dense(1);
    let mut group = c.benchmark_group("candidate_gather_dense");
    for w in [1, 2, 4] {
        let plan = WorkerPlan::new(features.len(), w, 1, 500).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(w), &plan, |b, plan| {
            b.iter(|| scatter_generate_gather(features.clone(), LayerConfig::default(), plan).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("pipeline_washington_500");
    group.sample_size(10);
    for w in [1, 2, 4] {
        let cfg = pipeline_config(w, 500);
        group.bench_with_input(BenchmarkId::from_parameter(w), &cfg, |b, cfg| {
            b.iter(|| run_pipeline(synthetic::washington(1), cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, geometry, scoring, optimizer, parallel);
criterion_main!(benches);
