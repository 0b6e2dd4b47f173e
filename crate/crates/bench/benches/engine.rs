use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use evalforge_core::analytics::{indicator_correlations, pearson};
use evalforge_core::scoring::{aggregate_team, rank_discipline, weighted_mean, WeightingPolicy};
use evalforge_core::simulate::{generate, reliability_experiment, SimConfig};
use evalforge_core::workflow::plan_cycle;
use evalforge_core::{DisciplineId, ValidatedForm};

fn scores(n: usize) -> (Vec<f64>, Vec<f64>) {
    let s = (0..n).map(|i| (i % 10 + 1) as f64).collect();
    let w = (0..n).map(|i| ((i * 7) % 6 + 5) as f64).collect();
    (s, w)
}

fn bench_weighted_mean(c: &mut Criterion) {
    let mut g = c.benchmark_group("weighted_mean");
    for n in [8, 64, 1024] {
        let (s, w) = scores(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| weighted_mean(black_box(&s), black_box(&w)))
        });
    }
    g.finish();
}

fn bench_aggregation(c: &mut Criterion) {
    let project = generate(&SimConfig::calibrated(1)).unwrap();
    let forms: Vec<ValidatedForm> =
        project.forms.iter().cloned().map(|f| ValidatedForm::try_from(f).unwrap()).collect();
    let team = forms[0].team_id().clone();
    let one: Vec<ValidatedForm> = forms.iter().filter(|f| f.team_id() == &team).cloned().collect();
    c.bench_function("aggregate_team", |b| b.iter(|| aggregate_team(black_box(&one), WeightingPolicy::Linear)));

    let summaries: Vec<_> = project
        .teams
        .iter()
        .map(|t| {
            let fs: Vec<ValidatedForm> = forms.iter().filter(|f| f.team_id() == &t.id).cloned().collect();
            aggregate_team(&fs, WeightingPolicy::Linear).unwrap()
        })
        .collect();
    c.bench_function("rank_93_teams", |b| b.iter(|| rank_discipline(black_box(&summaries))));
    c.bench_function("indicator_correlations_93_teams", |b| b.iter(|| indicator_correlations(black_box(&summaries))));
}

fn bench_pearson(c: &mut Criterion) {
    let x: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
    let y: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.11).cos()).collect();
    c.bench_function("pearson_1000", |b| b.iter(|| pearson(black_box(&x), black_box(&y))));
}

fn bench_planner(c: &mut Criterion) {
    let ids: Vec<DisciplineId> = (0..16).map(|i| DisciplineId::new(format!("d{i:02}"))).collect();
    let blackouts: BTreeSet<(DisciplineId, u32)> =
        ids.iter().enumerate().map(|(i, d)| (d.clone(), (i % 8) as u32)).collect();
    c.bench_function("plan_cycle_16_8_2", |b| b.iter(|| plan_cycle(black_box(&ids), 8, 2, black_box(&blackouts))));
    let too_many: Vec<DisciplineId> = (0..17).map(|i| DisciplineId::new(format!("d{i:02}"))).collect();
    c.bench_function("plan_cycle_infeasible_17", |b| {
        b.iter(|| plan_cycle(black_box(&too_many), 8, 2, &BTreeSet::new()))
    });
}

fn bench_simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.bench_function("generate_calibrated", |b| b.iter(|| generate(black_box(&SimConfig::calibrated(2)))));
    g.bench_function("reliability_100", |b| {
        b.iter(|| reliability_experiment(black_box(&SimConfig::reliability(true, 3)), 100))
    });
    g.finish();
}

criterion_group!(benches, bench_weighted_mean, bench_aggregation, bench_pearson, bench_planner, bench_simulation);
criterion_main!(benches);
