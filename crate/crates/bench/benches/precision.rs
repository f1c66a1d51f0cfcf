use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use precision_bench::sample_with_latents;
use precision_core::fixtures;
use precision_core::regression::fit_spline_surface;
use precision_core::simulation::compute_observed_scores;
use precision_core::*;

const N: usize = 100_000;

fn eap_scoring(c: &mut Criterion) {
    let mut group = c.benchmark_group("eap_scoring");
    group.sample_size(10);
    for (name, model) in [("two_pl", fixtures::two_pl_example()), ("mhgrm", fixtures::mhgrm_example())] {
        let (sample, _) = sample_with_latents(&model, N, 1);
        let grid = GridConfig::default().build(model.latent()).unwrap();
        let score = ScoreDefinition::Eap(LatentScore::Component(0));
        group.bench_function(BenchmarkId::new(name, N), |b| {
            b.iter(|| compute_observed_scores(&model, &sample.responses, score, Some(&grid)).unwrap())
        });
    }
    group.finish();
}

fn analytic(c: &mut Criterion) {
    let mut group = c.benchmark_group("analytic_coefficients");
    for (name, model) in [("one_factor", fixtures::one_factor_example()), ("two_pl", fixtures::two_pl_example())] {
        group.bench_function(name, |b| {
            b.iter(|| analytic_coefficients(black_box(&model), &GridConfig::default(), DEFAULT_PATTERN_CAP).unwrap())
        });
    }
    let wide: ModelSpec = TwoPlModel::unidimensional(&[0.5; 12], &[1.2; 12]).unwrap().into();
    group.bench_function("two_pl_12_items", |b| {
        b.iter(|| analytic_coefficients(black_box(&wide), &GridConfig::default(), DEFAULT_PATTERN_CAP).unwrap())
    });
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    for (name, model) in [
        ("one_factor", fixtures::one_factor_example()),
        ("two_pl", fixtures::two_pl_example()),
        ("mhgrm", fixtures::mhgrm_example()),
    ] {
        group.bench_function(BenchmarkId::new(name, N), |b| b.iter(|| McSample::generate(&model, N, 7).unwrap()));
    }
    group.finish();
}

fn spline_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("spline_fit");
    group.sample_size(10);
    let model = fixtures::mhgrm_example();
    let (sample, eta) = sample_with_latents(&model, N, 3);
    let sum = compute_observed_scores(&model, &sample.responses, ScoreDefinition::Summed, None).unwrap();
    let first: Vec<f64> = sample.latents.column(0);
    group.bench_function(BenchmarkId::new("d1", N), |b| b.iter(|| fit_spline_surface(&sum, &first, 1, 8).unwrap()));
    group.bench_function(BenchmarkId::new("d2", N), |b| b.iter(|| fit_spline_surface(&sum, &eta, 2, 8).unwrap()));
    group.finish();
}

criterion_group!(benches, eap_scoring, analytic, simulation, spline_fit);
criterion_main!(benches);
