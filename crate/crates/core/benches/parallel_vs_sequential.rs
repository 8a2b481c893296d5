use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ideawaves::integrator::hopf_sweep_with;
use ideawaves::pipeline::{random_walk_baseline, run_report_on_residuals, FitConfig};
use ideawaves::stability::stability_map_with;
use ideawaves::timeseries::{normalize_unit_range, random_walk};
use ideawaves::{State, Strategy};

const STRATEGIES: [(&str, Strategy); 2] = [
    ("sequential", Strategy::Sequential),
    ("parallel", Strategy::Parallel),
];

fn stability_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("stability_map");
    for resolution in [50usize, 200, 400] {
        for (name, strategy) in STRATEGIES {
            group.bench_with_input(BenchmarkId::new(name, resolution), &resolution, |b, &n| {
                b.iter(|| {
                    stability_map_with(0.5, 0.4, (0.0, 3.0), (0.0, 3.0), black_box(n), strategy)
                        .unwrap()
                })
            });
        }
    }
    group.finish();
}

fn hopf_sweep(c: &mut Criterion) {
    let alphas = [1.0, 1.25, 1.4, 1.45, 1.55, 1.6, 1.75, 2.0];
    let mut group = c.benchmark_group("hopf_sweep");
    group
        .sample_size(10)
        .measurement_time(Duration::from_secs(20));
    for (name, strategy) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| {
                hopf_sweep_with(
                    0.5,
                    0.4,
                    black_box(&alphas),
                    &State::default_initial(),
                    2000.0,
                    0.01,
                    10,
                    strategy,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn walk_baseline(c: &mut Criterion) {
    let residual = normalize_unit_range(&random_walk(208, 1));
    let mut group = c.benchmark_group("random_walk_baseline");
    group.sample_size(10);
    for (name, strategy) in STRATEGIES {
        let cfg = FitConfig {
            strategy,
            ..FitConfig::default()
        };
        group.bench_function(name, |b| {
            b.iter(|| random_walk_baseline(black_box(&residual), &cfg, 42).unwrap())
        });
    }
    group.finish();
}

fn report(c: &mut Criterion) {
    let words: Vec<(String, Vec<f64>)> = (0..16)
        .map(|k| (format!("w{k}"), random_walk(208, 100 + k)))
        .collect();
    let mut group = c.benchmark_group("report_16_words");
    group
        .sample_size(10)
        .measurement_time(Duration::from_secs(30));
    for (name, strategy) in STRATEGIES {
        let cfg = FitConfig {
            strategy,
            n_random_walks: 200,
            ..FitConfig::default()
        };
        group.bench_function(name, |b| {
            b.iter(|| run_report_on_residuals(black_box(&words), &cfg, 42).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, stability_grid, hopf_sweep, walk_baseline, report);
criterion_main!(benches);
