use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use latesens_bench::scenario_dataset;
use latesens_core::{
    bootstrap_ci, estimate_late, fit_cbps2_joint, fit_cbps_balance, fit_logistic_mle,
    generate_dataset, solve_alpha, BootstrapSettings, Method, ScenarioConfig,
};

fn bench_generation(c: &mut Criterion) {
    let cfg = ScenarioConfig::s1();
    c.bench_function("generate_dataset_n2000", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed = seed.wrapping_add(1);
            black_box(generate_dataset(&cfg, seed).unwrap())
        })
    });
}

fn bench_propensity(c: &mut Criterion) {
    let data = scenario_dataset("s1", 42);
    c.bench_function("fit_logistic_mle_n2000", |b| {
        b.iter(|| black_box(fit_logistic_mle(&data).unwrap()))
    });
    c.bench_function("fit_cbps_balance_n2000", |b| {
        b.iter(|| black_box(fit_cbps_balance(&data).unwrap()))
    });
}

fn bench_alpha_solve(c: &mut Criterion) {
    let data = scenario_dataset("s2", 42);
    let e_hat = fit_logistic_mle(&data)
        .unwrap()
        .predict_dataset(&data)
        .unwrap();
    c.bench_function("solve_alpha_n2000", |b| {
        b.iter(|| black_box(solve_alpha(&data, &e_hat, 3.0).unwrap()))
    });
}

fn bench_pipelines(c: &mut Criterion) {
    let data = scenario_dataset("s2", 42);
    for method in [Method::Glm3, Method::Cbps3, Method::Cbps2] {
        c.bench_function(&format!("estimate_late_{}_n2000", method.as_str()), |b| {
            b.iter(|| black_box(estimate_late(&data, 3.0, method).unwrap()))
        });
    }
    c.bench_function("fit_cbps2_joint_n2000", |b| {
        b.iter(|| black_box(fit_cbps2_joint(&data, 3.0).unwrap()))
    });
}

fn bench_bootstrap(c: &mut Criterion) {
    let data = scenario_dataset("s1", 7);
    let settings = BootstrapSettings {
        replicates: 50,
        level: 0.95,
        seed: 1,
    };
    let mut group = c.benchmark_group("bootstrap");
    group.sample_size(10);
    group.bench_function("bootstrap_ci_glm3_b50_n2000", |b| {
        b.iter_batched(
            || settings,
            |s| black_box(bootstrap_ci(&data, 0.0, Method::Glm3, &s).unwrap()),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_generation,
    bench_propensity,
    bench_alpha_solve,
    bench_pipelines,
    bench_bootstrap
);
criterion_main!(benches);
