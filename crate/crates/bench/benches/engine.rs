use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use elicit_bench::{chain, hiv, HIV_QUALITATIVE, HIV_STATEMENTS};
use elicit_core::bounds::{extract_linear, solve_bounds, Closure};
use elicit_core::canonical::{compile_system, normalize};
use elicit_core::focus::decompose;
use elicit_core::sampler::{reduce_equalities, run_rejection, SamplerConfig};
use std::hint::black_box;

fn compile(c: &mut Criterion) {
    let (net, st) = hiv(&format!("{HIV_STATEMENTS}{HIV_QUALITATIVE}"));
    c.bench_function("compile_hiv", |b| {
        b.iter(|| normalize(&compile_system(black_box(&st), &net).unwrap()))
    });
}

fn bounds(c: &mut Criterion) {
    let (net, st) = hiv(HIV_STATEMENTS);
    let system = normalize(&compile_system(&st, &net).unwrap());
    let linear = extract_linear(&system);
    c.bench_function("bounds_hiv_exact", |b| {
        b.iter(|| solve_bounds(black_box(&linear), Closure::Exact).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let (net, st) = hiv(HIV_STATEMENTS);
    let system = normalize(&compile_system(&st, &net).unwrap());
    let plan = reduce_equalities(&system).unwrap();
    let mut group = c.benchmark_group("sampling");
    group.sample_size(10);
    group.bench_function("hiv_1000_accepted", |b| {
        b.iter_batched(
            || SamplerConfig {
                n_target: 1000,
                max_draws: 10_000_000,
                ..SamplerConfig::default()
            },
            |config| run_rejection(&system, &plan, &config, None).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn triangulation(c: &mut Criterion) {
    let net = chain(12);
    c.bench_function("decompose_chain_12", |b| {
        b.iter(|| decompose(black_box(&net)))
    });
}

criterion_group!(benches, compile, bounds, sampling, triangulation);
criterion_main!(benches);
