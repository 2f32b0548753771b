use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use errbudget::anneal::{chain_rng, Chain};
use errbudget::budget::Rounding;
use errbudget::{tfim_model, AnnealConfig, Preset, TfimConfig, ToleranceVector};

fn evaluate(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    for (name, preset) in [("three_param", Preset::ThreeParam), ("redundancy_100", Preset::Redundancy(100))] {
        let model = tfim_model(&TfimConfig::with_n(26), preset).unwrap();
        let theta = ToleranceVector::uniform(model.dimension(), 1e-3).unwrap();
        group.bench_function(name, |b| b.iter(|| model.evaluate(black_box(&theta)).unwrap()));
    }
    group.finish();
}

fn expand_flat(c: &mut Criterion) {
    let config = TfimConfig {
        n: 4,
        rounding: Rounding::Ceil,
        ..TfimConfig::default()
    };
    let model = tfim_model(&config, Preset::ThreeParam).unwrap();
    let theta = ToleranceVector::new(vec![0.2, 0.25, 1e-6]).unwrap();
    c.bench_function("expand_flat/tfim_n4", |b| {
        b.iter(|| model.expand_flat(black_box(&theta), 1_000_000).unwrap())
    });
}

fn anneal_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("anneal_step");
    let config = AnnealConfig::default();
    for (name, preset) in [("three_param", Preset::ThreeParam), ("redundancy_100", Preset::Redundancy(100))] {
        let model = tfim_model(&TfimConfig::with_n(26), preset).unwrap();
        let init = ToleranceVector::uniform(model.dimension(), config.epsilon_init).unwrap();
        group.bench_function(name, |b| {
            b.iter_batched_ref(
                || Chain::new(&model, 0.1, &config, init.clone(), chain_rng(0)).unwrap(),
                |chain| {
                    for _ in 0..100 {
                        black_box(chain.step());
                    }
                },
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, evaluate, expand_flat, anneal_step);
criterion_main!(benches);
