use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sisctl_bench::{rdra, small_world, sw_config};
use sisctl_core::control::{simulate, OnlineAlgo, ScoringContext, StrategyConfig};
use sisctl_core::epidemic::{sample_next_event, EpidemicParams, EpidemicState};
use sisctl_core::rng::{self, Stream};
use sisctl_core::scoring::{lrsr_scores, ScorerKind, SpectralOptions};

fn event_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_next_event");
    for n in [100usize, 1000, 10_000] {
        let g = small_world(n);
        let params = EpidemicParams::new(1.0, 1.0, 0.0, 0).unwrap();
        let half: Vec<usize> = (0..n).step_by(2).collect();
        let state = EpidemicState::new(&g, half);
        let mut r = rng::stream(1, Stream::Epidemic);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| sample_next_event(black_box(&state), &params, &mut r).unwrap())
        });
    }
    group.finish();
}

fn event_replay(c: &mut Criterion) {
    let g = small_world(1000);
    let params = EpidemicParams::new(0.5, 1.0, 0.0, 0).unwrap();
    c.bench_function("gillespie_1000_events", |b| {
        b.iter(|| {
            let mut state = EpidemicState::fully_infected(&g);
            let mut r = rng::stream(2, Stream::Epidemic);
            for _ in 0..1000 {
                let e = sample_next_event(&state, &params, &mut r).unwrap();
                state.apply_event(&g, &e).unwrap();
            }
            state.n_infected()
        })
    });
}

fn controlled_runs(c: &mut Criterion) {
    let g = small_world(100);
    let ctx = ScoringContext::default();
    let mut group = c.benchmark_group("simulate_sw100_300_rounds");
    for (name, strategy) in [
        ("rdra", rdra()),
        ("sdra_mean", StrategyConfig::sdra(ScorerKind::Lrie, OnlineAlgo::Mean)),
        ("sdra_sqrt", StrategyConfig::sdra(ScorerKind::Lrie, OnlineAlgo::CcmSqrt)),
    ] {
        let cfg = sw_config(strategy, 0.5, 300);
        group.bench_function(name, |b| {
            b.iter(|| {
                let mut scorer = ctx.scorer(ScorerKind::Lrie, 5).unwrap();
                simulate(&g, &cfg, &mut scorer, None, 5).unwrap().rows.len()
            })
        });
    }
    group.finish();
}

fn spectral_scores(c: &mut Criterion) {
    let g = small_world(200);
    c.bench_function("lrsr_scores_sw200", |b| {
        b.iter(|| lrsr_scores(black_box(&g), SpectralOptions::default()).1)
    });
}

criterion_group!(benches, event_sampling, event_replay, controlled_runs, spectral_scores);
criterion_main!(benches);
