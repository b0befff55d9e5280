use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use progest_bench::{corpus, hours_context, top_down, trained, ARITH, HOURS};
use progest_core::condsynth::{synthesize_condition, ModelKind, SynthConfig};
use progest_core::models::HashModel;
use progest_core::search::WidthSchedule;
use progest_core::{beam_search, exhaustive_search, SearchConfig, SearchProblem};

fn beam(c: &mut Criterion) {
    let ctx = hours_context();
    let model = HashModel { seed: 1 };
    let mut group = c.benchmark_group("beam");
    for (name, text, limit) in [("hours", HOURS, 9), ("arith", ARITH, 11)] {
        let rs = top_down(text);
        let p = SearchProblem::new(&rs, &ctx, &model);
        for w in [1, 5, 50] {
            let cfg = SearchConfig {
                widths: WidthSchedule::uniform(w),
                limit,
                ..Default::default()
            };
            group.bench_with_input(BenchmarkId::new(name, w), &cfg, |b, cfg| b.iter(|| beam_search(&p, cfg)));
        }
    }
    group.finish();
}

fn exhaustive(c: &mut Criterion) {
    let ctx = hours_context();
    let model = HashModel { seed: 1 };
    let rs = top_down(ARITH);
    let p = SearchProblem::new(&rs, &ctx, &model);
    c.bench_function("exhaustive/arith/9", |b| {
        b.iter(|| exhaustive_search(&p, 9, 10, &[], 10_000_000).unwrap())
    });
}

fn conditions(c: &mut Criterion) {
    let items = corpus(300);
    let mut group = c.benchmark_group("synthesize");
    for kind in [ModelKind::Frequency, ModelKind::Logistic] {
        let t = trained(&items, kind);
        let cfg = SynthConfig::default();
        group.bench_function(format!("{kind:?}"), |b| {
            b.iter(|| {
                for it in items.iter().take(20) {
                    synthesize_condition(&it.context, &t.templates, &t.model, &cfg).unwrap();
                }
            })
        });
    }
    group.finish();
    c.bench_function("train/logistic/300", |b| b.iter(|| trained(&items, ModelKind::Logistic)));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = beam, exhaustive, conditions
}
criterion_main!(benches);
