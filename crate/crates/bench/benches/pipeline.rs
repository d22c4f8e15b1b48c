use criterion::{black_box, criterion_group, criterion_main, Criterion};
use growthgap::arithmetic::cf_expand;
use growthgap::cocycle::{good_in_orbit, stable_trace};
use growthgap::pipeline::{run_pipeline, PipelineOptions};
use growthgap::rigidity::free_disc_search;
use growthgap::{IrrationalSpec, PlanarMap, Vec2};

fn arithmetic(c: &mut Criterion) {
    let golden = IrrationalSpec::golden_mean();
    c.bench_function("cf_expand golden depth 200", |b| b.iter(|| cf_expand(black_box(&golden), 200).unwrap()));
    let surd: IrrationalSpec = "surd:1,-2,7,1".parse().unwrap();
    c.bench_function("cf_expand surd depth 30", |b| b.iter(|| cf_expand(black_box(&surd), 30).unwrap()));
}

fn cocycle(c: &mut Criterion) {
    let f = PlanarMap::from_name("standard-map", &[("k", 6.0)]).unwrap();
    let x = Vec2::new(0.123, 0.456);
    let mut g = c.benchmark_group("cocycle");
    g.sample_size(20);
    g.bench_function("stable_trace q=1e4", |b| b.iter(|| stable_trace(&f, black_box(x), 10_000).unwrap()));
    g.bench_function("good_in_orbit q=1e4", |b| b.iter(|| good_in_orbit(&f, black_box(x), 10_000, 1.5).unwrap()));
    g.finish();
}

fn certify(c: &mut Criterion) {
    let saddle = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
    let opts = PipelineOptions { q: 200, ..Default::default() };
    let mut g = c.benchmark_group("certify");
    g.sample_size(10);
    g.bench_function("pipeline linear-saddle q=200", |b| b.iter(|| run_pipeline(&saddle, black_box(&opts)).unwrap()));
    g.finish();
}

fn rigidity(c: &mut Criterion) {
    let rot = PlanarMap::from_name("rigid-rotation", &[("eps", 0.3)]).unwrap();
    let mut g = c.benchmark_group("rigidity");
    g.sample_size(10);
    g.bench_function("free_disc 5000 trials", |b| b.iter(|| free_disc_search(&rot, 0.3, black_box(5000), 16, 1).unwrap()));
    g.finish();
}

criterion_group!(benches, arithmetic, cocycle, certify, rigidity);
criterion_main!(benches);
