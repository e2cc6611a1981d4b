use certimeasure::{
    approximate_fixed_point, assemble, build_map, interval_newton, norms_of_powers, EigenOptions, Ival,
    MapDescriptor, Partition, SchemeKind,
};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_assembly(c: &mut Criterion) {
    let map = build_map(&MapDescriptor::named("lanford")).unwrap();
    let mut g = c.benchmark_group("assemble");
    for n in [1024usize, 16384] {
        let part = Partition::new(n).unwrap();
        for scheme in [SchemeKind::Ulam, SchemeKind::Hat] {
            g.bench_with_input(BenchmarkId::new(format!("{scheme:?}"), n), &n, |b, _| {
                b.iter(|| assemble(black_box(&map), &part, scheme).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_norms(c: &mut Criterion) {
    let map = build_map(&MapDescriptor::named("lanford")).unwrap();
    let mut g = c.benchmark_group("norms_of_powers");
    g.sample_size(10);
    for n in [256usize, 1024] {
        let mat = assemble(&map, &Partition::new(n).unwrap(), SchemeKind::Ulam).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &mat, |b, m| {
            b.iter(|| norms_of_powers(black_box(m), 10).unwrap())
        });
    }
    g.finish();
}

fn bench_eigen(c: &mut Criterion) {
    let map = build_map(&MapDescriptor::named("lanford")).unwrap();
    let mat = assemble(&map, &Partition::new(65536).unwrap(), SchemeKind::Ulam).unwrap();
    let opts = EigenOptions::default();
    let mut g = c.benchmark_group("eigen");
    g.sample_size(10);
    g.bench_function("lanford_65536", |b| b.iter(|| approximate_fixed_point(black_box(&mat), &opts).unwrap()));
    g.finish();
}

fn bench_interval(c: &mut Criterion) {
    let xs: Vec<Ival> = (1..1000).map(|k| Ival::ratio(k, 1000)).collect();
    c.bench_function("ival_mul_add", |b| {
        b.iter(|| xs.iter().fold(Ival::ZERO, |acc, &x| acc * x + x))
    });
    c.bench_function("interval_newton_sqrt2", |b| {
        b.iter(|| {
            interval_newton(|x| Ok(x.sqr()), |x| Ok(x * 2.0), Ival::point(2.0), Ival::new(1.0, 2.0).unwrap(), 0.0)
                .unwrap()
        })
    });
}

criterion_group!(benches, bench_assembly, bench_norms, bench_eigen, bench_interval);
criterion_main!(benches);
