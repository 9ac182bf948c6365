use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rkrp_bench::{data, round};
use rkrp_core::decode::{decode, decode_systematic};
use rkrp_core::linalg::{khatri_rao_rowwise, solve_linear};
use rkrp_core::{CodeKind, DecodeOptions, StragglerPattern};

fn systematic_by_s1(c: &mut Criterion) {
    let r = round(CodeKind::RkrpSystematic, 10, 10, 200);
    let mut group = c.benchmark_group("systematic_decode_k100");
    for s1 in [1usize, 10, 50, 100] {
        let pattern = StragglerPattern::from_stragglers(1..=s1, 200).unwrap();
        let results = pattern.filter_results(r.results.clone());
        group.bench_with_input(BenchmarkId::from_parameter(s1), &results, |b, results| {
            b.iter(|| decode_systematic(&r.spec, black_box(results), &r.part, DecodeOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn decode_by_kind(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode_k49_s26");
    let stragglers: Vec<usize> = (1..=75).step_by(3).take(26).collect();
    let pattern = StragglerPattern::from_stragglers(stragglers, 75).unwrap();
    for kind in [CodeKind::RkrpNonsystematic, CodeKind::RkrpSystematic, CodeKind::Orthopoly] {
        let r = round(kind, 7, 7, 75);
        let results = pattern.filter_results(r.results.clone());
        group.bench_function(kind.as_str(), |b| {
            b.iter(|| decode(&r.spec, black_box(&results), &r.part, DecodeOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn kernels(c: &mut Criterion) {
    let p = data(200, 10, 3);
    let q = data(200, 10, 4);
    c.bench_function("khatri_rao_200x100", |b| b.iter(|| khatri_rao_rowwise(black_box(&p), black_box(&q)).unwrap()));
    let a = data(49, 49, 5);
    let rhs = data(49, 64, 6);
    c.bench_function("solve_49_rhs64", |b| b.iter(|| solve_linear(black_box(&a), black_box(&rhs)).unwrap()));
}

criterion_group!(benches, systematic_by_s1, decode_by_kind, kernels);
criterion_main!(benches);
