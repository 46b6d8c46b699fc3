use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qgres_bench::{graphs, probe, search_window};
use qgres_core::{det_secular, find_spectral_points, scattering_matrix, SearchOptions};

fn determinant(c: &mut Criterion) {
    for (name, g) in graphs() {
        c.bench_function(&format!("det/{name}"), |b| b.iter(|| det_secular(&g, black_box(probe()))));
    }
}

fn scattering(c: &mut Criterion) {
    for (name, g) in graphs() {
        c.bench_function(&format!("smatrix/{name}"), |b| b.iter(|| scattering_matrix(&g, black_box(2.345)).unwrap()));
    }
}

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    for (name, g) in graphs().into_iter().take(2) {
        group.bench_function(name, |b| {
            b.iter(|| find_spectral_points(&g, &search_window(), &SearchOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, determinant, scattering, search);
criterion_main!(benches);
