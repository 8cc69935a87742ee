use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mhd_bench::{certification_state, spiral, two_root_state};
use mhd_core::symmetrizer::{certify_neighborhood, far_boundary_point, INITIAL_RADIUS};
use mhd_core::{
    eigen_modes, lift, lopatinskii_det, make_cutoff, scan_boundary_roots, symbol_coefficients,
    FrontSample, PointTag,
};
use num_complex::Complex64;

fn symbol(c: &mut Criterion) {
    let s = two_root_state();
    let pts = spiral(1000);
    c.bench_function("symbol_coefficients x1000", |b| {
        b.iter(|| {
            for p in &pts {
                black_box(symbol_coefficients(&s, p).ok());
            }
        })
    });
    c.bench_function("eigen_modes x1000", |b| {
        b.iter(|| {
            for p in &pts {
                black_box(eigen_modes(&s, p).ok());
            }
        })
    });
    c.bench_function("lopatinskii_det x1000", |b| {
        b.iter(|| {
            for p in &pts {
                black_box(lopatinskii_det(&s, p));
            }
        })
    });
}

fn roots(c: &mut Criterion) {
    let s = two_root_state();
    c.bench_function("scan_boundary_roots 4000", |b| {
        b.iter(|| black_box(scan_boundary_roots(&s, 4000, 1e-6).unwrap()))
    });
}

fn certification(c: &mut Criterion) {
    let s = certification_state();
    let far = far_boundary_point(&s);
    let mut g = c.benchmark_group("certify");
    g.sample_size(10);
    g.bench_function("boundary Lop-OK ball", |b| {
        b.iter(|| {
            black_box(
                certify_neighborhood(&s, &far, PointTag::BoundaryLopOK, INITIAL_RADIUS).unwrap(),
            )
        })
    });
    g.finish();
}

fn lifting(c: &mut Criterion) {
    let f = FrontSample::from_fn(256, 20.0, |x| Complex64::new(0.3 * (-x * x).exp(), 0.0)).unwrap();
    let cut = make_cutoff(16.0).unwrap();
    let grid: Vec<f64> = (0..=256).map(|i| i as f64 / 16.0).collect();
    c.bench_function("lift 256x257", |b| {
        b.iter(|| black_box(lift(&f, &cut, &grid)))
    });
}

criterion_group!(benches, symbol, roots, certification, lifting);
criterion_main!(benches);
