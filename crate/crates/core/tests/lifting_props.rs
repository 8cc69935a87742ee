use mhd_core::front_lifting::{decay_grid, linf_decay_check, verify_flatness};
use mhd_core::{lift, make_cutoff, FrontSample};
use num_complex::Complex64;
use proptest::prelude::*;

const N: usize = 64;
const LENGTH: f64 = 20.0;

/// Band-limited front from up to seven Fourier modes on each side.
fn front() -> impl Strategy<Value = FrontSample> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 15).prop_map(|c| {
        FrontSample::from_fn(N, LENGTH, |x| {
            c.iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let k = i as f64 - 7.0;
                    Complex64::new(*a, *b)
                        * Complex64::from_polar(1.0, std::f64::consts::TAU * k * x / LENGTH)
                })
                .sum()
        })
        .unwrap()
    })
}

/// `(int_0^M chi^2)^(1/2)` by composite Simpson.
fn chi_l2(m: f64) -> f64 {
    let cut = make_cutoff(m).unwrap();
    let n = 200_000;
    let h = m / n as f64;
    let mut acc = cut.chi(0.0).powi(2) + cut.chi(m).powi(2);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * cut.chi(i as f64 * h).powi(2);
    }
    (acc * h / 3.0).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trace_is_the_front(f in front(), m in 2.5f64..40.0) {
        let l = lift(&f, &make_cutoff(m).unwrap(), &[0.0, 0.5, 1.0]);
        let scale = f.values.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        prop_assert!(l.trace_error().unwrap() <= 1e-13 * scale);
    }

    #[test]
    fn lift_vanishes_beyond_m(f in front(), m in 2.5f64..10.0) {
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.1).collect();
        let l = lift(&f, &make_cutoff(m).unwrap(), &grid);
        prop_assert_eq!(l.tail_max(), 0.0);
    }

    #[test]
    fn sobolev_norm_is_controlled(f in front()) {
        prop_assume!(f.sobolev_norm(2.5) > 1e-6);
        let m = 3.0;
        let l = lift(&f, &make_cutoff(m).unwrap(), &decay_grid(m, 4096));
        let ratio = l.sobolev_norm(3.0) / f.sobolev_norm(2.5);
        prop_assert!((ratio - chi_l2(m)).abs() <= 1e-3 * chi_l2(m), "ratio {ratio}, expected {}", chi_l2(m));
    }
}

#[test]
fn zero_front_lifts_to_zero() {
    let f = FrontSample::from_fn(N, LENGTH, |_| Complex64::new(0.0, 0.0)).unwrap();
    let l = lift(&f, &make_cutoff(4.0).unwrap(), &decay_grid(4.0, 16));
    assert!(l.psi.iter().flatten().all(|z| z.norm() == 0.0));
    let d = linf_decay_check(&f, &[4.0, 16.0]).unwrap();
    assert!(d.ratios.iter().all(|&r| r == 0.0));
}

#[test]
fn single_mode_is_multiplied() {
    let xi0 = std::f64::consts::TAU * 3.0 / LENGTH;
    let f = FrontSample::from_fn(N, LENGTH, |x| Complex64::from_polar(1.0, xi0 * x)).unwrap();
    let cut = make_cutoff(4.0).unwrap();
    let grid = [0.0, 1e-4, 0.3, 1.0, 1.7, 2.5];
    let l = lift(&f, &cut, &grid);
    let br = (1.0 + xi0 * xi0).sqrt();
    for (i, &x1) in grid.iter().enumerate() {
        for (j, z) in l.psi[i].iter().enumerate() {
            let want = f.values[j] * cut.chi(x1 * br);
            assert!((z - want).norm() <= 1e-13, "x1 = {x1}");
        }
    }
    // the plateau makes the normal derivative vanish at the trace
    assert!(verify_flatness(&l, 1e-4).unwrap() <= 1e-12);
}

#[test]
fn flatness_estimate_shrinks_with_h() {
    let f = FrontSample::from_fn(N, LENGTH, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
    let l = lift(&f, &make_cutoff(8.0).unwrap(), &[0.0, 1e-1, 1e-2, 1e-3]);
    let e: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&h| verify_flatness(&l, h).unwrap())
        .collect();
    assert!(e[1] <= e[0] && e[2] <= e[1], "{e:?}");
}
