mod common;

use mhd_core::energy_verify::{
    evaluate_solution, lift, pole_decoupling, probe, reconstruct_front, solve_stable_bvp,
    BoundaryData,
};
use mhd_core::frequency_symbol::distance_to_critical_set;
use mhd_core::{BasicState, FrequencyPoint, PointTag};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn state() -> impl Strategy<Value = BasicState> {
    (0u64..1000).prop_map(|seed| common::random_states(seed, 1, 0.3)[0])
}

fn data(seed: u64) -> BoundaryData {
    BoundaryData::random(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn rel(a: Complex64, b: Complex64, scale: f64) -> f64 {
    (a - b).norm() / scale.max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn outputs_are_linear_in_the_data(
        s in state(),
        theta in 0.0f64..std::f64::consts::TAU,
        phi in 0.05f64..1.5,
        seed in 0u64..1_000_000,
        lr in -2.0f64..2.0,
        li in -2.0f64..2.0,
    ) {
        let p = FrequencyPoint::from_angles(theta, phi);
        let (g1, g2) = (data(seed), data(seed + 1));
        let l = Complex64::new(lr, li);
        let g3 = BoundaryData { g_hat: g1.g_hat + g2.g_hat * l };
        let (a1, a2) = solve_stable_bvp(&s, &p, &g1).unwrap();
        let (b1, b2) = solve_stable_bvp(&s, &p, &g2).unwrap();
        let (c1, c2) = solve_stable_bvp(&s, &p, &g3).unwrap();
        let sc = a1.norm() + a2.norm() + l.norm() * (b1.norm() + b2.norm());
        prop_assert!(rel(c1, a1 + b1 * l, sc) <= 1e-10);
        prop_assert!(rel(c2, a2 + b2 * l, sc) <= 1e-10);

        let t1 = evaluate_solution(&s, &p, a1, a2, 0.0).unwrap();
        let t2 = evaluate_solution(&s, &p, b1, b2, 0.0).unwrap();
        let t3 = evaluate_solution(&s, &p, c1, c2, 0.0).unwrap();
        let f1 = reconstruct_front(&s, &p, &g1, &t1);
        let f2 = reconstruct_front(&s, &p, &g2, &t2);
        let f3 = reconstruct_front(&s, &p, &g3, &t3);
        prop_assert!(rel(f3, f1 + f2 * l, f1.norm() + l.norm() * f2.norm()) <= 1e-10);

        // amplification is the trace norm per unit data
        let r = probe(&s, &p, &g1).unwrap();
        let scaled = probe(&s, &p, &BoundaryData { g_hat: g1.g_hat * Complex64::new(3.0, 0.0) }).unwrap();
        prop_assert!((r.amplification - scaled.amplification).abs() <= 1e-10 * r.amplification);
    }
}

/// `gamma^2 |V(0)|^2 / |g|^2` stays bounded as `gamma -> 0`, roots included.
#[test]
fn trace_bound_assembles_over_a_grid() {
    for s in [common::two_root_state(), common::certification_states()[0]] {
        let g = data(7);
        let bases: Vec<FrequencyPoint> = (0..720)
            .map(|i| FrequencyPoint::on_circle(i as f64 * std::f64::consts::TAU / 720.0))
            .filter(|p| distance_to_critical_set(&s, p) > 0.05)
            .collect();
        let level = |gm: f64| {
            bases
                .iter()
                .map(|b| {
                    let a = probe(&s, &lift(b, gm), &g).unwrap().amplification;
                    gm * gm * a * a
                })
                .fold(0.0, f64::max)
        };
        let fitted = level(0.1);
        for gm in [1e-2, 1e-3, 1e-4] {
            let c = level(gm);
            assert!(
                c <= 10.0 * fitted,
                "gamma = {gm}: {c:e} vs fitted {fitted:e}"
            );
        }
    }
}

#[test]
fn pole_systems_force_unstable_components_to_zero() {
    let s = common::two_root_state();
    for tag in [PointTag::PoleP1, PointTag::PoleP3] {
        for c in common::special(&s, tag) {
            for (i, gm) in [1e-1, 1e-2, 1e-3].into_iter().enumerate() {
                let dir = FrequencyPoint::from_angles(c.eta.atan2(c.delta) + 0.01 * i as f64, 0.0);
                let p = lift(
                    &FrequencyPoint {
                        gamma: 0.0,
                        delta: dir.delta,
                        eta: dir.eta,
                    },
                    gm,
                );
                let d = pole_decoupling(&s, &c, tag, &p).unwrap();
                assert!(d.forced_zero, "{tag:?} at {p:?}: {d:?}");
                assert!(d.growth.iter().all(|&g| g > 0.0), "{d:?}");
            }
        }
    }
}

#[test]
fn non_pole_cases_rejected() {
    let s = common::two_root_state();
    let c = common::special(&s, PointTag::PoleP2)[0];
    assert!(pole_decoupling(&s, &c, PointTag::PoleP2, &lift(&c, 0.1)).is_err());
}
