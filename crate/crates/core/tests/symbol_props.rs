mod common;

use mhd_core::frequency_symbol::distance_to_critical_set;
use mhd_core::symmetrizer::derivative_report;
use mhd_core::{eigen_modes, symbol_coefficients, BasicState, FrequencyPoint, PointTag};
use proptest::prelude::*;

fn state() -> impl Strategy<Value = BasicState> {
    (0u64..1000).prop_map(|seed| common::random_states(seed, 1, 0.3)[0])
}

fn omegas(
    s: &BasicState,
    p: &FrequencyPoint,
) -> Option<(num_complex::Complex64, num_complex::Complex64)> {
    let m = eigen_modes(s, p).ok()?;
    Some((m.omega1?, m.omega2))
}

fn rel(a: num_complex::Complex64, b: num_complex::Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn omegas_are_continuous_along_arcs(s in state(), theta0 in 0.0f64..std::f64::consts::TAU, phi in 0.0f64..1.2) {
        let ds = 1e-4;
        let at = |i: usize| FrequencyPoint::from_angles(theta0 + i as f64 * ds / phi.cos(), phi);
        let pts: Vec<FrequencyPoint> = (0..500).map(at).collect();
        let clear = |p: &FrequencyPoint| {
            let b = FrequencyPoint { gamma: 0.0, delta: p.delta, eta: p.eta }.scaled(1.0 / p.delta.hypot(p.eta));
            distance_to_critical_set(&s, &b) > 0.1
        };
        prop_assume!(pts.iter().all(clear));
        let mut prev = omegas(&s, &pts[0]).unwrap();
        for p in &pts[1..] {
            let cur = omegas(&s, p).unwrap();
            prop_assert!((cur.0 - prev.0).norm() <= 10.0 * ds, "omega1 jump {}", (cur.0 - prev.0).norm());
            prop_assert!((cur.1 - prev.1).norm() <= 10.0 * ds, "omega2 jump {}", (cur.1 - prev.1).norm());
            prev = cur;
        }
    }

    #[test]
    fn real_parts_grow_with_gamma(s in state(), theta in 0.0f64..std::f64::consts::TAU) {
        let mut kappa = f64::INFINITY;
        for phi in [1e-3f64, 1e-2, 0.1, 0.5, 1.0, 1.5] {
            let p = FrequencyPoint::from_angles(theta, phi);
            if let Some((w1, w2)) = omegas(&s, &p) {
                kappa = kappa.min(w1.re / p.gamma).min(w2.re / p.gamma);
            }
        }
        prop_assert!(kappa > 0.0, "kappa = {kappa}");
    }

    #[test]
    fn boundary_entries_are_imaginary_with_real_derivatives(s in state(), theta in 0.0f64..std::f64::consts::TAU) {
        let p = FrequencyPoint::on_circle(theta);
        prop_assume!(distance_to_critical_set(&s, &p) > 1e-2);
        let r = derivative_report(&s, &p).unwrap();
        prop_assert!(r.a12_real_part <= 1e-12 && r.a21_real_part <= 1e-12);
        prop_assert!(r.d_a12.im.abs() <= 1e-6 * r.d_a12.norm().max(1.0), "{}", r.d_a12);
        prop_assert!(r.d_a21.im.abs() <= 1e-6 * r.d_a21.norm().max(1.0), "{}", r.d_a21);
    }

    #[test]
    fn omega_square_derivatives_at_null_points(s in state()) {
        for tag in [PointTag::Omega1ZeroA, PointTag::Omega1ZeroB] {
            for p in common::special(&s, tag) {
                let Ok(r) = derivative_report(&s, &p) else { continue };
                let d = r.d_omega1_sq;
                prop_assert!(d.norm() > 1e-6, "{tag:?}: {d}");
                prop_assert!(d.re.abs() <= 1e-6 * d.norm(), "{tag:?}: {d}");
                // the difference step is 1e-3, so compare only away from the poles
                let pole_gap = [PointTag::PoleP1, PointTag::PoleP2, PointTag::PoleP3]
                    .iter()
                    .flat_map(|t| common::special(&s, *t))
                    .map(|q| q.dist(&p))
                    .fold(f64::INFINITY, f64::min);
                if pole_gap > 0.05 {
                    prop_assert!(rel(d, r.d_omega1_sq_exact) <= 1e-6);
                }
            }
        }
        for p in common::special(&s, PointTag::Omega2Zero) {
            let r = derivative_report(&s, &p).unwrap();
            let d = r.d_omega2_sq / (s.eps * s.eps);
            prop_assert!(d.norm() > 1e-6 && d.re.abs() <= 1e-6 * d.norm(), "{d}");
        }
    }

    #[test]
    fn a12_zero_has_nonzero_derivatives(s in state()) {
        for p in common::special(&s, PointTag::Omega1ZeroA) {
            let Ok(r) = derivative_report(&s, &p) else { continue };
            let co = symbol_coefficients(&s, &p).unwrap();
            prop_assert!(co.a12.norm() <= 1e-12);
            prop_assert!(r.d_a12.norm() > 1e-6 && r.d_a21.norm() > 1e-6);
        }
    }

    #[test]
    fn homogeneous_of_degree_one(s in state(), theta in 0.0f64..std::f64::consts::TAU, phi in 0.0f64..1.5) {
        let p = FrequencyPoint::from_angles(theta, phi);
        let Ok(c0) = symbol_coefficients(&s, &p) else { return Ok(()) };
        let w0 = omegas(&s, &p);
        for r in [0.5, 2.0] {
            let q = p.scaled(r);
            let c1 = symbol_coefficients(&s, &q).unwrap();
            for (a, b) in [(c0.a12, c1.a12), (c0.a21, c1.a21), (c0.a34, c1.a34), (c0.a43, c1.a43)] {
                prop_assert!(rel(a * r, b) <= 1e-12, "r = {r}: {a} vs {b}");
            }
            if let (Some((a1, a2)), Some((b1, b2))) = (w0, omegas(&s, &q)) {
                prop_assert!(rel(a1 * r, b1) <= 1e-10 && rel(a2 * r, b2) <= 1e-10);
            }
        }
    }
}
