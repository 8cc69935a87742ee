mod common;

use mhd_core::{check_hypotheses, derive_constants, stability_class, BasicState, StabilityClass};
use proptest::prelude::*;

fn state() -> impl Strategy<Value = BasicState> {
    (
        0.2f64..5.0,
        0.2f64..5.0,
        0.05f64..5.0,
        0.05f64..5.0,
        0.0f64..5.0,
        0.0f64..0.5,
    )
        .prop_map(|(r, c, v, h, hc, e)| BasicState::new(r, c, v, h, hc, e).unwrap())
}

fn margins(s: &BasicState) -> Vec<(String, Option<f64>)> {
    check_hypotheses(s, 0.0)
        .checks
        .into_iter()
        .map(|c| (c.name, c.margin))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn z_ordering_and_discriminant(s in state()) {
        let c = derive_constants(&s);
        prop_assert!(c.z_plus >= c.z_minus);
        if s.hc != 0.0 {
            prop_assert!(c.discriminant_d > 0.0);
            prop_assert!(c.z_plus > c.z_minus);
        }
    }

    #[test]
    fn z_plus_exceeds_h2_iff_alpha_h2_below_one(s in state()) {
        let c = derive_constants(&s);
        let h2 = s.h * s.h;
        let ah2 = c.alpha * h2;
        prop_assume!((ah2 - 1.0).abs() > 1e-6 && s.hc > 1e-3);
        prop_assert_eq!(c.z_plus > h2, ah2 < 1.0, "z+ = {}, H^2 = {}, aH^2 = {}", c.z_plus, h2, ah2);
    }

    #[test]
    fn z_pm_solve_the_quadratic(s in state()) {
        let c = derive_constants(&s);
        let (a, h2, hc4) = (c.alpha, s.h * s.h, s.hc.powi(4));
        let f = |z: f64| (1.0 + a * h2) * z * z - (a * (h2 * h2 - hc4) + 2.0 * h2) * z + (h2 * h2 - hc4);
        let scale = 1.0 + h2 * h2 + hc4 + (1.0 + a * h2) * c.z_plus * c.z_plus;
        prop_assert!(f(c.z_plus).abs() <= 1e-12 * scale);
        prop_assert!(f(c.z_minus).abs() <= 1e-12 * scale);
    }

    #[test]
    fn margins_are_continuous(s in state(), k in 0usize..6, sign in prop::bool::ANY) {
        let names = ["rho", "sound_speed", "v", "H", "Hc", "eps"];
        let vals = [s.rho, s.sound_speed, s.v, s.h, s.hc, s.eps];
        let dx = if sign { 1e-9 } else { -1e-9 } * vals[k].max(1e-3);
        let t = s.with_param(names[k], vals[k] + dx).unwrap();
        for ((n0, m0), (n1, m1)) in margins(&s).into_iter().zip(margins(&t)) {
            prop_assert_eq!(&n0, &n1);
            if let (Some(a), Some(b)) = (m0, m1) {
                prop_assert!((a - b).abs() <= 1e-6, "{}: {} -> {}", n0, a, b);
            }
        }
    }

    #[test]
    fn class_follows_the_stated_rule(s in state()) {
        if let Ok(cls) = stability_class(&s) {
            let m = (1.0 / s.alpha()).min(s.rho * s.v * s.v);
            let expected = if s.h * s.h < m { StabilityClass::TwoBoundaryRoots } else { StabilityClass::NoRoots };
            prop_assert_eq!(cls, expected);
        }
    }
}

#[test]
fn hypothesis_examples() {
    let ok = BasicState::new(1.0, 2.0, 2.0, 1.0, 0.7, 0.01).unwrap();
    assert!(check_hypotheses(&ok, 1e-9).all_pass());

    let null = BasicState::new(1.0, 1.0, 2.0, 1.0, 0.7, 0.01).unwrap();
    assert_eq!(check_hypotheses(&null, 1e-9).failures(), vec!["notnull"]);

    let alfven = BasicState::new(1.0, 2.0, 1.0, 1.0, 0.7, 0.01).unwrap();
    assert!(check_hypotheses(&alfven, 1e-9)
        .failures()
        .contains(&"notalfven"));
}

#[test]
fn class_examples() {
    assert_eq!(
        stability_class(&BasicState::reference()).unwrap(),
        StabilityClass::TwoBoundaryRoots
    );
    let slow = BasicState::new(1.0, 0.5, 0.4, 1.0, 0.7, 0.01).unwrap();
    assert_eq!(stability_class(&slow).unwrap(), StabilityClass::NoRoots);
    // rho v^2 = H^2 exactly
    let edge = BasicState::new(1.0, 2.0, 1.0, 1.0, 0.7, 0.01).unwrap();
    assert!(stability_class(&edge).is_err());
}

#[test]
fn constructor_rejects_nonphysical_values() {
    assert!(BasicState::new(0.0, 1.0, 1.0, 1.0, 1.0, 0.1).is_err());
    assert!(BasicState::new(1.0, -1.0, 1.0, 1.0, 1.0, 0.1).is_err());
    assert!(BasicState::new(1.0, 1.0, f64::NAN, 1.0, 1.0, 0.1).is_err());
    assert!(BasicState::new(1.0, 1.0, 1.0, 1.0, 1.0, -0.1).is_err());
}

#[test]
fn serde_round_trip() {
    let s = common::two_root_state();
    let j = serde_json::to_string(&s).unwrap();
    assert!(j.contains("\"H\"") && j.contains("\"Hc\""));
    let t: BasicState = serde_json::from_str(&j).unwrap();
    assert_eq!(s, t);
    assert!(serde_json::from_str::<BasicState>(
        r#"{"rho":-1,"sound_speed":1,"v":1,"H":1,"Hc":1,"eps":0}"#
    )
    .is_err());
}
