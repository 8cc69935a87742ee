#![allow(dead_code)]

use mhd_core::symmetrizer::special_points;
use mhd_core::{check_hypotheses, stability_class, BasicState, FrequencyPoint, PointTag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(1, 2, 1.5, 1, 0.7, 0.01)`: two simple boundary roots away from every critical point.
pub fn two_root_state() -> BasicState {
    BasicState::new(1.0, 2.0, 1.5, 1.0, 0.7, 0.01).unwrap()
}

/// States on which the local symmetrizers certify at moderate radii; the
/// first covers every case except `Omega1ZeroA`, the second covers that one.
pub fn certification_states() -> [BasicState; 2] {
    [
        BasicState::new(0.869, 2.922, 1.497, 1.242, 1.336, 0.534).unwrap(),
        BasicState::new(1.018, 2.408, 2.118, 1.435, 1.448, 0.565).unwrap(),
    ]
}

/// Random states passing every hypothesis, with `eps <= eps_max` and a
/// relative margin of at least `1e-3` from `H^2 = min(1/alpha, rho v^2)`.
pub fn random_states(seed: u64, n: usize, eps_max: f64) -> Vec<BasicState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let s = BasicState::new(
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.3..3.0),
            rng.gen_range(0.2..2.0),
            rng.gen_range(0.2..2.0),
            rng.gen_range(0.005..eps_max),
        )
        .unwrap();
        let rep = check_hypotheses(&s, 1e-3);
        let h2 = s.h * s.h;
        let m = (1.0 / s.alpha()).min(s.rho * s.v * s.v);
        if rep.all_pass() && ((h2 - m) / m).abs() > 1e-3 && stability_class(&s).is_ok() {
            out.push(s);
        }
    }
    out
}

/// First special point of `tag`, in the order returned by `special_points`.
pub fn special(s: &BasicState, tag: PointTag) -> Vec<FrequencyPoint> {
    special_points(s)
        .into_iter()
        .filter(|(t, _)| *t == tag)
        .map(|(_, p)| p)
        .collect()
}
