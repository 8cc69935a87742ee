//! Inputs shared by the benchmarks in `benches/`.

use mhd_core::{BasicState, FrequencyPoint};

/// Two simple boundary roots, no critical point nearby.
pub fn two_root_state() -> BasicState {
    BasicState::new(1.0, 2.0, 1.5, 1.0, 0.7, 0.01).unwrap()
}

/// A state whose special points all certify at moderate radii.
pub fn certification_state() -> BasicState {
    BasicState::new(0.869, 2.922, 1.497, 1.242, 1.336, 0.534).unwrap()
}

/// `n` points on a spiral over the hemisphere.
pub fn spiral(n: usize) -> Vec<FrequencyPoint> {
    (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            FrequencyPoint::from_angles(i as f64 * 2.399_963_229_728_653, t.asin())
        })
        .collect()
}
