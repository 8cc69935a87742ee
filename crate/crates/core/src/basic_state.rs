//! Piecewise-constant background state and its standing hypotheses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance used by hypothesis checks.
pub const HYPOTHESIS_TOL: f64 = 1e-9;

/// Background state on both sides of the interface.
///
/// `h` is the tangential field in the plasma, `hc` the one in vacuum and
/// `eps` the ratio between the flow speed scale and the speed of light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState", into = "RawState")]
pub struct BasicState {
    pub rho: f64,
    pub sound_speed: f64,
    pub v: f64,
    pub h: f64,
    pub hc: f64,
    pub eps: f64,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct RawState {
    rho: f64,
    sound_speed: f64,
    v: f64,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "Hc")]
    hc: f64,
    eps: f64,
}

impl TryFrom<RawState> for BasicState {
    type Error = Error;
    fn try_from(r: RawState) -> Result<Self> {
        BasicState::new(r.rho, r.sound_speed, r.v, r.h, r.hc, r.eps)
    }
}

impl From<BasicState> for RawState {
    fn from(s: BasicState) -> Self {
        RawState {
            rho: s.rho,
            sound_speed: s.sound_speed,
            v: s.v,
            h: s.h,
            hc: s.hc,
            eps: s.eps,
        }
    }
}

impl BasicState {
    pub fn new(rho: f64, sound_speed: f64, v: f64, h: f64, hc: f64, eps: f64) -> Result<Self> {
        let all = [rho, sound_speed, v, h, hc, eps];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidState("non-finite parameter".into()));
        }
        if rho <= 0.0 {
            return Err(Error::InvalidState(format!(
                "rho must be positive, got {rho}"
            )));
        }
        if sound_speed <= 0.0 {
            return Err(Error::InvalidState(format!(
                "sound_speed must be positive, got {sound_speed}"
            )));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidState(format!(
                "eps must lie in (0,1), got {eps}"
            )));
        }
        Ok(BasicState {
            rho,
            sound_speed,
            v,
            h,
            hc,
            eps,
            alpha: 1.0 / (rho * sound_speed * sound_speed),
        })
    }

    /// The reference configuration used throughout the tests and docs.
    pub fn reference() -> Self {
        BasicState::new(1.0, 2.0, 2.0, 1.0, 0.7, 0.01).expect("valid")
    }

    /// `1/(rho c^2)`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut r = RawState::from(*self);
        match name {
            "rho" => r.rho = value,
            "sound_speed" => r.sound_speed = value,
            "v" => r.v = value,
            "H" => r.h = value,
            "Hc" => r.hc = value,
            "eps" => r.eps = value,
            other => return Err(Error::InvalidInput(format!("unknown parameter {other}"))),
        }
        BasicState::try_from(r)
    }

    pub fn alfven_speed(&self) -> f64 {
        self.h.abs() / self.rho.sqrt()
    }

    pub fn fast_interface_speed(&self) -> f64 {
        self.h.abs() / (self.rho * (1.0 + self.alpha * self.h * self.h)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub alpha: f64,
    pub alfven_speed: f64,
    pub fast_interface_speed: f64,
    pub z_plus: f64,
    pub z_minus: f64,
    pub discriminant_d: f64,
}

pub fn derive_constants(state: &BasicState) -> DerivedConstants {
    let a = state.alpha();
    let h2 = state.h * state.h;
    let h4 = h2 * h2;
    let hc4 = state.hc.powi(4);
    let d = a * a * (h4 - hc4).powi(2) + 4.0 * hc4;
    let num = a * (h4 - hc4) + 2.0 * h2;
    let den = 2.0 * (1.0 + a * h2);
    DerivedConstants {
        alpha: a,
        alfven_speed: state.alfven_speed(),
        fast_interface_speed: state.fast_interface_speed(),
        z_plus: (num + d.sqrt()) / den,
        z_minus: (num - d.sqrt()) / den,
        discriminant_d: d,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub pass: bool,
    /// Signed relative distance from the forbidden set; `None` when the
    /// condition does not apply to this state.
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b) / s
    }
}

fn check(name: &str, margin: f64, tol: f64) -> HypothesisCheck {
    HypothesisCheck {
        name: name.into(),
        pass: margin.abs() > tol,
        margin: Some(margin),
    }
}

pub fn check_hypotheses(state: &BasicState, tol: f64) -> HypothesisReport {
    let c = derive_constants(state);
    let h2 = state.h * state.h;
    let rv2 = state.rho * state.v * state.v;
    let mut checks = vec![
        check("Hvbase", state.v.abs().min(state.hc.abs()), tol),
        check("Hrbase", state.rho.min(state.h.abs()), tol),
        check("notnull", 1.0 - c.alpha * h2, tol),
        check("notalfven", rel_gap(state.v.abs(), c.alfven_speed), tol),
        check("notvH", rel_gap(state.v.abs(), c.fast_interface_speed), tol),
    ];
    if h2 < (1.0 / c.alpha).min(rv2) {
        let mp = rel_gap(rv2, c.z_plus);
        let mm = rel_gap(rv2, c.z_minus);
        let m = if mp.abs() <= mm.abs() { mp } else { mm };
        checks.push(check("notres", m, tol));
    } else {
        checks.push(HypothesisCheck {
            name: "notres".into(),
            pass: true,
            margin: None,
        });
    }
    HypothesisReport { checks }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityClass {
    TwoBoundaryRoots,
    NoRoots,
}

/// Two roots when `H^2 < min(1/alpha, rho v^2)`, none otherwise.
pub fn stability_class(state: &BasicState) -> Result<StabilityClass> {
    let rep = check_hypotheses(state, HYPOTHESIS_TOL);
    if !rep.all_pass() {
        return Err(Error::Hypothesis(rep.failures().join(",")));
    }
    let h2 = state.h * state.h;
    let m = (1.0 / state.alpha()).min(state.rho * state.v * state.v);
    if rel_gap(h2, m).abs() <= HYPOTHESIS_TOL {
        return Err(Error::Hypothesis("H^2 equals min(1/alpha, rho v^2)".into()));
    }
    Ok(if h2 < m {
        StabilityClass::TwoBoundaryRoots
    } else {
        StabilityClass::NoRoots
    })
}

/// Root-existence rule as it comes out of the small-eps argument: only
/// `alpha H^2 < 1` matters.
pub fn root_rule_alpha(state: &BasicState) -> StabilityClass {
    if state.alpha() * state.h * state.h < 1.0 {
        StabilityClass::TwoBoundaryRoots
    } else {
        StabilityClass::NoRoots
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_is_reciprocal() {
        let s = BasicState::new(1.0, 2.0, 2.0, 1.0, 0.7, 0.01).unwrap();
        assert_eq!(s.alpha(), 0.25);
        assert!((s.fast_interface_speed() - 1.0 / 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn z_pm_against_quadratic_companion() {
        // alpha = 0.25, H^2 = 1, Hc^2 = 0.5
        let s = BasicState::new(1.0, 2.0, 2.0, 1.0, 0.5f64.sqrt(), 0.01).unwrap();
        let c = derive_constants(&s);
        // independent: eigenvalues of the 2x2 companion of (1+aH^2) z^2 - b z + c
        let a2 = 1.25;
        let b = 0.25 * (1.0 - 0.25) + 2.0;
        let c0 = 1.0 - 0.25;
        let m = nalgebra::Matrix2::new(0.0, -c0 / a2, 1.0, b / a2);
        let mut ev: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((c.z_plus - ev[1]).abs() < 1e-12);
        assert!((c.z_minus - ev[0]).abs() < 1e-12);
        assert!((c.z_plus - 1.28197).abs() < 1e-5);
        assert!((c.z_minus - 0.46803).abs() < 1e-5);
    }

    #[test]
    fn reference_hypotheses() {
        let s = BasicState::reference();
        let r = check_hypotheses(&s, HYPOTHESIS_TOL);
        assert!(r.all_pass(), "{r:?}");
        let c = derive_constants(&s);
        assert!((c.z_plus - 1.27529).abs() < 1e-5);
        assert!((c.z_minus - 0.47669).abs() < 1e-5);
    }

    #[test]
    fn equality_cases_fail() {
        let s = BasicState::new(1.0, 1.0, 2.0, 1.0, 0.7, 0.01).unwrap();
        assert!(
            !check_hypotheses(&s, HYPOTHESIS_TOL)
                .get("notnull")
                .unwrap()
                .pass
        );
        let s = BasicState::new(1.0, 2.0, 1.0, 1.0, 0.7, 0.01).unwrap();
        assert!(
            !check_hypotheses(&s, HYPOTHESIS_TOL)
                .get("notalfven")
                .unwrap()
                .pass
        );
    }

    #[test]
    fn classes() {
        assert_eq!(
            stability_class(&BasicState::reference()).unwrap(),
            StabilityClass::TwoBoundaryRoots
        );
        let s = BasicState::new(1.0, 0.5, 0.4, 1.0, 0.7, 0.01).unwrap();
        assert_eq!(stability_class(&s).unwrap(), StabilityClass::NoRoots);
    }

    #[test]
    fn rejects_bad_states() {
        assert!(BasicState::new(0.0, 1.0, 1.0, 1.0, 1.0, 0.1).is_err());
        assert!(BasicState::new(1.0, -1.0, 1.0, 1.0, 1.0, 0.1).is_err());
        assert!(BasicState::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn json_keys() {
        let s = BasicState::reference();
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"H\":1.0") && j.contains("\"Hc\":0.7"));
        let back: BasicState = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<BasicState>(
            r#"{"rho":-1,"sound_speed":1,"v":1,"H":1,"Hc":1,"eps":0.1}"#
        )
        .is_err());
    }
}
