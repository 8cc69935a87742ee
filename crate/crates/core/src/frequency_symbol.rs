//! Frequency points on the hemisphere, their classification, the reduced
//! 4x4 symbol with its eigenmodes, and the boundary symbols.
//!
//! All symbols are evaluated at arbitrary `(gamma, delta, eta)`; on the unit
//! hemisphere `k = 1`. Square-root branches at `gamma = 0` are fixed as the
//! limit from `gamma > 0` (see [`limit_sqrt`]).

use nalgebra::{Matrix3, RowVector4, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::basic_state::BasicState;
use crate::error::{Error, Pole, Result};
use crate::linalg::{c, re, C64, I, M2, M24, M4, V4};

/// Relative size below which a coefficient denominator counts as zero.
pub const POLE_TOL: f64 = 1e-12;
/// Default distance threshold used by [`classify_point`].
pub const CLASSIFY_TOL: f64 = 1e-6;
/// Step used to read off a branch as a limit from `gamma > 0`, relative to `k`.
pub const BRANCH_H: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPoint {
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
}

impl FrequencyPoint {
    pub fn new(gamma: f64, delta: f64, eta: f64) -> Result<Self> {
        if !(gamma.is_finite() && delta.is_finite() && eta.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        if gamma < 0.0 {
            return Err(Error::InvalidPoint(format!("gamma = {gamma} < 0")));
        }
        if gamma == 0.0 && delta == 0.0 && eta == 0.0 {
            return Err(Error::InvalidPoint("origin".into()));
        }
        Ok(FrequencyPoint { gamma, delta, eta })
    }

    /// Point on the `gamma = 0` circle at angle `theta`, `(delta, eta) = (cos, sin)`.
    pub fn on_circle(theta: f64) -> Self {
        FrequencyPoint {
            gamma: 0.0,
            delta: theta.cos(),
            eta: theta.sin(),
        }
    }

    /// Unit point from spherical coordinates: `gamma = sin(phi)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let phi = phi.clamp(0.0, std::f64::consts::FRAC_PI_2);
        FrequencyPoint {
            gamma: phi.sin(),
            delta: phi.cos() * theta.cos(),
            eta: phi.cos() * theta.sin(),
        }
    }

    /// Inverse of [`FrequencyPoint::from_angles`].
    pub fn angles(&self) -> (f64, f64) {
        let k = self.k();
        (
            self.eta.atan2(self.delta),
            (self.gamma / k).clamp(-1.0, 1.0).asin(),
        )
    }

    pub fn tau(&self) -> C64 {
        c(self.gamma, self.delta)
    }

    pub fn mu(&self, s: &BasicState) -> C64 {
        c(self.gamma, self.delta + s.v * self.eta)
    }

    pub fn k(&self) -> f64 {
        (self.gamma * self.gamma + self.delta * self.delta + self.eta * self.eta).sqrt()
    }

    pub fn scaled(&self, r: f64) -> Self {
        FrequencyPoint {
            gamma: self.gamma * r,
            delta: self.delta * r,
            eta: self.eta * r,
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        FrequencyPoint { gamma, ..*self }
    }

    /// Antipode in `(delta, eta)`, same `gamma`.
    pub fn mirrored(&self) -> Self {
        FrequencyPoint {
            gamma: self.gamma,
            delta: -self.delta,
            eta: -self.eta,
        }
    }

    pub fn dist(&self, o: &FrequencyPoint) -> f64 {
        ((self.gamma - o.gamma).powi(2)
            + (self.delta - o.delta).powi(2)
            + (self.eta - o.eta).powi(2))
        .sqrt()
    }

    pub fn on_sigma(&self) -> bool {
        (self.k() - 1.0).abs() <= 1e-12
    }
}

pub fn normalize_to_sigma(gamma: f64, delta: f64, eta: f64) -> Result<FrequencyPoint> {
    let p = FrequencyPoint::new(gamma, delta, eta)?;
    Ok(p.scaled(1.0 / p.k()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointTag {
    Interior,
    BoundaryLopOK,
    BoundaryLopRoot,
    Omega1ZeroA,
    Omega1ZeroB,
    Omega2Zero,
    PoleP1,
    PoleP2,
    PoleP3,
}

impl PointTag {
    pub fn is_pole(self) -> bool {
        matches!(self, PointTag::PoleP1 | PointTag::PoleP2 | PointTag::PoleP3)
    }

    pub fn is_omega_zero(self) -> bool {
        matches!(
            self,
            PointTag::Omega1ZeroA | PointTag::Omega1ZeroB | PointTag::Omega2Zero
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointClass {
    pub tag: PointTag,
    pub distance: f64,
}

/// One of the finitely many special points on the `gamma = 0` circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub tag: PointTag,
    pub point: FrequencyPoint,
}

fn speed_points(tag: PointTag, s: &BasicState, speed: f64, out: &mut Vec<CriticalPoint>) {
    // delta + v eta = +-speed * eta
    for sg in [1.0, -1.0] {
        let (d, e) = (sg * speed - s.v, 1.0);
        let n = (d * d + e * e).sqrt();
        for sign in [1.0, -1.0] {
            out.push(CriticalPoint {
                tag,
                point: FrequencyPoint {
                    gamma: 0.0,
                    delta: sign * d / n,
                    eta: sign * e / n,
                },
            });
        }
    }
}

/// Poles and omega-zero points of the reduced symbol, both `eta` signs.
pub fn critical_points(s: &BasicState) -> Vec<CriticalPoint> {
    let mut out = Vec::new();
    let nv = (1.0 + s.v * s.v).sqrt();
    for sign in [1.0, -1.0] {
        out.push(CriticalPoint {
            tag: PointTag::PoleP1,
            point: FrequencyPoint {
                gamma: 0.0,
                delta: -sign * s.v / nv,
                eta: sign / nv,
            },
        });
    }
    speed_points(PointTag::PoleP2, s, s.fast_interface_speed(), &mut out);
    for sign in [1.0, -1.0] {
        out.push(CriticalPoint {
            tag: PointTag::PoleP3,
            point: FrequencyPoint {
                gamma: 0.0,
                delta: 0.0,
                eta: sign,
            },
        });
    }
    speed_points(PointTag::Omega1ZeroA, s, s.alfven_speed(), &mut out);
    speed_points(
        PointTag::Omega1ZeroB,
        s,
        1.0 / (s.alpha() * s.rho).sqrt(),
        &mut out,
    );
    let n3 = (1.0 + s.eps * s.eps).sqrt();
    for sd in [1.0, -1.0] {
        for sign in [1.0, -1.0] {
            out.push(CriticalPoint {
                tag: PointTag::Omega2Zero,
                point: FrequencyPoint {
                    gamma: 0.0,
                    delta: sign * sd / n3,
                    eta: sign * s.eps / n3,
                },
            });
        }
    }
    out
}

/// Nearest critical point with the given tag.
pub fn nearest_critical(
    s: &BasicState,
    pt: &FrequencyPoint,
    tag: PointTag,
) -> Option<(CriticalPoint, f64)> {
    critical_points(s)
        .into_iter()
        .filter(|cp| cp.tag == tag)
        .map(|cp| (cp, cp.point.dist(pt)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
}

/// Distance from `pt` to the closest pole or omega-zero point.
pub fn distance_to_critical_set(s: &BasicState, pt: &FrequencyPoint) -> f64 {
    critical_points(s)
        .iter()
        .map(|cp| cp.point.dist(pt))
        .fold(f64::INFINITY, f64::min)
}

pub fn classify_point(s: &BasicState, pt: &FrequencyPoint, tol: f64) -> PointClass {
    let cps = critical_points(s);
    let best = |pred: &dyn Fn(PointTag) -> bool| {
        cps.iter()
            .filter(|cp| pred(cp.tag))
            .map(|cp| (cp.tag, cp.point.dist(pt)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
    };
    if let Some((tag, d)) = best(&|t: PointTag| t.is_pole()) {
        if d <= tol {
            return PointClass { tag, distance: d };
        }
    }
    if let Some((tag, d)) = best(&|t: PointTag| t.is_omega_zero()) {
        if d <= tol {
            return PointClass { tag, distance: d };
        }
    }
    if pt.gamma > tol {
        return PointClass {
            tag: PointTag::Interior,
            distance: pt.gamma,
        };
    }
    let delta = crate::lopatinskii::lopatinskii_det(s, pt).norm();
    if delta <= tol {
        return PointClass {
            tag: PointTag::BoundaryLopRoot,
            distance: delta,
        };
    }
    PointClass {
        tag: PointTag::BoundaryLopOK,
        distance: distance_to_critical_set(s, pt),
    }
}

/// Polynomial building blocks of the symbol at one point:
/// `p = mu^2 rho + eta^2 H^2`, `q = alpha rho mu^2 + eta^2`,
/// `d = (mu^2 rho alpha + eta^2) H^2 + mu^2 rho`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Parts {
    pub tau: C64,
    pub mu: C64,
    pub eta: f64,
    pub p: C64,
    pub q: C64,
    pub d: C64,
}

impl Parts {
    pub fn new(s: &BasicState, gamma: f64, delta: f64, eta: f64) -> Self {
        let tau = c(gamma, delta);
        let mu = c(gamma, delta + s.v * eta);
        let mu2 = mu * mu;
        let e2 = eta * eta;
        let h2 = s.h * s.h;
        let q = mu2 * (s.alpha() * s.rho) + e2;
        Parts {
            tau,
            mu,
            eta,
            p: mu2 * s.rho + e2 * h2,
            q,
            d: q * h2 + mu2 * s.rho,
        }
    }

    pub fn at(s: &BasicState, pt: &FrequencyPoint) -> Self {
        Parts::new(s, pt.gamma, pt.delta, pt.eta)
    }

    pub fn omega1_sq(&self) -> C64 {
        self.p * self.q / self.d
    }

    pub fn omega2_sq(&self, s: &BasicState) -> C64 {
        let et = self.tau * s.eps;
        et * et + self.eta * self.eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolCoefficients {
    pub a12: C64,
    pub a21: C64,
    pub a34: C64,
    pub a43: C64,
}

fn pole_check(s: &BasicState, pt: &FrequencyPoint, pr: &Parts) -> Result<()> {
    let k = pt.k();
    if pr.mu.norm() <= POLE_TOL * k {
        return Err(Error::Pole(Pole::P1));
    }
    let scale = k.powi(4) * (s.rho * (1.0 + s.alpha() * s.h * s.h) + s.h * s.h);
    if pr.d.norm() <= POLE_TOL * scale {
        return Err(Error::Pole(Pole::P2));
    }
    if pr.tau.norm() <= POLE_TOL * k {
        return Err(Error::Pole(Pole::P3));
    }
    Ok(())
}

pub fn symbol_coefficients(s: &BasicState, pt: &FrequencyPoint) -> Result<SymbolCoefficients> {
    let pr = Parts::at(s, pt);
    pole_check(s, pt, &pr)?;
    Ok(coefficients_unchecked(s, &pr))
}

pub(crate) fn coefficients_unchecked(s: &BasicState, pr: &Parts) -> SymbolCoefficients {
    let et = pr.tau * s.eps;
    SymbolCoefficients {
        a12: -pr.p / pr.mu,
        a21: -pr.mu * pr.q / pr.d,
        a34: -(et * et + pr.eta * pr.eta) / et,
        a43: -et,
    }
}

pub fn assemble_a(s: &BasicState, pt: &FrequencyPoint) -> Result<M4> {
    let co = symbol_coefficients(s, pt)?;
    Ok(a_from(&co))
}

pub(crate) fn a_from(co: &SymbolCoefficients) -> M4 {
    let z = C64::new(0.0, 0.0);
    M4::new(
        z, co.a12, z, z, //
        co.a21, z, z, z, //
        z, z, z, co.a34, //
        z, z, co.a43, z,
    )
}

/// Output of the structural elimination of the full plasma and vacuum symbols.
#[derive(Debug, Clone, Copy)]
pub struct FullSymbolReduction {
    pub coefficients: SymbolCoefficients,
    /// ODE matrix for `(q, v1)`; off-diagonal entries are `a12`, `a21`.
    pub plasma_block: M2,
    /// ODE matrix for `(Hc2, E)`.
    pub vacuum_block: M2,
    /// `H2 / q` from the algebraic relations.
    pub h2_over_q: C64,
    /// `v2 / q` from the algebraic relations.
    pub v2_over_q: C64,
}

fn plasma_matrices(s: &BasicState) -> (SMatrix<f64, 5, 5>, SMatrix<f64, 5, 5>) {
    let (a, r, v, h) = (s.alpha(), s.rho, s.v, s.h);
    #[rustfmt::skip]
    let a0 = SMatrix::<f64, 5, 5>::from_row_slice(&[
        a,      0.0, 0.0, 0.0, -a * h,
        0.0,    r,   0.0, 0.0, 0.0,
        0.0,    0.0, r,   0.0, 0.0,
        0.0,    0.0, 0.0, 1.0, 0.0,
        -a * h, 0.0, 0.0, 0.0, 1.0 + a * h * h,
    ]);
    #[rustfmt::skip]
    let a2 = SMatrix::<f64, 5, 5>::from_row_slice(&[
        a * v,      0.0,   1.0,   0.0, -a * v * h,
        0.0,        r * v, 0.0,   -h,  0.0,
        1.0,        0.0,   r * v, 0.0, -h,
        0.0,        -h,    0.0,   v,   0.0,
        -a * v * h, 0.0,   -h,    0.0, (1.0 + a * h * h) * v,
    ]);
    (a0, a2)
}

/// Re-derives the reduced symbol from the full linearized systems
/// `(tau A0 + i eta A2) U + A1 U' = 0` in `U = (q, v1, v2, H1, H2)` and
/// `(eps tau + i eta B2) W + B1 W' = 0` in `W = (Hc1, Hc2, E)`.
pub fn reduce_full_symbol_detailed(
    s: &BasicState,
    pt: &FrequencyPoint,
) -> Result<FullSymbolReduction> {
    let (a0, a2) = plasma_matrices(s);
    let tau = pt.tau();
    let ie = I * pt.eta;
    let p: SMatrix<C64, 5, 5> = a0.map(|x| re(x) * tau) + a2.map(|x| re(x) * ie);
    let alg = [2usize, 3, 4];
    let nc = [0usize, 1];
    let pac = Matrix3::from_fn(|i, j| p[(alg[i], alg[j])]);
    let pan = SMatrix::<C64, 3, 2>::from_fn(|i, j| p[(alg[i], nc[j])]);
    let poc = SMatrix::<C64, 2, 3>::from_fn(|i, j| p[(nc[i], alg[j])]);
    let pon = M2::from_fn(|i, j| p[(nc[i], nc[j])]);
    let scale = pac.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if pac.determinant().norm() <= 1e-12 * scale.powi(3) {
        return Err(Error::SingularElimination);
    }
    let inv = pac.try_inverse().ok_or(Error::SingularElimination)?;
    let uc = -(inv * pan);
    let schur = pon + poc * uc;
    let swap = M2::new(re(0.0), re(1.0), re(1.0), re(0.0));
    let plasma_block = -(swap * schur);

    let et = tau * s.eps;
    let z = re(0.0);
    let pv = Matrix3::new(et, z, ie, z, et, z, ie, z, et);
    if et.norm() <= 1e-12 * pt.k() {
        return Err(Error::SingularElimination);
    }
    let sv = M2::new(pv[(1, 1)], pv[(1, 2)], pv[(2, 1)], pv[(2, 2)])
        - M2::new(
            pv[(1, 0)] * pv[(0, 1)],
            pv[(1, 0)] * pv[(0, 2)],
            pv[(2, 0)] * pv[(0, 1)],
            pv[(2, 0)] * pv[(0, 2)],
        ) / pv[(0, 0)];
    let vacuum_block = -(swap * sv);

    Ok(FullSymbolReduction {
        coefficients: SymbolCoefficients {
            a12: plasma_block[(0, 1)],
            a21: plasma_block[(1, 0)],
            a34: vacuum_block[(0, 1)],
            a43: vacuum_block[(1, 0)],
        },
        plasma_block,
        vacuum_block,
        h2_over_q: uc[(2, 0)],
        v2_over_q: uc[(0, 0)],
    })
}

pub fn reduce_full_symbol(s: &BasicState, pt: &FrequencyPoint) -> Result<SymbolCoefficients> {
    reduce_full_symbol_detailed(s, pt).map(|r| r.coefficients)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchRule {
    /// principal root, clearly off the imaginary axis
    Principal,
    /// purely imaginary root, sign read off from `gamma + h`
    GammaLimit,
    /// product evaluated through its squared closed form
    Regularized,
    /// exact zero
    Vanishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchCertificate {
    pub omega1: Option<BranchRule>,
    pub omega2: BranchRule,
    pub chi_omega1: BranchRule,
    /// whether the real-part/imaginary-part rule for `chi` agrees with the
    /// `gamma > 0` limit (`None` when `chi` is zero or infinite)
    pub chi_rule_matches_limit: Option<bool>,
}

/// Square root of `f(gamma)` with `Re >= 0`, where on the imaginary axis the
/// sign is the limit from `gamma > 0`.
pub fn limit_sqrt(f: impl Fn(f64) -> C64, gamma: f64, h: f64) -> Result<(C64, BranchRule)> {
    let w = f(gamma);
    let r = w.sqrt();
    if r.norm() == 0.0 {
        return Ok((r, BranchRule::Vanishing));
    }
    if r.re > 1e-9 * r.norm() {
        return Ok((r, BranchRule::Principal));
    }
    let d1 = (f(gamma + h) - w).im;
    let d2 = (f(gamma + 2.0 * h) - w).im;
    if d1 == 0.0 || d1.signum() != d2.signum() {
        return Err(Error::BranchAmbiguity(format!(
            "w = {w}, increments {d1:e}, {d2:e}"
        )));
    }
    Ok((c(r.re, d1.signum() * r.im.abs()), BranchRule::GammaLimit))
}

/// `chi` by the sign rule: `Re > 0`, or `Im > 0` when `Re = 0`.
pub(crate) fn chi_rule(chi_sq: C64) -> C64 {
    let r = chi_sq.sqrt();
    if r.re.abs() <= 1e-14 * r.norm() {
        c(0.0, r.im.abs())
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ModeDecomposition {
    /// `None` at the P2 manifold where it is infinite.
    pub omega1: Option<C64>,
    pub omega2: C64,
    pub chi: C64,
    pub chi_limit: Option<C64>,
    pub mu_chi_a12: C64,
    pub chi_omega1: C64,
    pub e1: V4,
    pub e2: V4,
    pub e3: V4,
    pub e4: V4,
    pub branch_certificate: BranchCertificate,
}

fn raw_chi_omega1(s: &BasicState, pt: &FrequencyPoint) -> Result<C64> {
    let pr = Parts::at(s, pt);
    let h = BRANCH_H * pt.k();
    let (w1, _) = limit_sqrt(
        |g| Parts::new(s, g, pt.delta, pt.eta).omega1_sq(),
        pt.gamma,
        h,
    )?;
    Ok(chi_rule(pr.d / pr.p) * w1)
}

pub fn eigen_modes(s: &BasicState, pt: &FrequencyPoint) -> Result<ModeDecomposition> {
    let pr = Parts::at(s, pt);
    let k = pt.k();
    if pr.mu.norm() <= POLE_TOL * k {
        return Err(Error::Pole(Pole::P1));
    }
    if pr.tau.norm() <= POLE_TOL * k {
        return Err(Error::Pole(Pole::P3));
    }
    modes_unchecked(s, pt)
}

/// Eigenmodes without the P1/P3 rejection; the products entering `e1`, `e3`
/// and the determinant are finite there.
pub(crate) fn modes_unchecked(s: &BasicState, pt: &FrequencyPoint) -> Result<ModeDecomposition> {
    let pr = Parts::at(s, pt);
    let k = pt.k();
    let h = BRANCH_H * k;
    let (omega2, rule2) = limit_sqrt(
        |g| Parts::new(s, g, pt.delta, pt.eta).omega2_sq(s),
        pt.gamma,
        h,
    )?;
    let dscale = k.powi(4) * (s.rho * (1.0 + s.alpha() * s.h * s.h) + s.h * s.h);
    let at_p2 = pr.d.norm() <= POLE_TOL * dscale;
    let (omega1, rule1) = if at_p2 {
        (None, None)
    } else {
        let (w, r) = limit_sqrt(
            |g| Parts::new(s, g, pt.delta, pt.eta).omega1_sq(),
            pt.gamma,
            h,
        )?;
        (Some(w), Some(r))
    };
    let chi = if at_p2 {
        re(0.0)
    } else if pr.p.norm() == 0.0 {
        c(f64::INFINITY, 0.0)
    } else {
        chi_rule(pr.d / pr.p)
    };
    let chi_limit = if chi.is_finite() && chi.norm() > 0.0 {
        limit_sqrt(
            |g| {
                let q = Parts::new(s, g, pt.delta, pt.eta);
                q.d / q.p
            },
            pt.gamma,
            h,
        )
        .ok()
        .map(|x| x.0)
    } else {
        None
    };
    let (chi_omega1, rule_cw) = match omega1 {
        Some(w) if chi.is_finite() => (chi * w, rule1.unwrap_or(BranchRule::Principal)),
        _ => {
            let sq = pr.q.sqrt();
            let probe = pt.with_gamma(pt.gamma + 1e-6 * k);
            let refv = raw_chi_omega1(s, &probe)?;
            let v = if (sq - refv).norm() <= (sq + refv).norm() {
                sq
            } else {
                -sq
            };
            (v, BranchRule::Regularized)
        }
    };
    let mu_chi_a12 = if chi.is_finite() {
        -chi * pr.p
    } else {
        re(0.0)
    };
    let mu = pr.mu;
    let z = re(0.0);
    let et = pr.tau * s.eps;
    Ok(ModeDecomposition {
        omega1,
        omega2,
        chi,
        chi_limit,
        mu_chi_a12,
        chi_omega1,
        e1: V4::new(mu_chi_a12, -mu * chi_omega1, z, z),
        e2: V4::new(z, z, omega2, et),
        e3: V4::new(mu_chi_a12, mu * chi_omega1, z, z),
        e4: V4::new(z, z, omega2, -et),
        branch_certificate: BranchCertificate {
            omega1: rule1,
            omega2: rule2,
            chi_omega1: rule_cw,
            chi_rule_matches_limit: chi_limit.map(|cl| (cl - chi).norm() <= 1e-8 * chi.norm()),
        },
    })
}

#[derive(Debug, Clone, Copy)]
pub struct BoundarySymbols {
    pub b: Vector3<C64>,
    pub q: Matrix3<C64>,
    pub theta: f64,
    pub beta: M24,
    pub ell: RowVector4<C64>,
    pub m_matrix: SMatrix<f64, 3, 4>,
}

/// The constant matrix mapping `V^nc` to the rows of the reduced boundary operator.
pub fn m_matrix(s: &BasicState) -> SMatrix<f64, 3, 4> {
    #[rustfmt::skip]
    let m = SMatrix::<f64, 3, 4>::from_row_slice(&[
        0.0, -1.0, 0.0,   0.0,
        1.0, 0.0,  -s.hc, 0.0,
        0.0, 0.0,  0.0,   1.0,
    ]);
    m
}

pub fn boundary_symbols(s: &BasicState, pt: &FrequencyPoint) -> BoundarySymbols {
    let tau = pt.tau();
    let mu = pt.mu(s);
    let k = pt.k();
    let ehc = s.eps * s.hc;
    let z = re(0.0);
    let b = Vector3::new(mu, z, tau * ehc);
    let q = Matrix3::new(
        z,
        re(k),
        z,
        -tau * ehc,
        z,
        mu,
        mu.conj(),
        z,
        tau.conj() * ehc,
    ) / re(k);
    let mm = m_matrix(s);
    let qm = q * mm.map(re);
    let beta = M24::from_fn(|i, j| qm[(i, j)]);
    let ell = RowVector4::from_fn(|_, j| qm[(2, j)]);
    BoundarySymbols {
        b,
        q,
        theta: b.norm_squared() / k,
        beta,
        ell,
        m_matrix: mm,
    }
}
