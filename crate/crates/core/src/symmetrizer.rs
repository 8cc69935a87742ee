//! Case-by-case transforms `T`, Kreiss symmetrizers `r` and their numerical
//! certification on sampled neighbourhoods of the hemisphere.
//!
//! A bundle is built around a center of a given kind, its constants are
//! fitted on a sample set, and [`certify`] then checks
//!
//! * dissipativity: `Re(r T A T^-1) >= kappa W` with a case weight `W`,
//! * coercivity: `r + C btilde^* btilde >= rhs I` with `rhs` in `{1, gamma^2}`.
//!
//! Both are evaluated through normalized eigenvalues
//! `lambda_min(W^-1/2 Re(r T A T^-1) W^-1/2)` and
//! `lambda_min(r + C btilde^* btilde) / rhs - 1`. Near the boundary the
//! sample set includes a ladder of `gamma` values and a bundle is certified
//! only if the fitted constants stay bounded along it.
//!
//! At the poles `mu = 0` and `tau = 0` no symmetrizer is built; the bundle
//! works on the decaying coordinates `(U1, U3)` of the triangularized system,
//! with reduced symbol `diag(-omega1, -omega2)` and `r = -gamma^2 I`.

use nalgebra::Matrix4;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basic_state::BasicState;
use crate::error::{Error, Pole, Result};
use crate::frequency_symbol::{
    boundary_symbols, classify_point, coefficients_unchecked, critical_points, eigen_modes,
    modes_unchecked, FrequencyPoint, Parts, PointClass, PointTag, BRANCH_H, CLASSIFY_TOL, POLE_TOL,
};
use crate::linalg::{
    block_diag, c, diag4, hermitian_eigs2, hermitian_part, max_abs, min_eig4, re, C64, I, M2, M24,
    M4,
};
use crate::lopatinskii::{lopatinskii_det, scan_boundary_roots};

pub const SAMPLES_PER_BALL: usize = 500;
pub const INITIAL_RADIUS: f64 = 0.1;
pub const MIN_RADIUS: f64 = 1e-4;
/// Both normalized minima must stay above `-CERT_TOL`.
pub const CERT_TOL: f64 = 1e-10;
pub const CONSTANT_CAP: f64 = 1e12;
/// Fraction of the smallest ratio kept as `kappa`.
pub const KAPPA_FRACTION: f64 = 0.9;
/// Ladder uniformity: `kappa(low) >= LADDER_KAPPA_DROP * kappa(high)`.
pub const LADDER_KAPPA_DROP: f64 = 0.1;
/// Ladder uniformity: `C(all) <= LADDER_C_GROWTH * C(high)`.
pub const LADDER_C_GROWTH: f64 = 10.0;
const LADDER: [f64; 6] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7];
const LADDER_LEVELS: usize = 4;
const MIN_SAMPLE_GAMMA: f64 = 1e-6;
/// `s = S_MARGIN d1^2 / eps` in the P2 block.
const S_MARGIN: f64 = 1.25;
const DIAG_OMEGA_MIN: f64 = 1e-6;
const SIMPLE_ROOT_MIN: f64 = 1e-6;

/// Weight `W` on the dissipativity side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weight {
    Unit,
    Gamma,
    Gamma2,
    Gamma3,
    /// `diag(gamma/|tau~|^2, gamma, gamma, gamma)`
    Anisotropic,
}

impl Weight {
    fn values(self, gamma: f64, tau_t: C64) -> [f64; 4] {
        match self {
            Weight::Unit => [1.0; 4],
            Weight::Gamma => [gamma; 4],
            Weight::Gamma2 => [gamma * gamma; 4],
            Weight::Gamma3 => [gamma.powi(3); 4],
            Weight::Anisotropic => [gamma / tau_t.norm_sqr(), gamma, gamma, gamma],
        }
    }
}

/// Right side of the coercivity inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rhs {
    Unit,
    Gamma2,
}

impl Rhs {
    fn value(self, gamma: f64) -> f64 {
        match self {
            Rhs::Unit => 1.0,
            Rhs::Gamma2 => gamma * gamma,
        }
    }
}

/// Constants of a bundle. Entries that a case does not use stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Constants {
    pub kappa: f64,
    /// multiplier of `btilde^* btilde`
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Kprime")]
    pub kprime: f64,
    /// the free Lopatinskii constant all others are derived from
    pub c0: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub g_const: f64,
    pub d1: f64,
    pub d2: f64,
    pub s_const: f64,
    pub e0: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SymmetrizerBundle {
    pub case: PointClass,
    pub center: FrequencyPoint,
    /// `T` at the center.
    pub t: M4,
    pub tinv: M4,
    pub lambda: Matrix4<f64>,
    pub constants: Constants,
    pub neighborhood_radius: f64,
    pub weight: Weight,
    pub rhs: Rhs,
    state: BasicState,
    /// P2 only: evaluate at `(gamma, -delta, -eta)` and conjugate.
    mirrored: bool,
    /// P2 only: sign in `delta + v eta = sigma c_f eta`.
    sigma: f64,
}

/// Per-sample matrices that do not depend on the fitted constants.
#[derive(Debug, Clone, Copy)]
pub struct SampleMatrices {
    pub point: FrequencyPoint,
    /// `(T Lambda)^-1`
    pub tinv: M4,
    /// closed form of `T Lambda A Lambda^-1 T^-1`
    pub target: M4,
    /// `beta (T Lambda)^-1`
    pub beta_t: M24,
    aux: Aux,
}

#[derive(Debug, Clone, Copy, Default)]
struct Aux {
    tau_t: C64,
    e0: f64,
    w0: f64,
}

/// Pieces of one transform at one evaluation point.
struct Pieces {
    lambda: M4,
    lambda_inv: M4,
    tinv_full: M4,
    /// displayed closed form of `T`, when there is one
    t_full: Option<M4>,
    target: M4,
    /// displayed form of `Lambda A Lambda^-1` for the pole cases
    intermediate: Option<M4>,
    aux: Aux,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinEigs {
    pub dissipativity: f64,
    pub coercivity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationResult {
    pub case: PointTag,
    pub center: FrequencyPoint,
    pub radius: f64,
    pub kappa: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Kprime")]
    pub kprime: f64,
    pub weight: Weight,
    pub rhs: Rhs,
    /// `min (ratio - kappa)` and `min (lambda/rhs - 1)` over the samples
    pub min_eigs: MinEigs,
    /// whether kappa and C stay bounded along the gamma ladder
    pub uniform_in_gamma: bool,
    /// log-log slope of the unweighted smallest eigenvalue along the ladder
    pub ladder_exponent: Option<f64>,
    pub samples: usize,
    pub failures: Vec<String>,
    pub certified: bool,
}

fn swap_block(m: &M2) -> M2 {
    M2::new(m[(1, 1)], m[(1, 0)], m[(0, 1)], m[(0, 0)])
}

/// Jordan-type block `[[-iw, i], [-iw^2 - iw, iw]]` with `w = omega^2`.
fn jordan_block(w: C64) -> M2 {
    M2::new(-I * w, I, -I * w * w - I * w, I * w)
}

fn vac_tinv(w2: C64, et: C64) -> M2 {
    M2::new(w2, w2, et, -et)
}

fn vac_t(w2: C64, et: C64) -> M2 {
    let a = re(0.5) / w2;
    let b = re(0.5) / et;
    M2::new(a, b, a, -b)
}

fn plasma_tinv(mca: C64, mcw: C64) -> M2 {
    M2::new(mca, mca, -mcw, mcw)
}

fn plasma_t(mca: C64, mcw: C64) -> M2 {
    let a = re(0.5) / mca;
    let b = re(0.5) / mcw;
    M2::new(a, -b, a, b)
}

/// `[[x, -y], [y, x]]` and its inverse.
fn rot_pair(x: C64, y: C64) -> (M2, M2) {
    let det = x * x + y * y;
    (M2::new(x, -y, y, x), M2::new(x, y, -y, x) / det)
}

fn lambda_mu() -> (M4, M4) {
    let l = M2::new(re(1.0), re(1.0), re(-1.0), re(1.0));
    let li = M2::new(re(0.5), re(-0.5), re(0.5), re(0.5));
    (
        block_diag(&l, &M2::identity()),
        block_diag(&li, &M2::identity()),
    )
}

fn lambda_tau() -> (M4, M4) {
    let (l, li) = lambda_mu();
    let s = |m: &M4| {
        block_diag(
            &m.fixed_view::<2, 2>(2, 2).into_owned(),
            &m.fixed_view::<2, 2>(0, 0).into_owned(),
        )
    };
    (s(&l), s(&li))
}

/// `gamma`-derivative of `omega1^2`, exact.
pub fn d_gamma_omega1_sq(s: &BasicState, pt: &FrequencyPoint) -> C64 {
    let pr = Parts::at(s, pt);
    let mu = pr.mu;
    let (r, a, h2) = (s.rho, s.alpha(), s.h * s.h);
    let dp = mu * (2.0 * r);
    let dq = mu * (2.0 * a * r);
    let dd = mu * (2.0 * r * (1.0 + a * h2));
    (dp * pr.q + pr.p * dq) / pr.d - pr.p * pr.q * dd / (pr.d * pr.d)
}

/// `gamma`-derivative of `omega2^2 = eps^2 tau^2 + eta^2`.
pub fn d_gamma_omega2_sq(s: &BasicState, pt: &FrequencyPoint) -> C64 {
    pt.tau() * (2.0 * s.eps * s.eps)
}

/// `omega0 = -omega1^2 tau~`, in the form that stays finite on the P2 manifold.
pub fn p2_omega0(s: &BasicState, pt: &FrequencyPoint, sigma: f64) -> C64 {
    let pr = Parts::at(s, pt);
    let cf = s.fast_interface_speed();
    let den = (pr.mu + I * (sigma * cf * pt.eta)) * (s.rho * (1.0 + s.alpha() * s.h * s.h));
    -pr.p * pr.q / den
}

/// `tau~ = mu - i sigma c_f eta`.
pub fn p2_tau_tilde(s: &BasicState, pt: &FrequencyPoint, sigma: f64) -> C64 {
    pt.mu(s) - I * (sigma * s.fast_interface_speed() * pt.eta)
}

fn projection(pt: &FrequencyPoint) -> FrequencyPoint {
    FrequencyPoint { gamma: 0.0, ..*pt }
}

impl SymmetrizerBundle {
    pub fn state(&self) -> &BasicState {
        &self.state
    }

    pub fn mirrored(&self) -> bool {
        self.mirrored
    }

    /// Works on the decaying pair `(U1, U3)` only.
    pub fn reduced(&self) -> bool {
        matches!(self.case.tag, PointTag::PoleP1 | PointTag::PoleP3)
    }

    fn pieces(&self, pt: &FrequencyPoint) -> Result<Pieces> {
        let s = &self.state;
        let id = M4::identity();
        match self.case.tag {
            PointTag::Interior | PointTag::BoundaryLopOK | PointTag::BoundaryLopRoot => {
                let m = eigen_modes(s, pt)?;
                let w1 = m.omega1.ok_or(Error::Pole(Pole::P2))?;
                Ok(Pieces {
                    lambda: id,
                    lambda_inv: id,
                    tinv_full: M4::from_columns(&[m.e1, m.e3, m.e2, m.e4]),
                    t_full: None,
                    target: diag4([-w1, w1, -m.omega2, m.omega2]),
                    intermediate: None,
                    aux: Aux::default(),
                })
            }
            PointTag::Omega1ZeroA | PointTag::Omega1ZeroB => {
                let pr = Parts::at(s, pt);
                let co = coefficients_unchecked(s, &pr);
                let w = co.a12 * co.a21;
                let m = modes_unchecked(s, pt)?;
                let et = pt.tau() * s.eps;
                let (tp, ti, tg) = if self.case.tag == PointTag::Omega1ZeroB {
                    (
                        M2::new(re(1.0) / co.a12, re(0.0), co.a21, -I),
                        M2::new(co.a12, re(0.0), -I * w, I),
                        jordan_block(w),
                    )
                } else {
                    (
                        M2::new(-I, co.a12, re(0.0), re(1.0) / co.a21),
                        M2::new(I, -I * w, re(0.0), co.a21),
                        swap_block(&jordan_block(w)),
                    )
                };
                let w0 = Parts::at(s, &projection(pt)).omega1_sq().re;
                Ok(Pieces {
                    lambda: id,
                    lambda_inv: id,
                    tinv_full: block_diag(&ti, &vac_tinv(m.omega2, et)),
                    t_full: Some(block_diag(&tp, &vac_t(m.omega2, et))),
                    target: block_diag(&tg, &M2::new(-m.omega2, re(0.0), re(0.0), m.omega2)),
                    intermediate: None,
                    aux: Aux {
                        w0,
                        ..Aux::default()
                    },
                })
            }
            PointTag::Omega2Zero => {
                let pr = Parts::at(s, pt);
                let co = coefficients_unchecked(s, &pr);
                let m = modes_unchecked(s, pt)?;
                let w1 = m.omega1.ok_or(Error::Pole(Pole::P2))?;
                let w = co.a34 * co.a43;
                let mca = m.mu_chi_a12;
                let mcw = pt.mu(s) * m.chi_omega1;
                let w0 = pr_omega2_sq(s, &projection(pt)).re;
                Ok(Pieces {
                    lambda: id,
                    lambda_inv: id,
                    tinv_full: block_diag(
                        &plasma_tinv(mca, mcw),
                        &M2::new(I, -I * w, re(0.0), co.a43),
                    ),
                    t_full: Some(block_diag(
                        &plasma_t(mca, mcw),
                        &M2::new(-I, co.a34, re(0.0), re(1.0) / co.a43),
                    )),
                    target: block_diag(
                        &M2::new(-w1, re(0.0), re(0.0), w1),
                        &swap_block(&jordan_block(w)),
                    ),
                    intermediate: None,
                    aux: Aux {
                        w0,
                        ..Aux::default()
                    },
                })
            }
            PointTag::PoleP1 => {
                let pr = Parts::at(s, pt);
                let m = modes_unchecked(s, pt)?;
                let w1 = m.omega1.ok_or(Error::Pole(Pole::P2))?;
                let mu = pr.mu;
                let mu_a12 = -pr.p;
                let mu_a21 = -mu * mu * pr.q / pr.d;
                let mu_m1 = (mu_a21 + mu_a12) * 0.5;
                let mu_m2 = (mu_a21 - mu_a12) * 0.5;
                let (ti, tt) = rot_pair(mu_m1 - mu * w1, mu_m2);
                let et = pt.tau() * s.eps;
                let (l, li) = lambda_mu();
                let at_pole = mu.norm() <= POLE_TOL * pt.k();
                let (target, intermediate) = if at_pole {
                    (M4::from_element(c(f64::NAN, 0.0)), None)
                } else {
                    let co = coefficients_unchecked(s, &pr);
                    let (m1, m2) = ((co.a21 + co.a12) * 0.5, (co.a21 - co.a12) * 0.5);
                    (
                        block_diag(
                            &M2::new(-w1, -m2 * 2.0, re(0.0), w1),
                            &M2::new(-m.omega2, re(0.0), re(0.0), m.omega2),
                        ),
                        Some(block_diag(
                            &M2::new(m1, -m2, m2, -m1),
                            &M2::new(re(0.0), co.a34, co.a43, re(0.0)),
                        )),
                    )
                };
                Ok(Pieces {
                    lambda: l,
                    lambda_inv: li,
                    tinv_full: block_diag(&ti, &vac_tinv(m.omega2, et)),
                    t_full: Some(block_diag(&tt, &vac_t(m.omega2, et))),
                    target,
                    intermediate,
                    aux: Aux::default(),
                })
            }
            PointTag::PoleP3 => {
                let pr = Parts::at(s, pt);
                let m = modes_unchecked(s, pt)?;
                let w1 = m.omega1.ok_or(Error::Pole(Pole::P2))?;
                let tau = pt.tau();
                let et = tau * s.eps;
                let tau_a34 = -(et * et + pt.eta * pt.eta) / s.eps;
                let tau_a43 = -et * tau;
                let tau_n1 = (tau_a43 + tau_a34) * 0.5;
                let tau_n2 = (tau_a43 - tau_a34) * 0.5;
                let (ti, tt) = rot_pair(tau_n1 - tau * m.omega2, tau_n2);
                let mca = m.mu_chi_a12;
                let mcw = pr.mu * m.chi_omega1;
                let (l, li) = lambda_tau();
                let at_pole = tau.norm() <= POLE_TOL * pt.k();
                let (target, intermediate) = if at_pole {
                    (M4::from_element(c(f64::NAN, 0.0)), None)
                } else {
                    let co = coefficients_unchecked(s, &pr);
                    let (n1, n2) = ((co.a43 + co.a34) * 0.5, (co.a43 - co.a34) * 0.5);
                    (
                        block_diag(
                            &M2::new(-w1, re(0.0), re(0.0), w1),
                            &M2::new(-m.omega2, -n2 * 2.0, re(0.0), m.omega2),
                        ),
                        Some(block_diag(
                            &M2::new(re(0.0), co.a12, co.a21, re(0.0)),
                            &M2::new(n1, -n2, n2, -n1),
                        )),
                    )
                };
                Ok(Pieces {
                    lambda: l,
                    lambda_inv: li,
                    tinv_full: block_diag(&plasma_tinv(mca, mcw), &ti),
                    t_full: Some(block_diag(&plasma_t(mca, mcw), &tt)),
                    target,
                    intermediate,
                    aux: Aux::default(),
                })
            }
            PointTag::PoleP2 => {
                let pr = Parts::at(s, pt);
                let co = coefficients_unchecked(s, &pr);
                let m = modes_unchecked(s, pt)?;
                let et = pt.tau() * s.eps;
                let ia = I / co.a12;
                let ti = M2::new(re(1.0), ia, re(-1.0), ia);
                let (l, li) = lambda_mu();
                let tau_t = p2_tau_tilde(s, pt, self.sigma);
                let at_pole = tau_t.norm() <= POLE_TOL * pt.k();
                let (target, intermediate) = if at_pole {
                    (M4::from_element(c(f64::NAN, 0.0)), None)
                } else {
                    let w = co.a12 * co.a21;
                    let (m1, m2) = ((co.a21 + co.a12) * 0.5, (co.a21 - co.a12) * 0.5);
                    (
                        block_diag(
                            &M2::new(re(0.0), I, -I * w, re(0.0)),
                            &M2::new(-m.omega2, re(0.0), re(0.0), m.omega2),
                        ),
                        Some(block_diag(
                            &M2::new(m1, -m2, m2, -m1),
                            &M2::new(re(0.0), co.a34, co.a43, re(0.0)),
                        )),
                    )
                };
                let e0 = p2_omega0(s, &projection(pt), self.sigma).im;
                Ok(Pieces {
                    lambda: l,
                    lambda_inv: li,
                    tinv_full: block_diag(&ti, &vac_tinv(m.omega2, et)),
                    t_full: None,
                    target,
                    intermediate,
                    aux: Aux {
                        tau_t,
                        e0,
                        ..Aux::default()
                    },
                })
            }
        }
    }

    fn eval_point(&self, pt: &FrequencyPoint) -> FrequencyPoint {
        if self.mirrored {
            pt.mirrored()
        } else {
            *pt
        }
    }

    /// Constant-independent matrices at one sample.
    pub fn matrices(&self, pt: &FrequencyPoint) -> Result<SampleMatrices> {
        let ep = self.eval_point(pt);
        let pc = self.pieces(&ep)?;
        if pc.target.iter().any(|z| !z.is_finite()) {
            let pole = match self.case.tag {
                PointTag::PoleP1 => Pole::P1,
                PointTag::PoleP3 => Pole::P3,
                _ => Pole::P2,
            };
            return Err(Error::Pole(pole));
        }
        let mut tinv = pc.lambda_inv * pc.tinv_full;
        let mut target = pc.target;
        let mut aux = pc.aux;
        if self.mirrored {
            tinv = tinv.conjugate();
            target = target.conjugate();
            aux.tau_t = aux.tau_t.conj();
        }
        let beta = boundary_symbols(&self.state, pt).beta;
        Ok(SampleMatrices {
            point: *pt,
            tinv,
            target,
            beta_t: beta * tinv,
            aux,
        })
    }

    fn r_with(&self, m: &SampleMatrices, k: &Constants) -> M4 {
        let g = m.point.gamma;
        let z = re(0.0);
        let r = match self.case.tag {
            PointTag::Interior | PointTag::BoundaryLopOK => {
                diag4([re(-1.0), re(k.kprime), re(-1.0), re(k.kprime)])
            }
            PointTag::BoundaryLopRoot => {
                let g2 = re(-g * g);
                diag4([g2, re(k.kprime), g2, re(k.kprime)])
            }
            PointTag::Omega1ZeroA | PointTag::Omega1ZeroB | PointTag::Omega2Zero => {
                let w0 = m.aux.w0;
                let f = -2.0 * k.eps1 * w0 - k.eps2 * (w0 * w0 + w0);
                let sb = M2::new(
                    re(f),
                    c(k.eps1, g * k.g_const),
                    c(k.eps1, -g * k.g_const),
                    re(k.eps2),
                );
                let vac = M2::new(re(-1.0), z, z, re(k.kprime));
                match self.case.tag {
                    PointTag::Omega1ZeroB => block_diag(&sb, &vac),
                    PointTag::Omega1ZeroA => block_diag(&swap_block(&sb), &vac),
                    _ => block_diag(&vac, &swap_block(&sb)),
                }
            }
            PointTag::PoleP1 | PointTag::PoleP3 => {
                let g2 = re(-g * g);
                diag4([g2, re(1.0), g2, re(1.0)])
            }
            PointTag::PoleP2 => {
                let dt = m.aux.tau_t.im;
                let rt = M2::new(
                    re(k.d1),
                    c(k.d2, g * k.s_const),
                    c(k.d2, -g * k.s_const),
                    re(k.d1 * dt / m.aux.e0),
                );
                block_diag(&rt, &M2::new(re(-1.0), z, z, re(k.kprime)))
            }
        };
        if self.mirrored {
            r.conjugate()
        } else {
            r
        }
    }

    /// `r` at a sample with the bundle's constants.
    pub fn r_at(&self, m: &SampleMatrices) -> M4 {
        self.r_with(m, &self.constants)
    }

    /// Nondiagonal cases: the real function `f` entering `s`.
    pub fn f_at(&self, pt: &FrequencyPoint) -> Option<f64> {
        if !self.case.tag.is_omega_zero() {
            return None;
        }
        let w0 = self.pieces(&self.eval_point(pt)).ok()?.aux.w0;
        let k = &self.constants;
        Some(-2.0 * k.eps1 * w0 - k.eps2 * (w0 * w0 + w0))
    }

    fn sub(&self, h: &M4) -> f64 {
        if self.reduced() {
            let m = M2::new(h[(0, 0)], h[(0, 2)], h[(2, 0)], h[(2, 2)]);
            hermitian_eigs2(&m)[0]
        } else {
            min_eig4(h)
        }
    }

    fn weights(&self, m: &SampleMatrices, w: Weight) -> [f64; 4] {
        w.values(m.point.gamma, m.aux.tau_t)
    }

    /// Hermitian part of `r T A T^-1`.
    pub fn dissipativity_matrix(&self, m: &SampleMatrices) -> M4 {
        hermitian_part(&(self.r_at(m) * m.target))
    }

    fn ratio_with(&self, m: &SampleMatrices, k: &Constants, w: Weight) -> f64 {
        let h = hermitian_part(&(self.r_with(m, k) * m.target));
        let wv = self.weights(m, w);
        let hw = M4::from_fn(|i, j| h[(i, j)] / (wv[i] * wv[j]).sqrt());
        self.sub(&hw)
    }

    fn unweighted_with(&self, m: &SampleMatrices, k: &Constants) -> f64 {
        self.sub(&hermitian_part(&(self.r_with(m, k) * m.target)))
    }

    /// `lambda_min(r + C btilde^* btilde) / rhs - 1`.
    fn coercivity_with(&self, m: &SampleMatrices, k: &Constants, rhs: Rhs) -> f64 {
        if self.reduced() {
            // r = -gamma^2 I on (U1, U3): lambda_min = -gamma^2 + C sigma_min^2
            let b = nalgebra::Matrix2::new(
                m.beta_t[(0, 0)],
                m.beta_t[(0, 2)],
                m.beta_t[(1, 0)],
                m.beta_t[(1, 2)],
            );
            let fro2 = b.norm_squared();
            let det = b.determinant().norm();
            let smax2 = 0.5 * (fro2 + (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt());
            let smin = if smax2 > 0.0 { det / smax2.sqrt() } else { 0.0 };
            let g2 = m.point.gamma * m.point.gamma;
            return (-g2 + k.c * smin * smin) / rhs.value(m.point.gamma) - 1.0;
        }
        let h = self.r_with(m, k) + m.beta_t.adjoint() * m.beta_t * re(k.c);
        let h = hermitian_part(&h);
        self.sub(&h) / rhs.value(m.point.gamma) - 1.0
    }

    /// Nondiagonal cases: `lambda_min Re(s a') / gamma`.
    fn jordan_ratio(&self, m: &SampleMatrices, k: &Constants) -> f64 {
        let h = hermitian_part(&(self.r_with(m, k) * m.target));
        let o = if self.case.tag == PointTag::Omega2Zero {
            2
        } else {
            0
        };
        let b = M2::new(h[(o, o)], h[(o, o + 1)], h[(o + 1, o)], h[(o + 1, o + 1)]);
        hermitian_eigs2(&b)[0] / m.point.gamma
    }

    fn with_c0(&self, c0: f64) -> Constants {
        let mut k = self.constants;
        k.c0 = c0;
        match self.case.tag {
            PointTag::Interior | PointTag::BoundaryLopOK | PointTag::BoundaryLopRoot => {
                k.c = 2.0 * c0;
                k.kprime = 2.0 * c0 + 1.0;
            }
            PointTag::Omega1ZeroA | PointTag::Omega1ZeroB | PointTag::Omega2Zero => {
                let cp = k.eps1.abs().max(1.0) + 2.0;
                k.eps2 = k.eps1.abs() + cp * c0 + 2.0;
                k.kprime = 2.0 * cp * c0 + 2.0;
                k.c = cp * c0;
            }
            PointTag::PoleP1 | PointTag::PoleP3 => {
                k.c = c0;
                k.kprime = 1.0;
            }
            PointTag::PoleP2 => {
                k.d2 = -3.0;
                k.d1 = -2.0 * (1.0 + c0) * k.d2 + 1.0;
                let eps = -k.e0 * k.d2 / 4.0;
                k.s_const = S_MARGIN * k.d1 * k.d1 / eps;
                k.c = -2.0 * k.d2 * c0;
                k.kprime = -2.0 * k.d2 * c0 + 4.0;
            }
        }
        k
    }

    /// Smallest `c0 = 2^j` (from `c0_start`) making coercivity hold at every sample.
    fn fit_c0(&self, ms: &[SampleMatrices], c0_start: f64, rhs: Rhs) -> Constants {
        let mut c0 = c0_start;
        loop {
            let k = self.with_c0(c0);
            let ok = ms
                .par_iter()
                .all(|m| self.coercivity_with(m, &k, rhs) >= 0.0);
            if ok || k.c >= CONSTANT_CAP {
                return k;
            }
            c0 *= 2.0;
        }
    }

    fn fit_g(&self, ms: &[SampleMatrices], mut k: Constants) -> Constants {
        let mut g = 1.0;
        loop {
            k.g_const = g;
            let ok = ms.par_iter().all(|m| self.jordan_ratio(m, &k) >= 0.5);
            if ok || g >= CONSTANT_CAP {
                return k;
            }
            g *= 2.0;
        }
    }

    fn fit_kappa(&self, ms: &[SampleMatrices], k: &Constants, w: Weight) -> f64 {
        let min = ms
            .par_iter()
            .map(|m| self.ratio_with(m, k, w))
            .reduce(|| f64::INFINITY, f64::min);
        KAPPA_FRACTION * min
    }

    fn fit(&mut self, samples: &[FrequencyPoint]) {
        let ms: Vec<SampleMatrices> = samples
            .par_iter()
            .filter_map(|p| self.matrices(p).ok())
            .collect();
        let start = 1.0 / 16.0;
        let mut k = self.fit_c0(&ms, start, self.rhs);
        if self.case.tag.is_omega_zero() {
            for _ in 0..2 {
                self.constants = k;
                k = self.fit_g(&ms, k);
                self.constants = k;
                let g = k.g_const;
                k = self.fit_c0(&ms, k.c0, self.rhs);
                k.g_const = g;
            }
        }
        k.kappa = self.fit_kappa(&ms, &k, self.weight);
        self.constants = k;
        self.neighborhood_radius = samples
            .iter()
            .map(|p| p.dist(&self.center))
            .fold(0.0, f64::max);
    }

    /// Same bundle, dissipativity weight replaced and `kappa` refitted.
    pub fn with_weight(&self, w: Weight, samples: &[FrequencyPoint]) -> SymmetrizerBundle {
        let mut b = *self;
        b.weight = w;
        let ms: Vec<SampleMatrices> = samples
            .par_iter()
            .filter_map(|p| b.matrices(p).ok())
            .collect();
        b.constants.kappa = b.fit_kappa(&ms, &b.constants, w);
        b
    }

    /// Same bundle, coercivity right side replaced and all constants refitted.
    pub fn with_rhs(&self, rhs: Rhs, samples: &[FrequencyPoint]) -> SymmetrizerBundle {
        let mut b = *self;
        b.rhs = rhs;
        b.fit(samples);
        b
    }
}

fn pr_omega2_sq(s: &BasicState, pt: &FrequencyPoint) -> C64 {
    Parts::at(s, pt).omega2_sq(s)
}

fn halton(mut i: usize, b: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

fn tangent_basis(c: &FrequencyPoint) -> ([f64; 3], [f64; 3]) {
    let n = (c.delta * c.delta + c.eta * c.eta).sqrt();
    let e1 = if n < 1e-12 {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, -c.eta / n, c.delta / n]
    };
    let v = [c.gamma, c.delta, c.eta];
    let mut e2 = [
        v[1] * e1[2] - v[2] * e1[1],
        v[2] * e1[0] - v[0] * e1[2],
        v[0] * e1[1] - v[1] * e1[0],
    ];
    if e2[0] < 0.0 {
        e2 = [-e2[0], -e2[1], -e2[2]];
    }
    (e1, e2)
}

fn offset(
    c: &FrequencyPoint,
    e1: &[f64; 3],
    e2: &[f64; 3],
    x: f64,
    y: f64,
) -> Option<FrequencyPoint> {
    let g = c.gamma + x * e1[0] + y * e2[0];
    let d = c.delta + x * e1[1] + y * e2[1];
    let e = c.eta + x * e1[2] + y * e2[2];
    let k = (g * g + d * d + e * e).sqrt();
    (k > 0.0).then(|| FrequencyPoint {
        gamma: g / k,
        delta: d / k,
        eta: e / k,
    })
}

/// `n` low-discrepancy samples in the ball of radius `radius` around
/// `center` on the hemisphere (Halton bases 2, 3 in tangent coordinates,
/// `gamma >= 1e-6`), followed by a `gamma` ladder when the ball reaches the
/// boundary.
pub fn sample_ball(center: &FrequencyPoint, radius: f64, n: usize) -> Vec<FrequencyPoint> {
    let (e1, e2) = tangent_basis(center);
    let box_r = 1.1 * radius;
    let boundary = center.gamma < 1e-12;
    let mut out = Vec::with_capacity(n + 3 * LADDER_LEVELS);
    let mut i = 1;
    while out.len() < n && i < 100 * n {
        let u = halton(i, 2);
        let v = halton(i, 3);
        i += 1;
        let x = box_r * (2.0 * u - 1.0);
        let y = if boundary {
            box_r * v
        } else {
            box_r * (2.0 * v - 1.0)
        };
        if let Some(p) = offset(center, &e1, &e2, x, y) {
            if p.gamma >= MIN_SAMPLE_GAMMA && p.dist(center) <= radius {
                out.push(p);
            }
        }
    }
    if center.gamma < radius {
        for &g in LADDER
            .iter()
            .filter(|&&g| g <= 0.5 * radius)
            .take(LADDER_LEVELS)
        {
            for x in [-0.5 * radius, 0.0, 0.5 * radius] {
                let Some(q) = offset(center, &e1, &e2, x, 0.0) else {
                    continue;
                };
                let n2 = (q.delta * q.delta + q.eta * q.eta).sqrt();
                let sc = (1.0 - g * g).sqrt() / n2;
                let p = FrequencyPoint {
                    gamma: g,
                    delta: q.delta * sc,
                    eta: q.eta * sc,
                };
                if p.dist(center) <= radius {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn base_bundle(
    s: &BasicState,
    center: &FrequencyPoint,
    tag: PointTag,
    weight: Weight,
    rhs: Rhs,
) -> SymmetrizerBundle {
    SymmetrizerBundle {
        case: PointClass { tag, distance: 0.0 },
        center: *center,
        t: M4::identity(),
        tinv: M4::identity(),
        lambda: Matrix4::identity(),
        constants: Constants::default(),
        neighborhood_radius: 0.0,
        weight,
        rhs,
        state: *s,
        mirrored: false,
        sigma: 1.0,
    }
}

fn finish(mut b: SymmetrizerBundle, samples: &[FrequencyPoint]) -> Result<SymmetrizerBundle> {
    let ep = b.eval_point(&b.center);
    let pc = b.pieces(&ep)?;
    let mut tinv = pc.lambda_inv * pc.tinv_full;
    if b.mirrored {
        tinv = tinv.conjugate();
    }
    b.t = tinv
        .try_inverse()
        .ok_or_else(|| Error::Construction("T^-1 singular at the center".into()))?;
    b.tinv = tinv;
    b.lambda = pc.lambda.map(|z| z.re);
    b.fit(samples);
    Ok(b)
}

fn require_boundary(center: &FrequencyPoint) -> Result<()> {
    if center.gamma.abs() > CLASSIFY_TOL || !center.on_sigma() {
        return Err(Error::Construction(
            "center must lie on the gamma = 0 circle of the hemisphere".into(),
        ));
    }
    Ok(())
}

fn require_sigma(center: &FrequencyPoint) -> Result<()> {
    if !center.on_sigma() {
        return Err(Error::Construction("center not on the hemisphere".into()));
    }
    Ok(())
}

/// Interior and Lopatinskii-OK boundary centers:
/// `T^-1 = (e1 e3 e2 e4)`, `r = diag(-1, K', -1, K')`.
pub fn build_interior(
    s: &BasicState,
    center: &FrequencyPoint,
    samples: &[FrequencyPoint],
) -> Result<SymmetrizerBundle> {
    require_sigma(center)?;
    let cls = classify_point(s, center, CLASSIFY_TOL);
    let (tag, weight) = match cls.tag {
        PointTag::Interior => (PointTag::Interior, Weight::Unit),
        PointTag::BoundaryLopOK => (PointTag::BoundaryLopOK, Weight::Gamma),
        t => {
            return Err(Error::Construction(format!(
                "center classified {t:?}, expected Interior or BoundaryLopOK"
            )))
        }
    };
    let m = eigen_modes(s, center)?;
    let w1 = m.omega1.ok_or(Error::Pole(Pole::P2))?;
    if w1.norm().min(m.omega2.norm()) <= DIAG_OMEGA_MIN {
        return Err(Error::Construction(
            "symbol not diagonalizable at the center (omega too small)".into(),
        ));
    }
    let mut b = base_bundle(s, center, tag, weight, Rhs::Unit);
    b.case = cls;
    finish(b, samples)
}

/// Simple boundary root: `r = diag(-gamma^2, K', -gamma^2, K')`, weight
/// `kappa gamma^3`, coercivity right side `gamma^2 I`.
pub fn build_boundary_root(
    s: &BasicState,
    center: &FrequencyPoint,
    samples: &[FrequencyPoint],
) -> Result<SymmetrizerBundle> {
    require_boundary(center)?;
    let d0 = lopatinskii_det(s, center);
    if !(d0.norm() <= 1e-6) {
        return Err(Error::Construction(format!(
            "|Delta| = {:e} at the center, not a root",
            d0.norm()
        )));
    }
    let h = 1e-6;
    let th = center.eta.atan2(center.delta);
    let dd = (lopatinskii_det(s, &FrequencyPoint::on_circle(th + h))
        - lopatinskii_det(s, &FrequencyPoint::on_circle(th - h)))
        / (2.0 * h);
    if dd.norm() < SIMPLE_ROOT_MIN {
        return Err(Error::Construction(format!(
            "root not simple: |dDelta/darc| = {:e}",
            dd.norm()
        )));
    }
    let m = eigen_modes(s, center)?;
    let w1 = m.omega1.ok_or(Error::Pole(Pole::P2))?;
    if w1.norm().min(m.omega2.norm()) <= DIAG_OMEGA_MIN {
        return Err(Error::Construction(
            "symbol not diagonalizable at the root".into(),
        ));
    }
    let mut b = base_bundle(
        s,
        center,
        PointTag::BoundaryLopRoot,
        Weight::Gamma3,
        Rhs::Gamma2,
    );
    b.case = PointClass {
        tag: PointTag::BoundaryLopRoot,
        distance: d0.norm(),
    };
    finish(b, samples)
}

/// Points where `omega1 = 0` or `omega2 = 0`: Jordan-type `T`, `s`-block
/// symmetrizer, weight `kappa gamma`, unit coercivity.
pub fn build_nondiag(
    s: &BasicState,
    center: &FrequencyPoint,
    samples: &[FrequencyPoint],
) -> Result<SymmetrizerBundle> {
    require_boundary(center)?;
    let cls = classify_point(s, center, CLASSIFY_TOL);
    if !cls.tag.is_omega_zero() {
        return Err(Error::Construction(format!(
            "center classified {:?}, expected an omega-zero point",
            cls.tag
        )));
    }
    if cls.tag == PointTag::Omega2Zero {
        let other = critical_points(s)
            .into_iter()
            .filter(|cp| cp.tag != PointTag::Omega2Zero)
            .map(|cp| cp.point.dist(center))
            .fold(f64::INFINITY, f64::min);
        if other <= 1e3 * CLASSIFY_TOL {
            return Err(Error::Construction(
                "omega2 = 0 coincides with another critical point; eps too large".into(),
            ));
        }
    }
    let d = if cls.tag == PointTag::Omega2Zero {
        d_gamma_omega2_sq(s, center)
    } else {
        d_gamma_omega1_sq(s, center)
    };
    let eps1 = I / d;
    if eps1.im.abs() > 1e-8 * eps1.norm() || eps1.norm() == 0.0 || !eps1.re.is_finite() {
        return Err(Error::Construction(format!(
            "eps1 = {eps1} not real and nonzero"
        )));
    }
    let mut b = base_bundle(s, center, cls.tag, Weight::Gamma, Rhs::Unit);
    b.case = cls;
    b.constants.eps1 = eps1.re;
    finish(b, samples)
}

fn pole_center(s: &BasicState, center: &FrequencyPoint, tag: PointTag) -> Result<PointClass> {
    require_boundary(center)?;
    let cls = classify_point(s, center, CLASSIFY_TOL);
    if cls.tag != tag {
        return Err(Error::Construction(format!(
            "center classified {:?}, expected {tag:?}",
            cls.tag
        )));
    }
    Ok(cls)
}

/// Pole `mu = 0`: `Lambda`, `T` from `m1, m2`; certified on `(U1, U3)` with
/// weight `kappa gamma^2` and right side `gamma^2 I`.
pub fn build_pole_mu(
    s: &BasicState,
    center: &FrequencyPoint,
    samples: &[FrequencyPoint],
) -> Result<SymmetrizerBundle> {
    let cls = pole_center(s, center, PointTag::PoleP1)?;
    let mut b = base_bundle(s, center, PointTag::PoleP1, Weight::Gamma2, Rhs::Gamma2);
    b.case = cls;
    finish(b, samples)
}

/// Pole of `a21` at `gamma = 0`: `T` from `(m1 - m2)^-1`, `r~` with `d1, d2, s`,
/// anisotropic weight, unit coercivity. Centers with `e0 <= 0` use the
/// `eta -> -eta` mirror.
pub fn build_pole_p2(
    s: &BasicState,
    center: &FrequencyPoint,
    samples: &[FrequencyPoint],
) -> Result<SymmetrizerBundle> {
    let cls = pole_center(s, center, PointTag::PoleP2)?;
    if center.eta == 0.0 {
        return Err(Error::Construction("eta = 0 at a P2 center".into()));
    }
    let sigma = ((center.delta + s.v * center.eta) / center.eta).signum();
    let mut b = base_bundle(s, center, PointTag::PoleP2, Weight::Anisotropic, Rhs::Unit);
    b.case = cls;
    b.sigma = sigma;
    let e0 = p2_omega0(s, center, sigma).im;
    b.mirrored = e0 <= 0.0;
    let e0c = if b.mirrored {
        p2_omega0(s, &center.mirrored(), sigma).im
    } else {
        e0
    };
    if !(e0c > 0.0) {
        return Err(Error::Construction(format!(
            "e0 = {e0c:e} <= 0 on both branches"
        )));
    }
    if lopatinskii_det(s, center).norm() <= 1e-8 {
        return Err(Error::Construction(
            "Lopatinskii condition fails at the P2 center".into(),
        ));
    }
    b.constants.e0 = e0c;
    finish(b, samples)
}

/// Pole `tau = 0`: `Lambda'`, `T` from `n1, n2`; certified on `(U1, U3)`
/// with weight `kappa gamma^3` and right side `gamma^2 I`.
pub fn build_pole_tau(
    s: &BasicState,
    center: &FrequencyPoint,
    samples: &[FrequencyPoint],
) -> Result<SymmetrizerBundle> {
    let cls = pole_center(s, center, PointTag::PoleP3)?;
    let m = modes_unchecked(s, center)?;
    let w1 = m.omega1.ok_or(Error::Pole(Pole::P2))?;
    if w1.norm() <= DIAG_OMEGA_MIN {
        return Err(Error::Construction(
            "omega1 vanishes at the tau = 0 pole (|v| equals 1/sqrt(alpha rho))".into(),
        ));
    }
    let mut b = base_bundle(s, center, PointTag::PoleP3, Weight::Gamma3, Rhs::Gamma2);
    b.case = cls;
    finish(b, samples)
}

pub fn build_for_tag(
    s: &BasicState,
    center: &FrequencyPoint,
    tag: PointTag,
    samples: &[FrequencyPoint],
) -> Result<SymmetrizerBundle> {
    match tag {
        PointTag::Interior | PointTag::BoundaryLopOK => build_interior(s, center, samples),
        PointTag::BoundaryLopRoot => build_boundary_root(s, center, samples),
        PointTag::Omega1ZeroA | PointTag::Omega1ZeroB | PointTag::Omega2Zero => {
            build_nondiag(s, center, samples)
        }
        PointTag::PoleP1 => build_pole_mu(s, center, samples),
        PointTag::PoleP2 => build_pole_p2(s, center, samples),
        PointTag::PoleP3 => build_pole_tau(s, center, samples),
    }
}

struct SampleEval {
    gamma: f64,
    ratio: f64,
    unweighted: f64,
    margin: f64,
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Evaluates both inequalities at every sample with the bundle's constants.
pub fn certify(bundle: &SymmetrizerBundle, samples: &[FrequencyPoint]) -> CertificationResult {
    let k = bundle.constants;
    let evals: Vec<std::result::Result<(SampleMatrices, SampleEval), String>> = samples
        .par_iter()
        .map(|p| {
            let m = bundle
                .matrices(p)
                .map_err(|e| format!("({:.6e}, {:.6e}, {:.6e}): {e}", p.gamma, p.delta, p.eta))?;
            let ev = SampleEval {
                gamma: p.gamma,
                ratio: bundle.ratio_with(&m, &k, bundle.weight),
                unweighted: bundle.unweighted_with(&m, &k),
                margin: bundle.coercivity_with(&m, &k, bundle.rhs),
            };
            Ok((m, ev))
        })
        .collect();
    let mut failures = Vec::new();
    let mut ok = Vec::new();
    for e in evals {
        match e {
            Ok(v) => ok.push(v),
            Err(msg) => failures.push(msg),
        }
    }
    let min_diss = ok
        .iter()
        .map(|(_, e)| e.ratio - k.kappa)
        .fold(f64::INFINITY, f64::min);
    let min_coer = ok
        .iter()
        .map(|(_, e)| e.margin)
        .fold(f64::INFINITY, f64::min);
    for (m, e) in &ok {
        if !(e.ratio - k.kappa >= -CERT_TOL) || !(e.margin >= -CERT_TOL) {
            if failures.len() < 20 {
                failures.push(format!(
                    "gamma = {:.3e}, delta = {:.6}: ratio - kappa = {:.3e}, coercivity = {:.3e}",
                    m.point.gamma,
                    m.point.delta,
                    e.ratio - k.kappa,
                    e.margin
                ));
            }
        }
    }

    let mut uniform = true;
    let mut exponent = None;
    let gmin = ok
        .iter()
        .map(|(_, e)| e.gamma)
        .fold(f64::INFINITY, f64::min);
    let gmax = ok.iter().map(|(_, e)| e.gamma).fold(0.0, f64::max);
    if gmin.is_finite() && gmin <= 1e-3 * gmax {
        let low = |g: f64| g <= 2.0 * gmin;
        let high = |g: f64| (500.0 * gmin..=2000.0 * gmin).contains(&g);
        let kl = ok
            .iter()
            .filter(|(_, e)| low(e.gamma))
            .map(|(_, e)| e.ratio)
            .fold(f64::INFINITY, f64::min);
        let kh = ok
            .iter()
            .filter(|(_, e)| high(e.gamma))
            .map(|(_, e)| e.ratio)
            .fold(f64::INFINITY, f64::min);
        if kh.is_finite() && kl.is_finite() && !(kl >= LADDER_KAPPA_DROP * kh) {
            uniform = false;
            failures.push(format!("kappa not uniform in gamma: {kl:.3e} at gamma ~ {gmin:.1e} vs {kh:.3e} a thousand times higher"));
        }
        let hi_set: Vec<SampleMatrices> = ok
            .iter()
            .filter(|(_, e)| e.gamma >= 500.0 * gmin)
            .map(|(m, _)| *m)
            .collect();
        let all_set: Vec<SampleMatrices> = ok.iter().map(|(m, _)| *m).collect();
        let c_hi = bundle.fit_c0(&hi_set, 1.0 / 16.0, bundle.rhs).c;
        let c_all = bundle.fit_c0(&all_set, 1.0 / 16.0, bundle.rhs).c;
        if !(c_all <= LADDER_C_GROWTH * c_hi) {
            uniform = false;
            failures.push(format!(
                "coercivity constant not uniform in gamma: {c_all:.3e} vs {c_hi:.3e}"
            ));
        }
        let mut levels: Vec<f64> = ok
            .iter()
            .map(|(_, e)| e.gamma)
            .filter(|g| LADDER.iter().any(|l| (g - l).abs() <= 1e-15))
            .collect();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for l in levels {
            let v = ok
                .iter()
                .filter(|(_, e)| e.gamma == l)
                .map(|(_, e)| e.unweighted)
                .fold(f64::INFINITY, f64::min);
            if v > 0.0 {
                xs.push(l.ln());
                ys.push(v.ln());
            }
        }
        exponent = fit_slope(&xs, &ys);
    }

    let certified = failures.is_empty()
        && !ok.is_empty()
        && k.kappa > 0.0
        && min_diss >= -CERT_TOL
        && min_coer >= -CERT_TOL
        && k.c < CONSTANT_CAP;
    CertificationResult {
        case: bundle.case.tag,
        center: bundle.center,
        radius: bundle.neighborhood_radius,
        kappa: k.kappa,
        c: k.c,
        kprime: k.kprime,
        weight: bundle.weight,
        rhs: bundle.rhs,
        min_eigs: MinEigs {
            dissipativity: min_diss,
            coercivity: min_coer,
        },
        uniform_in_gamma: uniform,
        ladder_exponent: exponent,
        samples: ok.len(),
        failures,
        certified: certified && uniform,
    }
}

/// Builds the case bundle around `center` and certifies it, halving the
/// radius from `radius0` on failure down to [`MIN_RADIUS`]. Returns the last
/// attempt when none certifies.
pub fn certify_neighborhood(
    s: &BasicState,
    center: &FrequencyPoint,
    tag: PointTag,
    radius0: f64,
) -> Result<(SymmetrizerBundle, CertificationResult)> {
    let mut r = radius0.min(INITIAL_RADIUS);
    let mut last = None;
    while r >= MIN_RADIUS {
        let samples = sample_ball(center, r, SAMPLES_PER_BALL);
        let b = build_for_tag(s, center, tag, &samples)?;
        let res = certify(&b, &samples);
        if res.certified {
            return Ok((b, res));
        }
        last = Some((b, res));
        r *= 0.5;
    }
    last.ok_or_else(|| Error::Construction("radius below minimum".into()))
}

/// Residuals of one similarity identity at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResidual {
    /// `|T T^-1 - I|`
    pub inverse: f64,
    /// relative residual of `T (Lambda A Lambda^-1) T^-1` against its closed form
    pub similarity: f64,
    /// relative residual of `Lambda A Lambda^-1` against its block form (pole cases)
    pub intermediate: Option<f64>,
}

fn rel_resid(a: &M4, b: &M4) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(1.0)
}

/// Checks the similarity identity of the bundle's case at `pt` (not at a pole).
pub fn similarity_residual(
    bundle: &SymmetrizerBundle,
    pt: &FrequencyPoint,
) -> Result<SimilarityResidual> {
    let s = bundle.state();
    let ep = bundle.eval_point(pt);
    let pr = Parts::at(s, &ep);
    let k = ep.k();
    if pr.mu.norm() <= POLE_TOL * k {
        return Err(Error::Pole(Pole::P1));
    }
    if pr.tau.norm() <= POLE_TOL * k {
        return Err(Error::Pole(Pole::P3));
    }
    let pc = bundle.pieces(&ep)?;
    if pc.target.iter().any(|z| !z.is_finite()) {
        return Err(Error::Pole(Pole::P2));
    }
    let a = crate::frequency_symbol::a_from(&coefficients_unchecked(s, &pr));
    let la = pc.lambda * a * pc.lambda_inv;
    let t = match pc.t_full {
        Some(t) => t,
        None => pc
            .tinv_full
            .try_inverse()
            .ok_or_else(|| Error::Construction("T^-1 singular".into()))?,
    };
    Ok(SimilarityResidual {
        inverse: max_abs(&(t * pc.tinv_full - M4::identity())),
        similarity: rel_resid(&(t * la * pc.tinv_full), &pc.target),
        intermediate: pc.intermediate.map(|m| rel_resid(&la, &m)),
    })
}

/// `det` of the 2x2 pole block `T~^-1` at a point: `2 mu^2 m1 (m1 - omega1)`
/// for P1 and `2 tau^2 n1 (n1 - omega2)` for P3, directly and in product form.
pub fn pole_block_det(bundle: &SymmetrizerBundle, pt: &FrequencyPoint) -> Result<(C64, C64)> {
    let s = bundle.state();
    let pr = Parts::at(s, pt);
    let co = coefficients_unchecked(s, &pr);
    let m = modes_unchecked(s, pt)?;
    let pc = bundle.pieces(pt)?;
    match bundle.case.tag {
        PointTag::PoleP1 => {
            let w1 = m.omega1.ok_or(Error::Pole(Pole::P2))?;
            let m1 = (co.a21 + co.a12) * 0.5;
            let b = pc.tinv_full.fixed_view::<2, 2>(0, 0).into_owned();
            Ok((b.determinant(), pr.mu * pr.mu * m1 * (m1 - w1) * 2.0))
        }
        PointTag::PoleP3 => {
            let n1 = (co.a43 + co.a34) * 0.5;
            let b = pc.tinv_full.fixed_view::<2, 2>(2, 2).into_owned();
            Ok((
                b.determinant(),
                pr.tau * pr.tau * n1 * (n1 - m.omega2) * 2.0,
            ))
        }
        _ => Err(Error::InvalidInput("not a pole bundle".into())),
    }
}

/// `m1^2 - m2^2` (P1) or `n1^2 - n2^2` (P3) against `omega_j^2`, relative.
pub fn pole_square_identity(bundle: &SymmetrizerBundle, pt: &FrequencyPoint) -> Result<f64> {
    let s = bundle.state();
    let pr = Parts::at(s, pt);
    let co = coefficients_unchecked(s, &pr);
    let (x, y, w) = match bundle.case.tag {
        PointTag::PoleP1 | PointTag::PoleP2 => (
            (co.a21 + co.a12) * 0.5,
            (co.a21 - co.a12) * 0.5,
            pr.omega1_sq(),
        ),
        PointTag::PoleP3 => (
            (co.a43 + co.a34) * 0.5,
            (co.a43 - co.a34) * 0.5,
            pr.omega2_sq(s),
        ),
        _ => return Err(Error::InvalidInput("not a pole bundle".into())),
    };
    Ok(crate::linalg::rel_diff(x * x - y * y, w))
}

/// P2 bundles: the `(1,1)` entry `R` of `Re(r A'')` and the bound
/// `gamma/|tau~|^2 (-e0 d2 / 2)` it is compared with.
pub fn p2_r_entry(bundle: &SymmetrizerBundle, pt: &FrequencyPoint) -> Result<(f64, f64, C64)> {
    if bundle.case.tag != PointTag::PoleP2 {
        return Err(Error::InvalidInput("not a P2 bundle".into()));
    }
    let m = bundle.matrices(pt)?;
    let h = bundle.dissipativity_matrix(&m);
    let k = &bundle.constants;
    let lead = pt.gamma / m.aux.tau_t.norm_sqr() * (-m.aux.e0 * k.d2 / 2.0);
    Ok((h[(0, 0)].re, lead, m.aux.tau_t))
}

/// Exact rescaling check: `T` and `r` extended with degree 0 and `A`
/// homogeneous of degree 1, so `Re(r T A T^-1)` at `lambda P` is `lambda`
/// times its value at `P` and the coercivity matrix is unchanged. Returns the
/// largest relative deviation over the samples.
pub fn homogeneity_defect(
    bundle: &SymmetrizerBundle,
    samples: &[FrequencyPoint],
    factor: f64,
) -> f64 {
    let s = bundle.state();
    samples
        .par_iter()
        .filter_map(|p| {
            let m = bundle.matrices(p).ok()?;
            let r = bundle.r_at(&m);
            let sp = p.scaled(factor);
            let a = crate::frequency_symbol::assemble_a(s, &sp).ok()?;
            let t = m.tinv.try_inverse()?;
            let scaled = hermitian_part(&(r * t * a * m.tinv));
            let base =
                hermitian_part(&(r * t * crate::frequency_symbol::assemble_a(s, p).ok()? * m.tinv));
            let d1 = max_abs(&(scaled - base * re(factor))) / max_abs(&base).max(1e-300) / factor;
            let bs = boundary_symbols(s, &sp).beta * m.tinv;
            let d2 = max_abs(&(bs - m.beta_t)) / max_abs(&m.beta_t).max(1e-300);
            Some(d1.max(d2))
        })
        .reduce(|| 0.0, f64::max)
}

/// Special points of a state: poles, omega-zero points and boundary roots.
pub fn special_points(s: &BasicState) -> Vec<(PointTag, FrequencyPoint)> {
    let mut v: Vec<(PointTag, FrequencyPoint)> = critical_points(s)
        .into_iter()
        .map(|c| (c.tag, c.point))
        .collect();
    if let Ok(rep) = scan_boundary_roots(s, 2000, CLASSIFY_TOL) {
        for r in rep.boundary_roots {
            v.push((PointTag::BoundaryLopRoot, r.point));
            v.push((PointTag::BoundaryLopRoot, r.point.mirrored()));
        }
    }
    v
}

/// Boundary point farthest from every special point (grid of 3600 angles).
pub fn far_boundary_point(s: &BasicState) -> FrequencyPoint {
    let sp = special_points(s);
    (0..3600)
        .map(|i| FrequencyPoint::on_circle(i as f64 * std::f64::consts::TAU / 3600.0))
        .max_by(|a, b| {
            let da = sp
                .iter()
                .map(|(_, p)| p.dist(a))
                .fold(f64::INFINITY, f64::min);
            let db = sp
                .iter()
                .map(|(_, p)| p.dist(b))
                .fold(f64::INFINITY, f64::min);
            da.partial_cmp(&db).unwrap()
        })
        .expect("nonempty")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringReport {
    pub certifications: Vec<CertificationResult>,
    pub grid_points: usize,
    /// indices of grid points outside every certified ball
    pub uncovered: Vec<usize>,
    pub construction_errors: Vec<String>,
}

impl CoveringReport {
    pub fn complete(&self) -> bool {
        self.uncovered.is_empty()
    }
}

/// Greedy covering of `grid` by certified neighbourhoods: special points
/// first, then uncovered grid points in order. Radii of ordinary centers are
/// capped at half the distance to the nearest special point.
pub fn cover_hemisphere(s: &BasicState, grid: &[FrequencyPoint]) -> CoveringReport {
    let sp = special_points(s);
    let mut certs: Vec<CertificationResult> = Vec::new();
    let mut errors = Vec::new();
    let mut covered = vec![false; grid.len()];
    let mark = |res: &CertificationResult, covered: &mut Vec<bool>| {
        if res.certified {
            for (i, g) in grid.iter().enumerate() {
                if !covered[i] && g.dist(&res.center) <= res.radius {
                    covered[i] = true;
                }
            }
        }
    };
    for (i, (tag, p)) in sp.iter().enumerate() {
        let others = sp
            .iter()
            .enumerate()
            .filter(|(j, (_, q))| *j != i && q.dist(p) > 1e-9)
            .map(|(_, (_, q))| q.dist(p))
            .fold(f64::INFINITY, f64::min);
        match certify_neighborhood(s, p, *tag, INITIAL_RADIUS.min(0.5 * others)) {
            Ok((_, res)) => {
                mark(&res, &mut covered);
                certs.push(res);
            }
            Err(e) => errors.push(format!("{tag:?} at ({:.6}, {:.6}): {e}", p.delta, p.eta)),
        }
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| {
        grid[a]
            .gamma
            .partial_cmp(&grid[b].gamma)
            .unwrap()
            .then(a.cmp(&b))
    });
    for i in order {
        if covered[i] {
            continue;
        }
        let p = grid[i];
        let dsp = sp
            .iter()
            .map(|(_, q)| q.dist(&p))
            .fold(f64::INFINITY, f64::min);
        let tag = if p.gamma > 0.0 {
            PointTag::Interior
        } else {
            PointTag::BoundaryLopOK
        };
        let r0 = INITIAL_RADIUS.min(0.5 * dsp);
        if r0 < MIN_RADIUS {
            errors.push(format!(
                "grid point {i} within {dsp:.1e} of a special point"
            ));
            continue;
        }
        match certify_neighborhood(s, &p, tag, r0) {
            Ok((_, res)) => {
                mark(&res, &mut covered);
                certs.push(res);
            }
            Err(e) => errors.push(format!("grid point {i}: {e}")),
        }
    }
    let uncovered = covered
        .iter()
        .enumerate()
        .filter(|(_, c)| !**c)
        .map(|(i, _)| i)
        .collect();
    CoveringReport {
        certifications: certs,
        grid_points: grid.len(),
        uncovered,
        construction_errors: errors,
    }
}

/// Finite-difference view of the gamma-derivative identities at one boundary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    /// `|Re a12| / |a12|` and `|Re a21| / |a21|` at `gamma = 0`
    pub a12_real_part: f64,
    pub a21_real_part: f64,
    /// Richardson-extrapolated `d/dgamma` of `a12`, `a21`, `omega1^2`, `omega2^2`
    pub d_a12: C64,
    pub d_a21: C64,
    pub d_omega1_sq: C64,
    pub d_omega2_sq: C64,
    /// exact values for comparison
    pub d_omega1_sq_exact: C64,
    pub d_omega2_sq_exact: C64,
}

fn richardson(f: impl Fn(f64) -> C64, h: f64) -> C64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (d(h / 2.0) * 4.0 - d(h)) / 3.0
}

/// Derivatives in `gamma` at a boundary point that is not a pole.
pub fn derivative_report(s: &BasicState, pt: &FrequencyPoint) -> Result<DerivativeReport> {
    let pr = Parts::at(s, pt);
    let k = pt.k();
    if pr.mu.norm() <= POLE_TOL * k || pr.tau.norm() <= POLE_TOL * k {
        return Err(Error::Pole(if pr.mu.norm() <= POLE_TOL * k {
            Pole::P1
        } else {
            Pole::P3
        }));
    }
    let co = coefficients_unchecked(s, &pr);
    let at = |g: f64| {
        let q = Parts::new(s, pt.gamma + g, pt.delta, pt.eta);
        (coefficients_unchecked(s, &q), q)
    };
    let h = 1e-3 * k;
    let rp = |z: C64| z.re.abs() / z.norm().max(1e-300);
    Ok(DerivativeReport {
        a12_real_part: rp(co.a12),
        a21_real_part: rp(co.a21),
        d_a12: richardson(|g| at(g).0.a12, h),
        d_a21: richardson(|g| at(g).0.a21, h),
        d_omega1_sq: richardson(|g| at(g).1.omega1_sq(), h),
        d_omega2_sq: richardson(|g| at(g).1.omega2_sq(s), h),
        d_omega1_sq_exact: d_gamma_omega1_sq(s, pt),
        d_omega2_sq_exact: d_gamma_omega2_sq(s, pt),
    })
}

/// Step used for branch reads inside this module.
pub const BRANCH_STEP: f64 = BRANCH_H;

#[cfg(test)]
mod tests {
    use super::*;

    fn st() -> BasicState {
        BasicState::new(1.0, 2.0, 1.5, 1.0, 0.7, 0.01).unwrap()
    }

    fn center(s: &BasicState, tag: PointTag) -> FrequencyPoint {
        critical_points(s)
            .into_iter()
            .find(|c| c.tag == tag && c.point.eta > 0.0)
            .unwrap()
            .point
    }

    #[test]
    fn halton_prefix() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert!((halton(2, 3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn samples_stay_in_ball() {
        let c0 = FrequencyPoint::on_circle(0.3);
        let v = sample_ball(&c0, 0.05, 200);
        assert!(v.len() >= 200);
        assert!(v
            .iter()
            .all(|p| p.on_sigma() && p.dist(&c0) <= 0.05 && p.gamma > 0.0));
        assert!(v.iter().any(|p| p.gamma == 1e-5));
    }

    #[test]
    fn interior_similarity_and_certificate() {
        let s = st();
        let c0 = FrequencyPoint::from_angles(0.4, 0.8);
        let samples = sample_ball(&c0, 0.1, 300);
        let b = build_interior(&s, &c0, &samples).unwrap();
        assert_eq!(b.weight, Weight::Unit);
        for p in samples.iter().take(100) {
            let r = similarity_residual(&b, p).unwrap();
            assert!(r.similarity <= 1e-10 && r.inverse <= 1e-10, "{r:?}");
        }
        let res = certify(&b, &samples);
        assert!(res.certified, "{res:?}");
        assert!(res.kappa > 0.0);
    }

    #[test]
    fn nondiag_center_is_nilpotent() {
        let s = st();
        let c0 = center(&s, PointTag::Omega1ZeroB);
        let samples = sample_ball(&c0, 0.01, 100);
        let b = build_nondiag(&s, &c0, &samples).unwrap();
        let pc = b.pieces(&c0).unwrap();
        let blk = pc.target.fixed_view::<2, 2>(0, 0).into_owned();
        assert!(
            blk[(0, 0)].norm() < 1e-12 && blk[(1, 0)].norm() < 1e-12 && blk[(1, 1)].norm() < 1e-12
        );
        assert!((blk[(0, 1)] - I).norm() < 1e-15);
        assert!(b.constants.eps1 != 0.0);
    }

    #[test]
    fn p2_omega0_displayed_value() {
        let s = BasicState::reference();
        let c0 = critical_points(&s)
            .into_iter()
            .find(|c| {
                c.tag == PointTag::PoleP2
                    && c.point.eta > 0.0
                    && (c.point.delta + s.v * c.point.eta) > 0.0
            })
            .unwrap()
            .point;
        let w = p2_omega0(&s, &c0, 1.0);
        let a = s.alpha();
        let h2 = s.h * s.h;
        let expect =
            s.h.abs() / s.rho.sqrt() * a * h2 / (2.0 * (1.0 + a * h2).powf(2.5)) * c0.eta.powi(3);
        assert!(w.re.abs() < 1e-14);
        assert!((w.im - expect).abs() < 1e-12 * expect, "{w} vs {expect}");
    }
}
