//! Lopatinskii determinant, its boundary roots and the quartic in `V`.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::basic_state::{
    check_hypotheses, stability_class, BasicState, StabilityClass, HYPOTHESIS_TOL,
};
use crate::error::{Error, Pole, Result};
use crate::frequency_symbol::{critical_points, modes_unchecked, FrequencyPoint, Parts, BRANCH_H};
use crate::linalg::{re, C64};

/// Residual bound on `|Delta|` for an accepted boundary root.
pub const ROOT_RESIDUAL: f64 = 1e-8;

/// `Delta = mu eps tau (mu chi a12 - chi omega1 omega2 Hc^2)`.
///
/// Total on the hemisphere: the products `mu chi a12` and `chi omega1` are
/// finite at every pole, so the determinant vanishes at P1 and P3 through its
/// prefactor and stays nonzero at P2.
pub fn lopatinskii_det(s: &BasicState, pt: &FrequencyPoint) -> C64 {
    let modes = modes_unchecked(s, pt)
        .or_else(|_| modes_unchecked(s, &pt.with_gamma(pt.gamma + BRANCH_H * pt.k())));
    let Ok(m) = modes else {
        return C64::new(f64::NAN, f64::NAN);
    };
    let mu = pt.mu(s);
    let tau = pt.tau();
    mu * tau * s.eps * (m.mu_chi_a12 - m.chi_omega1 * m.omega2 * (s.hc * s.hc))
}

/// `-mu^2 rho - eta^2 H^2 - omega1 omega2 Hc^2`, i.e. `Delta / (mu eps tau chi)`.
pub fn reduced_root_equation(s: &BasicState, pt: &FrequencyPoint) -> Result<C64> {
    let m = modes_unchecked(s, pt)?;
    let w1 = m.omega1.ok_or(Error::Pole(Pole::P2))?;
    let pr = Parts::at(s, pt);
    Ok(-pr.p - w1 * m.omega2 * (s.hc * s.hc))
}

/// The companion factor `-mu^2 rho - eta^2 H^2 + omega1 omega2 Hc^2`.
pub fn spurious_factor(s: &BasicState, pt: &FrequencyPoint) -> Result<C64> {
    let m = modes_unchecked(s, pt)?;
    let w1 = m.omega1.ok_or(Error::Pole(Pole::P2))?;
    let pr = Parts::at(s, pt);
    Ok(-pr.p + w1 * m.omega2 * (s.hc * s.hc))
}

fn root_scale(s: &BasicState, pt: &FrequencyPoint) -> f64 {
    let pr = Parts::at(s, pt);
    let m = modes_unchecked(s, pt).ok();
    let cross = m
        .and_then(|m| m.omega1.map(|w| (w * m.omega2).norm()))
        .unwrap_or(0.0);
    pr.p.norm() + cross * s.hc * s.hc + 1e-300
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoefficients {
    pub c4: f64,
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub discriminant: f64,
    pub p: f64,
    pub q_quartic: f64,
}

impl QuarticCoefficients {
    pub fn from_coeffs(c4: f64, c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        let (a, b, c, d, e) = (c4, c3, c2, c1, c0);
        let disc = 256.0 * a.powi(3) * e.powi(3)
            - 192.0 * a * a * b * d * e * e
            - 128.0 * a * a * c * c * e * e
            + 144.0 * a * a * c * d * d * e
            - 27.0 * a * a * d.powi(4)
            + 144.0 * a * b * b * c * e * e
            - 6.0 * a * b * b * d * d * e
            - 80.0 * a * b * c * c * d * e
            + 18.0 * a * b * c * d.powi(3)
            + 16.0 * a * c.powi(4) * e
            - 4.0 * a * c.powi(3) * d * d
            - 27.0 * b.powi(4) * e * e
            + 18.0 * b.powi(3) * c * d * e
            - 4.0 * b.powi(3) * d.powi(3)
            - 4.0 * b * b * c.powi(3) * e
            + b * b * c * c * d * d;
        let p = 8.0 * a * c - 3.0 * b * b;
        let q = 64.0 * a.powi(3) * e - 16.0 * a * a * c * c + 16.0 * a * b * b * c
            - 16.0 * a * a * b * d
            - 3.0 * b.powi(4);
        QuarticCoefficients {
            c4,
            c3,
            c2,
            c1,
            c0,
            discriminant: disc,
            p,
            q_quartic: q,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.c4, self.c3, self.c2, self.c1, self.c0]
    }

    pub fn eval(&self, x: C64) -> C64 {
        (((re(self.c4) * x + self.c3) * x + self.c2) * x + self.c1) * x + self.c0
    }

    fn deriv(&self, x: C64) -> C64 {
        ((re(4.0 * self.c4) * x + 3.0 * self.c3) * x + 2.0 * self.c2) * x + self.c1
    }
}

/// Coefficients of the quartic in `V = tau / (i eta) + v`.
pub fn quartic_coefficients(s: &BasicState) -> QuarticCoefficients {
    let (r, a, v, e2) = (s.rho, s.alpha(), s.v, s.eps * s.eps);
    let h2 = s.h * s.h;
    let hc4 = s.hc.powi(4);
    QuarticCoefficients::from_coeffs(
        r * r * (1.0 + a * h2) - e2 * r * a * hc4,
        2.0 * e2 * r * a * v * hc4,
        (e2 + r * a - e2 * r * a * v * v) * hc4 - r * h2 * (2.0 + a * h2),
        -2.0 * e2 * v * hc4,
        h2 * h2 - (1.0 - e2 * v * v) * hc4,
    )
}

/// Roots via companion-matrix eigenvalues followed by Newton polishing,
/// sorted by real then imaginary part.
pub fn solve_quartic(q: &QuarticCoefficients) -> Result<[C64; 4]> {
    let cs = q.as_array();
    let cmax = cs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if q.c4.abs() <= 1e-14 * cmax || cmax == 0.0 {
        return Err(Error::InvalidInput(
            "leading quartic coefficient vanishes".into(),
        ));
    }
    let n = [q.c3 / q.c4, q.c2 / q.c4, q.c1 / q.c4, q.c0 / q.c4];
    #[rustfmt::skip]
    let comp = Matrix4::new(
        -n[0], -n[1], -n[2], -n[3],
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.0,
    );
    let ev = comp.complex_eigenvalues();
    let mut roots = [C64::new(0.0, 0.0); 4];
    for (i, z0) in ev.iter().enumerate() {
        let mut z = *z0;
        let mut best = (q.eval(z).norm(), z);
        for _ in 0..50 {
            let d = q.deriv(z);
            if d.norm() == 0.0 {
                break;
            }
            z -= q.eval(z) / d;
            let r = q.eval(z).norm();
            if r < best.0 {
                best = (r, z);
            }
            if r <= 1e-15 * cmax {
                break;
            }
        }
        roots[i] = best.1;
    }
    // snap tiny imaginary parts of roots whose conjugate is the same root
    for z in roots.iter_mut() {
        if z.im.abs() <= 1e-12 * (1.0 + z.re.abs())
            && q.eval(re(z.re)).norm() <= q.eval(*z).norm().max(1e-15 * cmax)
        {
            *z = re(z.re);
        }
    }
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(roots)
}

/// Boundary point for a real `V`, `eta > 0` representative.
pub fn map_v_to_sigma(s: &BasicState, v: f64) -> FrequencyPoint {
    let d = v - s.v;
    let n = (1.0 + d * d).sqrt();
    FrequencyPoint {
        gamma: 0.0,
        delta: d / n,
        eta: 1.0 / n,
    }
}

/// `V = delta / eta + v` for a boundary point.
pub fn v_of_point(s: &BasicState, pt: &FrequencyPoint) -> f64 {
    pt.delta / pt.eta + s.v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleRoot {
    pub v: C64,
    pub real: bool,
    /// `rho V^2 > H^2`
    pub above_alfven: bool,
    /// unsquared equation satisfied at the mapped point
    pub unsquared: bool,
    /// relative residual of the unsquared equation (NaN if not evaluated)
    pub unsquared_residual: f64,
    /// relative residual of the companion factor (NaN if not evaluated)
    pub spurious_residual: f64,
    pub admissible: bool,
}

/// Relative residual threshold for the unsquared equation at a quartic root.
const UNSQUARED_TOL: f64 = 1e-7;

pub fn admissible_roots(s: &BasicState) -> Result<Vec<AdmissibleRoot>> {
    let q = quartic_coefficients(s);
    let roots = solve_quartic(&q)?;
    let mut out = Vec::with_capacity(4);
    for v in roots {
        let real = v.im.abs() <= 1e-9 * (1.0 + v.re.abs());
        let mut r = AdmissibleRoot {
            v,
            real,
            above_alfven: real && s.rho * v.re * v.re > s.h * s.h,
            unsquared: false,
            unsquared_residual: f64::NAN,
            spurious_residual: f64::NAN,
            admissible: false,
        };
        if real {
            let pt = map_v_to_sigma(s, v.re);
            let sc = root_scale(s, &pt);
            if let Ok(f) = reduced_root_equation(s, &pt) {
                r.unsquared_residual = f.norm() / sc;
                r.unsquared = r.unsquared_residual <= UNSQUARED_TOL;
            }
            if let Ok(g) = spurious_factor(s, &pt) {
                r.spurious_residual = g.norm() / sc;
            }
        }
        r.admissible = r.real && r.above_alfven && r.unsquared;
        out.push(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRoot {
    pub point: FrequencyPoint,
    /// `|Delta|` at the refined point
    pub residual: f64,
    /// `|F|` relative to its terms
    pub reduced_residual: f64,
    pub v: f64,
    pub abs_omega1: f64,
    pub distance_to_critical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LopatinskiiReport {
    pub boundary_roots: Vec<BoundaryRoot>,
    pub predicted_count: usize,
    pub observed_count: usize,
    pub quartic_roots: [C64; 4],
    pub admissible_v: Vec<AdmissibleRoot>,
    pub consistency: bool,
    pub exclusion_radius: f64,
    pub refinement_failures: Vec<String>,
    /// smallest `|Delta|` over the non-excluded scan grid
    pub min_abs_delta: f64,
}

fn f_at(s: &BasicState, theta: f64) -> Option<C64> {
    reduced_root_equation(s, &FrequencyPoint::on_circle(theta)).ok()
}

/// Gauss-Newton on the complex-valued `F(theta)`, bisection fallback on its
/// real part after phase alignment.
fn refine(s: &BasicState, lo: f64, hi: f64, start: f64) -> Option<f64> {
    let h = 1e-7;
    let slack = hi - lo;
    let (a, b) = (lo - slack, hi + slack);
    let mut th = start;
    for _ in 0..80 {
        let f = f_at(s, th)?;
        let fp = (f_at(s, th + h)? - f_at(s, th - h)?) / (2.0 * h);
        if fp.norm() == 0.0 {
            break;
        }
        let step = (fp.conj() * f).re / fp.norm_sqr();
        th -= step;
        if th < a || th > b {
            break;
        }
        if step.abs() < 1e-15 {
            break;
        }
    }
    let ok = |t: f64| {
        let pt = FrequencyPoint::on_circle(t);
        f_at(s, t)
            .map(|f| f.norm() <= 1e-11 * root_scale(s, &pt))
            .unwrap_or(false)
    };
    if th >= a && th <= b && ok(th) {
        return Some(th);
    }
    let (fl, fh) = (f_at(s, lo)?, f_at(s, hi)?);
    let dir = fh - fl;
    if dir.norm() == 0.0 {
        return None;
    }
    let ph = dir.conj() / dir.norm();
    let g = |t: f64| f_at(s, t).map(|f| (f * ph).re);
    let (mut x0, mut x1) = (lo, hi);
    let (mut g0, g1) = (g(x0)?, g(x1)?);
    if g0.signum() == g1.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (x0 + x1);
        let gm = g(m)?;
        if gm.signum() == g0.signum() {
            x0 = m;
            g0 = gm;
        } else {
            x1 = m;
        }
        if x1 - x0 < 1e-16 {
            break;
        }
    }
    let m = 0.5 * (x0 + x1);
    if ok(m) {
        Some(m)
    } else {
        None
    }
}

fn wrap(t: f64) -> f64 {
    t.rem_euclid(std::f64::consts::TAU)
}

/// Scan the `gamma = 0` circle for zeros of the reduced root function.
pub fn scan_boundary_roots(s: &BasicState, n_grid: usize, tol: f64) -> Result<LopatinskiiReport> {
    let hyp = check_hypotheses(s, HYPOTHESIS_TOL);
    if !hyp.all_pass() {
        return Err(Error::Hypothesis(hyp.failures().join(",")));
    }
    if n_grid < 1000 {
        return Err(Error::InvalidInput(format!("n_grid = {n_grid} too small")));
    }
    let predicted = match stability_class(s)? {
        StabilityClass::TwoBoundaryRoots => 2,
        StabilityClass::NoRoots => 0,
    };
    let excl = 10.0 * tol;
    let cps = critical_points(s);
    let dt = std::f64::consts::TAU / n_grid as f64;
    let thetas: Vec<f64> = (0..n_grid).map(|i| i as f64 * dt).collect();
    let vals: Vec<Option<f64>> = thetas
        .iter()
        .map(|&t| {
            let pt = FrequencyPoint::on_circle(t);
            if cps.iter().any(|cp| cp.point.dist(&pt) <= excl) {
                None
            } else {
                f_at(s, t).map(|f| f.norm())
            }
        })
        .collect();
    let mut min_abs_delta = f64::INFINITY;
    for (i, v) in vals.iter().enumerate() {
        if v.is_some() {
            let d = lopatinskii_det(s, &FrequencyPoint::on_circle(thetas[i])).norm();
            min_abs_delta = min_abs_delta.min(d);
        }
    }

    let mut found: Vec<f64> = Vec::new();
    let mut failures = Vec::new();
    for i in 0..n_grid {
        let (im, ip) = ((i + n_grid - 1) % n_grid, (i + 1) % n_grid);
        let (Some(f0), Some(fm), Some(fp)) = (vals[i], vals[im], vals[ip]) else {
            continue;
        };
        if !(f0 <= fm && f0 <= fp) {
            continue;
        }
        let t = thetas[i];
        match refine(s, t - dt, t + dt, t) {
            Some(r) => {
                let r = wrap(r);
                let pt = FrequencyPoint::on_circle(r);
                let dcrit = cps
                    .iter()
                    .map(|cp| cp.point.dist(&pt))
                    .fold(f64::INFINITY, f64::min);
                if dcrit <= excl {
                    continue;
                }
                if !found.iter().any(|x| {
                    let d = (x - r).abs();
                    d.min(std::f64::consts::TAU - d) < 1e-8
                }) {
                    found.push(r);
                }
            }
            None => {
                // a local minimum of |F| that is not a zero is the common case;
                // record only candidates that were already small
                let pt = FrequencyPoint::on_circle(t);
                if f0 <= 1e-3 * root_scale(s, &pt) {
                    failures.push(format!("no convergence near theta = {t:.9}"));
                }
            }
        }
    }

    // antipodal pairs counted once, eta > 0 representative
    let mut reps: Vec<FrequencyPoint> = Vec::new();
    for r in &found {
        let mut pt = FrequencyPoint::on_circle(*r);
        if pt.eta < 0.0 || (pt.eta == 0.0 && pt.delta < 0.0) {
            pt = pt.mirrored();
        }
        if !reps.iter().any(|q| q.dist(&pt) < 1e-7) {
            reps.push(pt);
        }
    }
    reps.sort_by(|a, b| a.delta.partial_cmp(&b.delta).unwrap());
    let boundary_roots: Vec<BoundaryRoot> = reps
        .iter()
        .map(|pt| {
            let f = reduced_root_equation(s, pt)
                .map(|f| f.norm())
                .unwrap_or(f64::NAN);
            let m = modes_unchecked(s, pt).ok();
            BoundaryRoot {
                point: *pt,
                residual: lopatinskii_det(s, pt).norm(),
                reduced_residual: f / root_scale(s, pt),
                v: v_of_point(s, pt),
                abs_omega1: m
                    .and_then(|m| m.omega1)
                    .map(|w| w.norm())
                    .unwrap_or(f64::NAN),
                distance_to_critical: cps
                    .iter()
                    .map(|cp| cp.point.dist(pt))
                    .fold(f64::INFINITY, f64::min),
            }
        })
        .collect();
    for br in &boundary_roots {
        if br.residual > ROOT_RESIDUAL {
            failures.push(format!(
                "root at delta = {:.9} has |Delta| = {:e}",
                br.point.delta, br.residual
            ));
        }
    }
    let q = quartic_coefficients(s);
    let quartic_roots = solve_quartic(&q)?;
    let admissible_v = admissible_roots(s)?;
    let n_adm = admissible_v.iter().filter(|a| a.admissible).count();
    let observed = boundary_roots.len();
    Ok(LopatinskiiReport {
        boundary_roots,
        predicted_count: predicted,
        observed_count: observed,
        quartic_roots,
        admissible_v,
        consistency: predicted == observed && observed == n_adm,
        exclusion_radius: excl,
        refinement_failures: failures,
        min_abs_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basic_state::derive_constants;
    use crate::frequency_symbol::{nearest_critical, PointTag};

    #[test]
    fn biquadratic_coefficients() {
        let s = BasicState::new(1.0, 2.0, 2.0, 1.0, 0.5f64.sqrt(), 1e-300).unwrap();
        let q = quartic_coefficients(&s);
        assert!((q.c4 - 1.25).abs() < 1e-14);
        assert!((q.c2 - (0.0625 - 2.25)).abs() < 1e-14);
        assert!((q.c0 - 0.75).abs() < 1e-14);
        assert_eq!((q.c3, q.c1), (0.0, 0.0));
        // at eps = 0 the discriminant takes the factored form 16 a4 a0 (4 a4 a0 - a2^2)^2
        let f = 16.0 * q.c4 * q.c0 * (4.0 * q.c4 * q.c0 - q.c2 * q.c2).powi(2);
        assert!((q.discriminant - f).abs() < 1e-12 * f.abs());
    }

    #[test]
    fn equal_fields_constant_term() {
        let s = BasicState::new(1.0, 2.0, 2.0, 0.8, 0.8, 0.03).unwrap();
        let q = quartic_coefficients(&s);
        assert!((q.c0 - 0.03f64.powi(2) * 4.0 * 0.8f64.powi(4)).abs() < 1e-15);
        let e2 = 0.03f64.powi(2);
        assert!((q.c3 - 2.0 * e2 * 0.25 * 2.0 * 0.8f64.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn quartic_examples() {
        let s = BasicState::new(1.0, 2.0, 2.0, 1.0, 0.5f64.sqrt(), 1e-300).unwrap();
        let r = solve_quartic(&quartic_coefficients(&s)).unwrap();
        let c = derive_constants(&s);
        let expect = [
            -(c.z_plus.sqrt()),
            -(c.z_minus.sqrt()),
            c.z_minus.sqrt(),
            c.z_plus.sqrt(),
        ];
        for (z, e) in r.iter().zip(expect) {
            assert!((z.re - e).abs() < 1e-12 && z.im == 0.0, "{z} vs {e}");
        }
        assert!((expect[3] - 1.13224).abs() < 1e-5 && (expect[2] - 0.68413).abs() < 1e-5);
        let q = QuarticCoefficients::from_coeffs(1.0, -4.0, 6.0, -4.0, 1.0);
        for z in solve_quartic(&q).unwrap() {
            assert!((z - re(1.0)).norm() < 1e-3);
            assert!(q.eval(z).norm() <= 1e-12 * 6.0);
        }
        // H^2 < Hc^2 at eps = 0: two real, two imaginary
        let s = BasicState::new(1.0, 2.0, 2.0, 0.5, 0.9, 1e-300).unwrap();
        let r = solve_quartic(&quartic_coefficients(&s)).unwrap();
        assert_eq!(r.iter().filter(|z| z.im == 0.0).count(), 2);
        assert!(r.iter().filter(|z| z.im != 0.0).all(|z| z.re.abs() < 1e-12));
    }

    #[test]
    fn determinant_at_poles() {
        let s = BasicState::reference();
        let p1 = map_v_to_sigma(&s, s.v);
        assert_eq!(lopatinskii_det(&s, &p1).norm(), 0.0);
        let p3 = FrequencyPoint {
            gamma: 0.0,
            delta: 0.0,
            eta: 1.0,
        };
        assert_eq!(lopatinskii_det(&s, &p3).norm(), 0.0);
        let p2 = nearest_critical(&s, &p3, PointTag::PoleP2).unwrap().0.point;
        assert!(lopatinskii_det(&s, &p2).norm() > 1e-4);
        assert!(matches!(
            reduced_root_equation(&s, &p2),
            Err(Error::Pole(Pole::P2))
        ));
    }

    #[test]
    fn determinant_equals_boundary_matrix_det() {
        let s = BasicState::reference();
        for pt in [
            crate::frequency_symbol::normalize_to_sigma(0.2, 0.5, -0.3).unwrap(),
            FrequencyPoint::on_circle(0.4),
        ] {
            let m = crate::frequency_symbol::eigen_modes(&s, &pt).unwrap();
            let bs = crate::frequency_symbol::boundary_symbols(&s, &pt);
            let b1 = bs.beta * m.e1;
            let b2 = bs.beta * m.e2;
            let det = b1[0] * b2[1] - b1[1] * b2[0];
            let d = lopatinskii_det(&s, &pt);
            assert!((det - d).norm() <= 1e-13 * d.norm().max(1.0), "{det} {d}");
        }
    }

    #[test]
    fn reference_scan() {
        let s = BasicState::reference();
        let r = scan_boundary_roots(&s, 10_000, 1e-6).unwrap();
        assert_eq!(r.observed_count, 2, "{r:?}");
        assert!(r.consistency);
        let zp = derive_constants(&s).z_plus.sqrt();
        for br in &r.boundary_roots {
            assert!(br.residual <= ROOT_RESIDUAL);
            assert!((br.v.abs() - zp).abs() < 0.05);
            assert!(br.distance_to_critical >= 1e-3);
            assert!(br.point.eta > 1e-3);
        }
    }

    #[test]
    fn no_roots_state() {
        let s = BasicState::new(1.0, 0.5, 0.4, 1.0, 0.7, 0.01).unwrap();
        let r = scan_boundary_roots(&s, 10_000, 1e-6).unwrap();
        assert_eq!(r.observed_count, 0);
        assert!(admissible_roots(&s).unwrap().iter().all(|a| !a.admissible));
    }
}
