//! Small fixed-size complex linear algebra helpers.

use nalgebra::{Matrix2, Matrix4, SMatrix, SymmetricEigen, Vector4};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type M2 = Matrix2<C64>;
pub type M4 = Matrix4<C64>;
pub type M24 = SMatrix<C64, 2, 4>;
pub type V4 = Vector4<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `(M + M*) / 2`.
pub fn hermitian_part<const N: usize>(m: &SMatrix<C64, N, N>) -> SMatrix<C64, N, N> {
    (m + m.adjoint()) * re(0.5)
}

/// Eigenvalues of the Hermitian part of a 4x4 matrix, ascending.
pub fn hermitian_eigs4(m: &M4) -> [f64; 4] {
    let h = hermitian_part(m);
    let mut v = [0.0; 4];
    for (o, e) in v.iter_mut().zip(SymmetricEigen::new(h).eigenvalues.iter()) {
        *o = *e;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

pub fn min_eig4(m: &M4) -> f64 {
    hermitian_eigs4(m)[0]
}

/// Eigenvalues of the Hermitian part of a 2x2 matrix, ascending.
pub fn hermitian_eigs2(m: &M2) -> [f64; 2] {
    let h = hermitian_part(m);
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)].norm();
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    [mid - rad, mid + rad]
}

/// Max-abs entry.
pub fn max_abs<const R: usize, const K: usize>(m: &SMatrix<C64, R, K>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn block_diag(a: &M2, b: &M2) -> M4 {
    let mut m = M4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(a);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(b);
    m
}

pub fn diag4(d: [C64; 4]) -> M4 {
    M4::from_diagonal(&V4::new(d[0], d[1], d[2], d[3]))
}

/// Relative distance with an absolute floor.
pub fn rel_diff(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}
