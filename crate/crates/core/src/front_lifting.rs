//! Lifting of a front `phi(x2)` to the half-plane by the Fourier multiplier
//! `chi(x1 <D>)`, on an `L`-periodic grid.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSample {
    pub values: Vec<Complex64>,
    pub length: f64,
}

impl FrontSample {
    pub fn new(values: Vec<Complex64>, length: f64) -> Result<Self> {
        let n = values.len();
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "N = {n} must be a power of two >= 16"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidInput(format!(
                "L = {length} must be positive"
            )));
        }
        if values.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(FrontSample { values, length })
    }

    pub fn from_fn(n: usize, length: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let dx = length / n as f64;
        Self::new(
            (0..n).map(|j| f(j as f64 * dx - 0.5 * length)).collect(),
            length,
        )
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Grid point `j`, centred on zero.
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.length / self.n() as f64 - 0.5 * self.length
    }

    /// Discrete frequencies in FFT order.
    pub fn xi(&self) -> Vec<f64> {
        let n = self.n();
        let w = std::f64::consts::TAU / self.length;
        (0..n)
            .map(|k| {
                if k <= n / 2 {
                    k as f64 * w
                } else {
                    (k as f64 - n as f64) * w
                }
            })
            .collect()
    }

    /// Unitary DFT of the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        FftPlanner::new()
            .plan_fft_forward(self.n())
            .process(&mut buf);
        let s = 1.0 / (self.n() as f64).sqrt();
        buf.iter_mut().for_each(|z| *z *= s);
        buf
    }

    /// `(sum <xi>^(2s) |phi hat|^2 L/N)^(1/2)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let h = self.spectrum();
        let w = self.length / self.n() as f64;
        self.xi()
            .iter()
            .zip(&h)
            .map(|(x, z)| (1.0 + x * x).powf(s) * z.norm_sqr())
            .sum::<f64>()
            .sqrt()
            * w.sqrt()
    }

    pub fn h2_norm(&self) -> f64 {
        self.sobolev_norm(2.0)
    }
}

/// Even cutoff with `chi = 1` on `[-1, 1]` and support in `[-M, M]`.
///
/// `-chi'` on `[1, M]` is a plateau of height `A` joined to zero by cubic
/// smoothsteps of width `l`, so `chi` is `C^2` and `max |chi'| = A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub m: f64,
    /// shoulder width `l`
    pub shoulder: f64,
    /// plateau height `A = 1 / (M - 1 - l)`
    pub height: f64,
}

fn step3(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn step3_int(t: f64) -> f64 {
    t * t * t - 0.5 * t * t * t * t
}

pub fn make_cutoff(m: f64) -> Result<CutoffSpec> {
    if !(m > 1.0) || !m.is_finite() {
        return Err(Error::InvalidInput(format!("M = {m} must exceed 1")));
    }
    let w = m - 1.0;
    let shoulder = if m > 2.0 {
        (0.25 * w).min(0.5 * m - 1.0)
    } else {
        0.05 * w
    };
    Ok(CutoffSpec {
        m,
        shoulder,
        height: 1.0 / (w - shoulder),
    })
}

impl CutoffSpec {
    fn weight(&self, s: f64) -> f64 {
        let (m, l) = (self.m, self.shoulder);
        if s <= 1.0 || s >= m {
            0.0
        } else if s < 1.0 + l {
            step3((s - 1.0) / l)
        } else if s > m - l {
            step3((m - s) / l)
        } else {
            1.0
        }
    }

    fn dweight(&self, s: f64) -> f64 {
        let (m, l) = (self.m, self.shoulder);
        let d3 = |t: f64| 6.0 * t * (1.0 - t);
        if s <= 1.0 || s >= m {
            0.0
        } else if s < 1.0 + l {
            d3((s - 1.0) / l) / l
        } else if s > m - l {
            -d3((m - s) / l) / l
        } else {
            0.0
        }
    }

    /// `int_1^s weight`
    fn weight_int(&self, s: f64) -> f64 {
        let (m, l) = (self.m, self.shoulder);
        let total = m - 1.0 - l;
        if s <= 1.0 {
            0.0
        } else if s >= m {
            total
        } else if s < 1.0 + l {
            l * step3_int((s - 1.0) / l)
        } else if s > m - l {
            total - l * step3_int((m - s) / l)
        } else {
            0.5 * l + (s - 1.0 - l)
        }
    }

    pub fn chi(&self, s: f64) -> f64 {
        let a = s.abs();
        if a >= self.m {
            return 0.0;
        }
        (1.0 - self.height * self.weight_int(a)).max(0.0)
    }

    pub fn dchi(&self, s: f64) -> f64 {
        -self.height * self.weight(s.abs()) * s.signum()
    }

    pub fn d2chi(&self, s: f64) -> f64 {
        -self.height * self.dweight(s.abs())
    }

    /// `max |chi'|`
    pub fn max_derivative(&self) -> f64 {
        self.height
    }

    /// `max |chi'| <= 2/M`; not attainable by a `C^2` ramp for `M <= 2`.
    pub fn meets_derivative_bound(&self) -> bool {
        self.height <= 2.0 / self.m * (1.0 + 1e-12)
    }
}

/// `Psi(x1, x2)` on `x1_grid x` the front grid, together with `d1 Psi`.
#[derive(Debug, Clone)]
pub struct Lifted {
    pub x1: Vec<f64>,
    pub psi: Vec<Vec<Complex64>>,
    pub d1psi: Vec<Vec<Complex64>>,
    pub front: FrontSample,
    pub cutoff: CutoffSpec,
}

fn inverse(mut buf: Vec<Complex64>) -> Vec<Complex64> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

/// Row `x1` of `Psi` and of `d1 Psi`.
fn row(
    hat: &[Complex64],
    xi: &[f64],
    cut: &CutoffSpec,
    x1: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let br: Vec<f64> = xi.iter().map(|x| (1.0 + x * x).sqrt()).collect();
    let p = hat
        .iter()
        .zip(&br)
        .map(|(z, b)| z * cut.chi(x1 * b))
        .collect();
    let d = hat
        .iter()
        .zip(&br)
        .map(|(z, b)| z * (cut.dchi(x1 * b) * b))
        .collect();
    (inverse(p), inverse(d))
}

/// `Psi(x1, .) = F^-1 chi(x1 <xi>) F phi`.
pub fn lift(front: &FrontSample, cutoff: &CutoffSpec, x1_grid: &[f64]) -> Lifted {
    let hat = front.spectrum();
    let xi = front.xi();
    let rows: Vec<_> = x1_grid
        .par_iter()
        .map(|&x| row(&hat, &xi, cutoff, x))
        .collect();
    let (psi, d1psi) = rows.into_iter().unzip();
    Lifted {
        x1: x1_grid.to_vec(),
        psi,
        d1psi,
        front: front.clone(),
        cutoff: *cutoff,
    }
}

impl Lifted {
    /// `max_x2 |Psi(0, x2) - phi(x2)|`
    pub fn trace_error(&self) -> Result<f64> {
        let i = self
            .x1
            .iter()
            .position(|&x| x == 0.0)
            .ok_or_else(|| Error::InvalidInput("x1 grid lacks 0".into()))?;
        Ok(self.psi[i]
            .iter()
            .zip(&self.front.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn sup_d1(&self) -> f64 {
        self.d1psi
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|Psi|` over rows with `x1 > M`.
    pub fn tail_max(&self) -> f64 {
        self.x1
            .iter()
            .zip(&self.psi)
            .filter(|(x, _)| **x > self.cutoff.m)
            .flat_map(|(_, r)| r.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }

    /// Trapezoidal `||Psi||_{L^2(x1; H^m(x2))}` over the `x1` grid.
    pub fn sobolev_norm(&self, m: f64) -> f64 {
        let xi = self.front.xi();
        let w = self.front.length / self.front.n() as f64;
        let per_row: Vec<f64> = self
            .psi
            .iter()
            .map(|r| {
                let mut buf = r.clone();
                FftPlanner::new()
                    .plan_fft_forward(buf.len())
                    .process(&mut buf);
                let s = 1.0 / (buf.len() as f64);
                xi.iter()
                    .zip(&buf)
                    .map(|(x, z)| (1.0 + x * x).powf(m) * z.norm_sqr() * s)
                    .sum::<f64>()
                    * w
            })
            .collect();
        let mut acc = 0.0;
        for i in 1..self.x1.len() {
            acc += 0.5 * (per_row[i] + per_row[i - 1]) * (self.x1[i] - self.x1[i - 1]);
        }
        acc.sqrt()
    }

    /// Writes `x1, x2, re, im` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Io(e.to_string()))?;
        let mut w = std::io::BufWriter::new(f);
        let io = |e: std::io::Error| Error::Io(e.to_string());
        writeln!(w, "x1,x2,re,im").map_err(io)?;
        for (x1, r) in self.x1.iter().zip(&self.psi) {
            for (j, z) in r.iter().enumerate() {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    x1,
                    self.front.x(j),
                    z.re,
                    z.im
                )
                .map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }
}

/// One-sided difference `max |Psi(h) - Psi(0)| / h`; the grid must contain `0` and `h`.
pub fn verify_flatness(lifted: &Lifted, h: f64) -> Result<f64> {
    let find = |v: f64| {
        lifted
            .x1
            .iter()
            .position(|&x| (x - v).abs() <= 1e-14 * v.abs().max(1.0))
            .ok_or_else(|| Error::InvalidInput(format!("x1 grid lacks {v}")))
    };
    let (i0, i1) = (find(0.0)?, find(h)?);
    Ok(lifted.psi[i1]
        .iter()
        .zip(&lifted.psi[i0])
        .map(|(a, b)| (a - b).norm() / h)
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinfDecay {
    pub m_values: Vec<f64>,
    pub sup_d1: Vec<f64>,
    /// `sup |d1 Psi| M^(3/4) / ||phi||_{H^2}`
    pub ratios: Vec<f64>,
    /// constant fitted at the smallest `M`
    pub constant: f64,
    /// every ratio at most `constant`
    pub bounded: bool,
    /// log-log slope of `sup |d1 Psi|` against `M`
    pub exponent: f64,
    /// `sup |d1 Psi|` nonincreasing in `M`
    pub monotone: bool,
}

/// Uniform `x1` grid on `[0, M]` with `per_unit` points per unit length.
pub fn decay_grid(m: f64, per_unit: usize) -> Vec<f64> {
    let n = (per_unit as f64 * m).ceil() as usize;
    (0..=n).map(|i| m * i as f64 / n as f64).collect()
}

pub fn linf_decay_check(front: &FrontSample, m_list: &[f64]) -> Result<LinfDecay> {
    if m_list.is_empty() || m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("M list must be increasing".into()));
    }
    let norm = front.h2_norm();
    let mut sups = Vec::new();
    for &m in m_list {
        let cut = make_cutoff(m)?;
        let grid = decay_grid(m, 64);
        sups.push(lift(front, &cut, &grid).sup_d1());
    }
    let ratios: Vec<f64> = sups
        .iter()
        .zip(m_list)
        .map(|(s, m)| {
            if norm > 0.0 {
                s * m.powf(0.75) / norm
            } else {
                0.0
            }
        })
        .collect();
    let constant = ratios[0];
    let bounded = ratios.iter().all(|r| *r <= constant * (1.0 + 1e-9));
    let (xs, ys): (Vec<f64>, Vec<f64>) = m_list
        .iter()
        .zip(&sups)
        .filter(|(_, s)| **s > 0.0)
        .map(|(m, s)| (m.ln(), s.ln()))
        .unzip();
    let exponent = if xs.len() >= 2 {
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>()
    } else {
        0.0
    };
    let monotone = sups.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    Ok(LinfDecay {
        m_values: m_list.to_vec(),
        sup_d1: sups,
        ratios,
        constant,
        bounded,
        exponent,
        monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffeoReport {
    /// `min (1 + Re d1 Psi)` over the grid
    pub min_jacobian: f64,
    pub m: f64,
    pub ok: bool,
}

/// `1 + d1 Psi >= 1/2` on the grid.
pub fn diffeo_check(lifted: &Lifted) -> DiffeoReport {
    let min = lifted
        .d1psi
        .iter()
        .flatten()
        .map(|z| 1.0 + z.re)
        .fold(f64::INFINITY, f64::min);
    DiffeoReport {
        min_jacobian: min,
        m: lifted.cutoff.m,
        ok: min >= 0.5,
    }
}
