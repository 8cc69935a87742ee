//! Batch driver over parameter grids.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basic_state::{check_hypotheses, stability_class, BasicState, StabilityClass};
use crate::energy_verify::{gamma_sweep, BoundaryData};
use crate::error::{Error, Result};
use crate::frequency_symbol::FrequencyPoint;
use crate::front_lifting::{
    diffeo_check, lift, linf_decay_check, make_cutoff, verify_flatness, FrontSample,
};
use crate::lopatinskii::{lopatinskii_det, scan_boundary_roots, BoundaryRoot};
use crate::symmetrizer::{cover_hemisphere, far_boundary_point, CertificationResult};

pub const PARAMS: [&str; 6] = ["rho", "sound_speed", "v", "H", "Hc", "eps"];

/// `gamma` values of the energy sweeps; the slope uses the three smallest.
pub const SWEEP_GAMMAS: [f64; 5] = [1e-4, 2e-4, 4e-4, 1e-2, 1e-1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Hypotheses,
    Roots,
    Symmetrizers,
    Energy,
    Lifting,
}

impl std::str::FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "hypotheses" => Ok(Task::Hypotheses),
            "roots" => Ok(Task::Roots),
            "symmetrizers" => Ok(Task::Symmetrizers),
            "energy" => Ok(Task::Energy),
            "lifting" => Ok(Task::Lifting),
            o => Err(Error::Config(format!("unknown task {o:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub hypothesis: f64,
    /// exclusion tolerance handed to the root scan
    pub root: f64,
    pub root_grid: usize,
    /// allowed deviation of the energy slopes from -1 and 0
    pub slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hypothesis: crate::basic_state::HYPOTHESIS_TOL,
            root: crate::frequency_symbol::CLASSIFY_TOL,
            root_grid: 4000,
            slope: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftingConfig {
    pub n: usize,
    pub length: f64,
    /// Gaussian front `amplitude * exp(-x^2)`
    pub amplitude: f64,
    pub m_values: [f64; 4],
}

impl Default for LiftingConfig {
    fn default() -> Self {
        LiftingConfig {
            n: 256,
            length: 20.0,
            amplitude: 0.3,
            m_values: [4.0, 16.0, 64.0, 256.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: BasicState,
    #[serde(default)]
    pub axes: Vec<Axis>,
    #[serde(default = "default_hemisphere_n")]
    pub hemisphere_n: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub tasks: BTreeSet<Task>,
    #[serde(default)]
    pub lifting: LiftingConfig,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

fn default_hemisphere_n() -> usize {
    16
}

fn default_out() -> PathBuf {
    PathBuf::from("sweep_out")
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: SweepConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Config("no tasks".into()));
        }
        let mut seen = BTreeSet::new();
        for a in &self.axes {
            if !PARAMS.contains(&a.param.as_str()) {
                return Err(Error::Config(format!("unknown axis {:?}", a.param)));
            }
            if !seen.insert(a.param.as_str()) {
                return Err(Error::Config(format!("axis {:?} repeated", a.param)));
            }
            if a.count == 0 {
                return Err(Error::Config(format!("axis {:?} has zero count", a.param)));
            }
            if !(a.min.is_finite() && a.max.is_finite()) || a.max < a.min {
                return Err(Error::Config(format!("axis {:?} has a bad range", a.param)));
            }
        }
        if self.hemisphere_n < 8 {
            return Err(Error::Config(format!(
                "hemisphere_n = {} < 8",
                self.hemisphere_n
            )));
        }
        let t = &self.tolerances;
        if !(t.hypothesis > 0.0 && t.root > 0.0 && t.slope > 0.0) || t.root_grid < 1000 {
            return Err(Error::Config(
                "tolerances must be positive and root_grid >= 1000".into(),
            ));
        }
        let l = &self.lifting;
        if l.n < 16
            || !l.n.is_power_of_two()
            || !(l.length > 0.0)
            || l.m_values.iter().any(|m| !(*m > 1.0))
        {
            return Err(Error::Config("bad lifting settings".into()));
        }
        Ok(())
    }

    /// Grid indices in lexicographic order, first axis slowest.
    pub fn grid(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for a in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p| (0..a.count).map(move |i| [p.clone(), vec![i]].concat()))
                .collect();
        }
        out
    }
}

/// Latitude rings on the hemisphere, `n` of them above the `gamma = 0`
/// circle, which gets `8n` points (twice the density of the rings).
pub fn hemisphere_grid(n: usize) -> Vec<FrequencyPoint> {
    let n = n.max(8);
    let mut pts = Vec::new();
    let eq = 8 * n;
    for k in 0..eq {
        pts.push(FrequencyPoint::on_circle(
            std::f64::consts::TAU * k as f64 / eq as f64,
        ));
    }
    for j in 1..n {
        let phi = std::f64::consts::FRAC_PI_2 * j as f64 / n as f64;
        let m = ((4 * n) as f64 * phi.cos()).round().max(1.0) as usize;
        for k in 0..m {
            let th = std::f64::consts::TAU * (k as f64 + 0.5 * (j % 2) as f64) / m as f64;
            pts.push(FrequencyPoint::from_angles(th, phi));
        }
    }
    pts.push(FrequencyPoint {
        gamma: 1.0,
        delta: 0.0,
        eta: 0.0,
    });
    pts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramRow {
    pub index: Vec<usize>,
    pub state: Option<BasicState>,
    pub params: [f64; 6],
    pub hypotheses_pass: Option<bool>,
    pub failed_hypotheses: Vec<String>,
    /// `None` for rejected states
    pub stability_class: Option<StabilityClass>,
    pub predicted_roots: Option<usize>,
    pub root_count: Option<usize>,
    pub min_abs_delta_boundary: Option<f64>,
    pub min_abs_delta_interior: Option<f64>,
    pub certified: Option<usize>,
    pub certifications: Option<usize>,
    pub covering_complete: Option<bool>,
    pub slope_root: Option<f64>,
    pub slope_regular: Option<f64>,
    pub consistent: bool,
    pub error: Option<String>,
    #[serde(skip)]
    roots: Vec<BoundaryRoot>,
    #[serde(skip)]
    certs: Vec<CertificationResult>,
    #[serde(skip)]
    energy: Vec<(String, FrequencyPoint, f64, Vec<(f64, f64)>)>,
}

fn params_of(base: &BasicState, axes: &[Axis], idx: &[usize]) -> [f64; 6] {
    let mut p = [
        base.rho,
        base.sound_speed,
        base.v,
        base.h,
        base.hc,
        base.eps,
    ];
    for (a, &i) in axes.iter().zip(idx) {
        let k = PARAMS
            .iter()
            .position(|n| *n == a.param)
            .expect("validated");
        p[k] = a.values()[i];
    }
    p
}

fn run_row(
    cfg: &SweepConfig,
    idx: Vec<usize>,
    row_no: usize,
    hemi: &[FrequencyPoint],
) -> DiagramRow {
    let params = params_of(&cfg.base, &cfg.axes, &idx);
    let mut row = DiagramRow {
        index: idx,
        state: None,
        params,
        hypotheses_pass: None,
        failed_hypotheses: vec![],
        stability_class: None,
        predicted_roots: None,
        root_count: None,
        min_abs_delta_boundary: None,
        min_abs_delta_interior: None,
        certified: None,
        certifications: None,
        covering_complete: None,
        slope_root: None,
        slope_regular: None,
        consistent: true,
        error: None,
        roots: vec![],
        certs: vec![],
        energy: vec![],
    };
    let s = match BasicState::new(
        params[0], params[1], params[2], params[3], params[4], params[5],
    ) {
        Ok(s) => s,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.state = Some(s);
    let hyp = check_hypotheses(&s, cfg.tolerances.hypothesis);
    row.hypotheses_pass = Some(hyp.all_pass());
    row.failed_hypotheses = hyp.failures().into_iter().map(String::from).collect();
    if !hyp.all_pass() {
        return row;
    }
    match stability_class(&s) {
        Ok(c) => row.stability_class = Some(c),
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    }
    let tasks = &cfg.tasks;
    let needs_roots = tasks.contains(&Task::Roots) || tasks.contains(&Task::Energy);
    if needs_roots {
        match scan_boundary_roots(&s, cfg.tolerances.root_grid, cfg.tolerances.root) {
            Ok(rep) => {
                row.predicted_roots = Some(rep.predicted_count);
                row.root_count = Some(rep.observed_count);
                row.min_abs_delta_boundary = Some(rep.min_abs_delta);
                row.consistent &= rep.consistency;
                row.roots = rep.boundary_roots;
            }
            Err(e) => {
                row.error = Some(e.to_string());
                row.consistent = false;
                return row;
            }
        }
    }
    if tasks.contains(&Task::Roots) {
        let m = hemi
            .iter()
            .filter(|p| p.gamma > 0.0)
            .map(|p| lopatinskii_det(&s, p).norm())
            .fold(f64::INFINITY, f64::min);
        row.min_abs_delta_interior = Some(m);
        row.consistent &= m > 0.0;
    }
    if tasks.contains(&Task::Symmetrizers) {
        let rep = cover_hemisphere(&s, hemi);
        row.certified = Some(rep.certifications.iter().filter(|c| c.certified).count());
        row.certifications = Some(rep.certifications.len());
        row.covering_complete = Some(rep.complete());
        row.consistent &= rep.complete();
        row.certs = rep.certifications;
    }
    if tasks.contains(&Task::Energy) {
        let mut rng = ChaCha8Rng::seed_from_u64(row_no as u64);
        let g = BoundaryData::random(&mut rng);
        let tol = cfg.tolerances.slope;
        let mut targets: Vec<(String, FrequencyPoint, f64)> = row
            .roots
            .iter()
            .map(|r| ("root".to_string(), r.point, -1.0))
            .collect();
        targets.push(("regular".into(), far_boundary_point(&s), 0.0));
        let mut worst_root: Option<f64> = None;
        for (kind, pt, want) in targets {
            match gamma_sweep(&s, &pt, &SWEEP_GAMMAS, &g) {
                Ok(sw) => {
                    row.consistent &= (sw.slope - want).abs() <= tol;
                    if kind == "root" {
                        if worst_root.map_or(true, |w| (sw.slope + 1.0).abs() > (w + 1.0).abs()) {
                            worst_root = Some(sw.slope);
                        }
                    } else {
                        row.slope_regular = Some(sw.slope);
                    }
                    let pts = SWEEP_GAMMAS
                        .iter()
                        .zip(&sw.results)
                        .map(|(g, r)| (*g, r.amplification))
                        .collect();
                    row.energy.push((kind, pt, sw.slope, pts));
                }
                Err(e) => {
                    row.consistent = false;
                    row.error = Some(format!("energy sweep at {kind}: {e}"));
                }
            }
        }
        row.slope_root = worst_root;
    }
    row
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftingSummary {
    pub h2_norm: f64,
    pub trace_error: f64,
    pub flatness: f64,
    pub decay_ratios: Vec<f64>,
    pub decay_constant: f64,
    pub decay_bounded: bool,
    pub min_jacobian: f64,
    pub diffeo_ok: bool,
}

pub fn lifting_summary(cfg: &LiftingConfig) -> Result<LiftingSummary> {
    let a = cfg.amplitude;
    let front = FrontSample::from_fn(cfg.n, cfg.length, |x| {
        Complex64::new(a * (-x * x).exp(), 0.0)
    })?;
    let decay = linf_decay_check(&front, &cfg.m_values)?;
    let m = cfg.m_values[0];
    let h = 1e-3;
    let mut grid = vec![0.0, h];
    grid.extend(
        crate::front_lifting::decay_grid(m, 64)
            .into_iter()
            .filter(|x| *x > h),
    );
    let l = lift(&front, &make_cutoff(m)?, &grid);
    let d = diffeo_check(&l);
    Ok(LiftingSummary {
        h2_norm: front.h2_norm(),
        trace_error: l.trace_error()?,
        flatness: verify_flatness(&l, h)?,
        decay_ratios: decay.ratios,
        decay_constant: decay.constant,
        decay_bounded: decay.bounded,
        min_jacobian: d.min_jacobian,
        diffeo_ok: d.ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub version: String,
    pub config: SweepConfig,
    pub rows: usize,
    pub rejected: usize,
    pub inconsistent: Vec<usize>,
    pub hemisphere_points: usize,
    pub lifting: Option<LiftingSummary>,
    pub lifting_error: Option<String>,
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<DiagramRow>,
    pub summary: SweepSummary,
    pub exit_code: i32,
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn of(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

fn os<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn diagram_csv(rows: &[DiagramRow]) -> String {
    let mut out = String::from(
        "row,index,rho,sound_speed,v,H,Hc,eps,hypotheses_pass,failed_hypotheses,stability_class,predicted_roots,root_count,\
         min_abs_delta_boundary,min_abs_delta_interior,certified,certifications,covering_complete,slope_root,slope_regular,consistent,error\n",
    );
    for (i, r) in rows.iter().enumerate() {
        let idx = r
            .index
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(":");
        let p: Vec<String> = r.params.iter().map(|x| f(*x)).collect();
        let class = r
            .stability_class
            .map(|c| format!("{c:?}"))
            .unwrap_or_else(|| "Rejected".into());
        writeln!(
            out,
            "{i},{idx},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.join(","),
            os(r.hypotheses_pass),
            csv_text(&r.failed_hypotheses.join(";")),
            class,
            os(r.predicted_roots),
            os(r.root_count),
            of(r.min_abs_delta_boundary),
            of(r.min_abs_delta_interior),
            os(r.certified),
            os(r.certifications),
            os(r.covering_complete),
            of(r.slope_root),
            of(r.slope_regular),
            r.consistent,
            csv_text(r.error.as_deref().unwrap_or("")),
        )
        .expect("string write");
    }
    out
}

pub fn roots_csv(rows: &[DiagramRow]) -> String {
    let mut out = String::from(
        "row,gamma,delta,eta,v,residual,reduced_residual,abs_omega1,distance_to_critical\n",
    );
    for (i, r) in rows.iter().enumerate() {
        for b in &r.roots {
            writeln!(
                out,
                "{i},{},{},{},{},{},{},{},{}",
                f(b.point.gamma),
                f(b.point.delta),
                f(b.point.eta),
                f(b.v),
                f(b.residual),
                f(b.reduced_residual),
                f(b.abs_omega1),
                f(b.distance_to_critical)
            )
            .expect("string write");
        }
    }
    out
}

pub fn energy_csv(rows: &[DiagramRow]) -> String {
    let mut out = String::from("row,kind,delta,eta,slope,gamma,amplification\n");
    for (i, r) in rows.iter().enumerate() {
        for (kind, pt, slope, pts) in &r.energy {
            for (g, a) in pts {
                writeln!(
                    out,
                    "{i},{kind},{},{},{},{},{}",
                    f(pt.delta),
                    f(pt.eta),
                    f(*slope),
                    f(*g),
                    f(*a)
                )
                .expect("string write");
            }
        }
    }
    out
}

#[derive(Serialize)]
struct RowCerts<'a> {
    row: usize,
    certifications: &'a [CertificationResult],
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io(format!("{}: {e}", path.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(io(&p))
}

/// Runs every grid point, then writes the five report files into
/// `config.output_dir`. Exit code 0 when every row is consistent and the
/// lifting checks pass, 1 otherwise.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let hemi = hemisphere_grid(config.hemisphere_n);
    let grid = config.grid();
    let rows: Vec<DiagramRow> = grid
        .into_par_iter()
        .enumerate()
        .map(|(i, idx)| run_row(config, idx, i, &hemi))
        .collect();
    let (lifting, lifting_error) = if config.tasks.contains(&Task::Lifting) {
        match lifting_summary(&config.lifting) {
            Ok(l) => (Some(l), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let inconsistent: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.consistent)
        .map(|(i, _)| i)
        .collect();
    let lifting_ok = lifting_error.is_none()
        && lifting.as_ref().map_or(true, |l| {
            l.trace_error <= 1e-12 && l.decay_bounded && l.diffeo_ok
        });
    let exit_code = if inconsistent.is_empty() && lifting_ok {
        0
    } else {
        1
    };
    let summary = SweepSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        rows: rows.len(),
        rejected: rows.iter().filter(|r| r.stability_class.is_none()).count(),
        inconsistent,
        hemisphere_points: hemi.len(),
        lifting,
        lifting_error,
        exit_code,
    };
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    write(dir, "diagram.csv", &diagram_csv(&rows))?;
    write(dir, "roots.csv", &roots_csv(&rows))?;
    write(dir, "energy.csv", &energy_csv(&rows))?;
    let certs: Vec<RowCerts> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| RowCerts {
            row: i,
            certifications: &r.certs,
        })
        .collect();
    write(dir, "certifications.json", &to_json(&certs))?;
    write(dir, "summary.json", &to_json(&summary))?;
    Ok(SweepOutcome {
        rows,
        summary,
        exit_code,
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_lexicographic() {
        let cfg = SweepConfig::from_json(
            r#"{"base":{"rho":1,"sound_speed":2,"v":2,"H":1,"Hc":0.7,"eps":0.01},
                "axes":[{"param":"H","min":0.5,"max":1.0,"count":2},{"param":"v","min":1,"max":3,"count":3}],
                "tasks":["hypotheses"]}"#,
        )
        .unwrap();
        let g = cfg.grid();
        assert_eq!(g.len(), 6);
        assert_eq!(g[1], vec![0, 1]);
        assert_eq!(g[3], vec![1, 0]);
    }

    #[test]
    fn empty_tasks_rejected() {
        let e = SweepConfig::from_json(
            r#"{"base":{"rho":1,"sound_speed":2,"v":2,"H":1,"Hc":0.7,"eps":0.01},"tasks":[]}"#,
        );
        assert!(matches!(e, Err(Error::Config(_))));
    }

    #[test]
    fn hemisphere_grid_shape() {
        let g = hemisphere_grid(8);
        assert!(g
            .iter()
            .all(|p| (p.k() - 1.0).abs() <= 1e-12 && p.gamma >= 0.0));
        assert!(g
            .iter()
            .any(|p| p.gamma == 0.0 && (p.eta - 1.0).abs() < 1e-15));
        assert!(g
            .iter()
            .any(|p| p.gamma == 0.0 && (p.eta + 1.0).abs() < 1e-15));
        let r = hemisphere_grid(32).len() as f64 / hemisphere_grid(16).len() as f64;
        assert!((3.5..4.5).contains(&r), "{r}");
    }
}
