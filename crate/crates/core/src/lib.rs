//! Stability analysis of the linearized plasma-vacuum interface problem with
//! a displacement-current vacuum.
//!
//! The crate follows the frequency-domain route: classify points of the
//! unit hemisphere of Laplace-Fourier frequencies, locate the zeros of the
//! Lopatinskii determinant, build and numerically certify Kreiss
//! symmetrizers around every kind of point, probe the resulting energy
//! estimates on exact normal-mode solutions, and lift the front to the
//! half-plane.

pub mod basic_state;
pub mod energy_verify;
pub mod error;
pub mod frequency_symbol;
pub mod front_lifting;
pub mod linalg;
pub mod lopatinskii;
pub mod sweep;
pub mod symmetrizer;

pub use basic_state::{
    check_hypotheses, derive_constants, stability_class, BasicState, DerivedConstants,
    HypothesisCheck, HypothesisReport, StabilityClass,
};
pub use energy_verify::{gamma_sweep, probe, BoundaryData, EnergyProbeResult, GammaSweep};
pub use error::{Error, Pole, Result};
pub use frequency_symbol::{
    assemble_a, boundary_symbols, classify_point, eigen_modes, normalize_to_sigma,
    reduce_full_symbol, symbol_coefficients, BoundarySymbols, FrequencyPoint, ModeDecomposition,
    PointClass, PointTag, SymbolCoefficients,
};
pub use front_lifting::{lift, make_cutoff, CutoffSpec, FrontSample, Lifted};
pub use lopatinskii::{
    admissible_roots, lopatinskii_det, map_v_to_sigma, quartic_coefficients, reduced_root_equation,
    scan_boundary_roots, solve_quartic, LopatinskiiReport, QuarticCoefficients,
};
pub use sweep::{run_sweep, SweepConfig, SweepOutcome, Task};
pub use symmetrizer::{
    certify, certify_neighborhood, cover_hemisphere, CertificationResult, CoveringReport, Rhs,
    SymmetrizerBundle, Weight,
};
