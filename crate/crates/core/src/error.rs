use thiserror::Error;

/// Which coefficient singularity was hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Pole {
    /// `mu = 0`
    P1,
    /// vanishing denominator of `a21`
    P2,
    /// `tau = 0`
    P3,
}

impl std::fmt::Display for Pole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Pole::P1 => "P1",
            Pole::P2 => "P2",
            Pole::P3 => "P3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid basic state: {0}")]
    InvalidState(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("frequency point rejected: {0}")]
    InvalidPoint(String),
    #[error("coefficient pole {0}")]
    Pole(Pole),
    #[error("singular elimination in the full symbol")]
    SingularElimination,
    #[error("square-root branch ambiguous: {0}")]
    BranchAmbiguity(String),
    #[error("boundary system nearly singular (|det| = {0:e})")]
    NearSingular(f64),
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
