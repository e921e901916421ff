use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("{op} did not converge after {iterations} terms/iterations")]
    NonConvergence { op: &'static str, iterations: usize },

    #[error("invalid interval: a = {a} must be < c = {c}")]
    InvalidInterval { a: f64, c: f64 },

    #[error("grid needs at least 2 cells, got {0}")]
    TooFewCells(usize),

    #[error("point t = {t} outside the admissible range ({lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("window [{b}, {c}] is not inside ({a}, {end}]")]
    Window { a: f64, b: f64, c: f64, end: f64 },

    #[error("non-finite sample at t = {t}")]
    NonFinite { t: f64 },

    #[error("beta + gamma = {sum} exceeds 1")]
    Regime { sum: f64 },

    #[error("Hölder exponent p = {p} inadmissible for alpha = {alpha}: (1 - alpha) p = {gp} must be < 1/2")]
    Inadmissible { alpha: f64, p: f64, gp: f64 },

    #[error("order alpha = {0} outside (1/2, 1)")]
    Order(f64),

    #[error("mismatched grids")]
    GridMismatch,

    #[error("Picard iteration stalled after {iterations} iterations (last increment {last_increment:e}, last ratio {last_ratio:?})")]
    SolverNonConvergence {
        iterations: usize,
        last_increment: f64,
        last_ratio: Option<f64>,
    },

    #[error("singular 2x2 step system at node {node}")]
    SingularStep { node: usize },

    #[error("audit failure: inequality {inequality} violated at trial {trial} (seed {seed}): lhs = {lhs:e}, rhs = {rhs:e}")]
    AuditFailure {
        inequality: &'static str,
        trial: usize,
        seed: u64,
        lhs: f64,
        rhs: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
