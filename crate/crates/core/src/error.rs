use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("bodies {i} and {j} are {distance:e} apart (collision)")]
    SingularInput { i: usize, j: usize, distance: f64 },
    #[error("mode {k} is degenerate (alpha_k = 0), delta_k undefined")]
    DegenerateMode { k: usize },
    #[error("matrix is not equivariant (residual {residual:e})")]
    NotEquivariant { residual: f64 },
    #[error("{h} does not divide {n}")]
    InvalidDivisor { h: usize, n: usize },
    #[error("configuration is not symmetric (residual {residual:e})")]
    NotSymmetric { residual: f64 },
    #[error("parameter window contains {count} sign-change candidates")]
    AmbiguousWindow { count: usize },
    #[error("bifurcation is not simple: {0}")]
    DegenerateBifurcation(String),
    #[error("branch switch failed: {0}")]
    NoSwitch(String),
    #[error("positivity violated: {0}")]
    Positivity(String),
}
