use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("degenerate profile: asymptotes coincide")]
    DegenerateProfile,
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("potential does not vanish at the wells: F(a) = {fa:e}, F(b) = {fb:e}")]
    UnnormalizedPotential { fa: f64, fb: f64 },
    #[error("tail not closed: integrand {0:e} at the window edge")]
    TailNotClosed(f64),
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("kernel is not even and decreasing on the positive axis")]
    KernelNotDecreasing,
    #[error("boundary values not attained: {0}")]
    BoundaryNotAttained(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),
    #[error("no phase transition found for beta in [{lo}, {hi}]")]
    NoTransition { lo: f64, hi: f64 },
    #[error("subcritical beta: beta = {beta} is not above the critical value {beta_c}")]
    SubcriticalBeta { beta: f64, beta_c: f64 },
    #[error("no convergence after {iterations} sweeps (residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },
    #[error("iterate left the window: {0}")]
    DivergedOutOfWindow(String),
    #[error("insufficient tail: {0} usable points")]
    InsufficientTail(usize),
    #[error("certification failed for competitors {0:?}")]
    CertificationFailure(Vec<usize>),
    #[error("front not converged")]
    NotConverged,
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::QuadratureFailure(_)
            | Error::OracleMismatch(_)
            | Error::MaxIterExceeded { .. }
            | Error::DivergedOutOfWindow(_)
            | Error::InsufficientTail(_)
            | Error::CertificationFailure(_)
            | Error::NotConverged
            | Error::TailNotClosed(_)
            | Error::NoTransition { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
