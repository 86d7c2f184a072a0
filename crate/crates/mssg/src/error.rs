use thiserror::Error;

/// Errors shared across the solver modules.
///
/// Validation problems (bad models, bad flags, bad points) are separated
/// from numeric failures so the CLI can map them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Model construction or model file violated an invariant.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A point, direction, or flag value failed validation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The smallest eigenvalue never changes sign along the scanned ray.
    #[error("no solvable point along the given direction")]
    NoSolvablePoint,

    /// `perron_velocity` was called at a point that is not solvable.
    #[error("point is not solvable: {0}")]
    NotSolvable(String),

    /// The eigenvalue bracket for the information-schedule slope failed,
    /// meaning the endpoint is not super-solvable.
    #[error("slope bracket failure: Perron eigenvalue {0} exceeds 1 at zero slope")]
    BracketFailure(f64),

    /// An integrator left its admissible domain.
    #[error("step collapse: {0}")]
    StepCollapse(String),

    /// The second-order system for the tree-descending step is singular.
    #[error("singular linear system in tree-descending step (residual {0:e})")]
    SingularSystem(f64),

    /// Trajectory segments handed to the functional do not tile the domain.
    #[error("segments do not tile the integration domain: {0}")]
    DomainGap(String),

    /// The candidate search found no targeted trajectory at the configured
    /// scan resolution.
    #[error("search inconclusive: no targeted trajectory found ({0})")]
    SearchInconclusive(String),

    /// The damped fixed-point iteration did not reach the residual target.
    #[error("fixed-point iteration did not converge (residual {0:e})")]
    NonConvergence(f64),

    /// No convergence/divergence transition was found when scanning the
    /// spectral parameter.
    #[error("edge scan failure: {0}")]
    ScanFailure(String),

    /// The incremental stage has fewer than two steps at the given `δ`.
    #[error("grid too coarse: {0} incremental steps at delta {1}")]
    GridTooCoarse(usize, f64),

    /// Sampling the Hamiltonian would exceed the configured operation budget.
    #[error("cost guard: {0:.3e} scalar ops exceeds budget {1:.3e}")]
    CostGuard(f64, f64),

    /// An iterate overlap left the trust region; the run diverged.
    #[error("numeric blowup: overlap {0} exceeds limit")]
    NumericBlowup(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code: 2 for validation errors, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidModel(_) | Error::InvalidInput(_) | Error::Io(_) | Error::Json(_) => 2,
            _ => 3,
        }
    }
}
