use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no sign change of the shooting discriminant for s in [{s_min}, {s_max}]")]
    BracketFailure { s_min: f64, s_max: f64 },

    #[error("startup series diverges at r0 = {r0} (correction ratio {ratio:.3e})")]
    SingularStartup { r0: f64, ratio: f64 },

    #[error("tail contribution {estimate:.3e} exceeds requested accuracy {tol:.3e}")]
    TailUnresolved { estimate: f64, tol: f64 },

    #[error("inverse iteration did not converge in {0} iterations")]
    IterationStall(usize),

    #[error("origin is not an interior point of the domain")]
    OriginOutside,

    #[error("weight exponent {0} is not integrable at the origin")]
    NonIntegrableWeight(f64),

    #[error("function vanishes identically")]
    ZeroFunction,

    #[error("point {0} lies outside the domain")]
    OutsideDomain(f64),

    #[error("mass {mass} differs from 1 by more than {tol:.1e}")]
    MassViolation { mass: f64, tol: f64 },

    #[error("cutoff ball of radius {needed} does not fit in the domain (distance to boundary {available})")]
    DomainTooSmall { needed: f64, available: f64 },

    #[error("gradient flow did not converge in {iterations} iterations (last update {last_change:.3e})")]
    NotConverged { iterations: usize, last_change: f64 },

    #[error("energy {energy:.6e} fell below the floor {floor:.3e} after {iterations} iterations")]
    EnergyDiverged { energy: f64, floor: f64, iterations: usize },

    #[error("positivity lost at iteration {iteration} with time step {dt:.3e}")]
    NonPositive { iteration: usize, dt: f64 },

    #[error("scaling fit needs at least {needed} records spanning a decade, got {got} spanning {span:.2} decades")]
    InsufficientSpan { needed: usize, got: usize, span: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParams(_)
            | Error::Config(_)
            | Error::OriginOutside
            | Error::NonIntegrableWeight(_)
            | Error::OutsideDomain(_)
            | Error::DomainTooSmall { .. } => 1,
            _ => 2,
        }
    }
}
