use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("time {t} lies outside element {element} = [{left}, {right}]")]
    OutsideElement {
        element: usize,
        t: f64,
        left: f64,
        right: f64,
    },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("right-hand side returned a non-finite value at t = {t}")]
    NonFinite { t: f64 },

    #[error("problem `{0}` has no exact solution")]
    MissingExact(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("Newton iteration did not converge on element {element} (residual {residual:.3e} after {iterations} iterations)")]
    NewtonDiverged {
        element: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("singular Newton system on element {element}")]
    SingularSystem { element: usize },

    #[error("singular linear system")]
    Singular,

    #[error("root finder failed for the left-Radau polynomial with k = {k}")]
    RootFinding { k: usize },

    #[error("unsupported quadrature size {0}")]
    Quadrature(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown problem `{name}`; known problems: {known}")]
    UnknownProblem { name: String, known: String },

    #[error("invalid problem descriptor: {0}")]
    Descriptor(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
