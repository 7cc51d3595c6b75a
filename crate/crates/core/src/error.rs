use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector ({0}, {1}, {2}) cannot be normalized to a unit vector")]
    InvalidVector(f64, f64, f64),

    #[error("angle {0} rad is outside [0, pi]")]
    InvalidAngle(f64),

    #[error("grid resolution must be at least 1")]
    ZeroResolution,

    #[error("unknown figure tag `{0}` (expected one of 1a, 1b, 2a, 2b, 3a, 3b)")]
    UnknownFigure(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("duplicate node `{0}`")]
    DuplicateNode(String),

    #[error("edge {0} -> {1} closes a directed cycle")]
    Cycle(String, String),

    #[error("independence query sets overlap on node `{0}`")]
    OverlappingQuery(String),

    #[error("independence query needs non-empty left and right sets")]
    EmptyQuery,

    #[error("graph lacks the nodes needed for the measurement-independence check")]
    MissingMicNodes,

    #[error("graph is not one of the built-in figures")]
    NotBuiltin,

    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error("trial count must be at least 1")]
    ZeroTrials,

    #[error("angle scan needs at least 2 steps, got {0}")]
    TooFewSteps(usize),

    #[error(
        "degenerate setting pair (angle {phi} rad): endpoint rule excludes parallel and \
         antiparallel directions from discretization"
    )]
    DegenerateSettings { phi: f64 },

    #[error("settings prior is invalid: {0}")]
    InvalidPrior(String),

    #[error("setting directions do not embed into distinct grid cells ({0})")]
    NotEmbeddable(String),

    #[error("reports were computed on incompatible grids (resolution {0} vs {1})")]
    IncompatibleGrids(u32, u32),

    #[error("model {0} is not a three-hidden-variable model")]
    NotThreeHidden(String),
}
