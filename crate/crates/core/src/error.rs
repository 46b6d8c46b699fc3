use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge `{0}` joins a vertex to itself")]
    LoopEdge(String),
    #[error("edge `{id}` has non-positive or non-finite length {length}")]
    NonpositiveLength { id: String, length: f64 },
    #[error("`{from}` references unknown vertex or edge `{target}`")]
    DanglingReference { from: String, target: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("operation requires at least one lead")]
    NoLeads,
    #[error("position {x} outside edge `{id}` of length {length}")]
    OutOfRange { id: String, x: f64, length: f64 },
    #[error("unknown edge or lead `{0}`")]
    UnknownEdge(String),
    #[error("edge `{edge}` is not incident to vertex `{vertex}`")]
    NotIncident { edge: String, vertex: String },
    #[error("lead integral with nonzero weight does not converge")]
    DivergentLeadIntegral,
    #[error("contour passes through (or too close to) a zero near {re}+{im}i")]
    ContourThroughZero { re: f64, im: f64 },
    #[error("argument-principle subdivision exceeded depth {0}")]
    MaxDepthExceeded(usize),
    #[error("spectral point has multiplicity {0}, a simple point is required")]
    NotSimple(usize),
    #[error("spectral point is not an embedded eigenvalue")]
    NotEmbedded,
    #[error("scattering system is singular and inconsistent (residual {0:e})")]
    SingularInconsistent(f64),
    #[error("lost track of the spectral point at t = {t}: {reason}")]
    LostTrack { t: f64, reason: String },
    #[error("need at least 4 nonzero t samples, got {0}")]
    GridTooCoarse(usize),
    #[error("shift {delta} is too large for the cutoff layout on edge `{id}`")]
    SupportsOverlap { id: String, delta: f64 },
    #[error("spectral point is not an outgoing resonant state")]
    NotOutgoing,
    #[error("resonance too deep: |Im λ| = {eps} ≥ {bound}")]
    ResonanceTooDeep { eps: f64, bound: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Whether the error stems from malformed or inconsistent input rather
    /// than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::LoopEdge(_)
                | Error::NonpositiveLength { .. }
                | Error::DanglingReference { .. }
                | Error::DuplicateId(_)
                | Error::InvalidPerturbation(_)
                | Error::Parse(_)
                | Error::NoLeads
                | Error::OutOfRange { .. }
                | Error::UnknownEdge(_)
                | Error::NotIncident { .. }
                | Error::InvalidArgument(_)
        )
    }
}
