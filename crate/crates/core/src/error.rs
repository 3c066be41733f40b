use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input parameter is outside its domain.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A graph or weight matrix violates a structural invariant
    /// (e.g. a non-triangular contemporaneous slice).
    #[error("structural error: {0}")]
    Structure(String),

    /// Matrix or tensor dimensions disagree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The VAR process has a companion spectral radius >= 1.
    #[error("unstable process: spectral radius {radius}")]
    Unstable { radius: f64 },

    /// Generation kept hitting unstable draws.
    #[error("generation failed after {attempts} attempts (last spectral radius {radius})")]
    RetriesExhausted { attempts: usize, radius: f64 },

    /// A measure-zero degenerate draw happened twice in a row.
    #[error("degenerate draw at node {node}: {what}")]
    DegenerateDraw { node: usize, what: &'static str },

    /// A data column has zero sample variance.
    #[error("degenerate data: column {column} has zero variance")]
    DegenerateData { column: usize },

    /// The operation needs population semantics but the model is
    /// coupled to a finite sample (iSCM, 50-50).
    #[error("method `{0}` is sample-coupled and has no population moments")]
    SampleCoupled(&'static str),

    /// Queried edge is absent.
    #[error("no edge {from} -> {to}")]
    MissingEdge { from: usize, to: usize },

    /// A numerical routine failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter { name, reason: reason.into() }
    }
}
