use std::ops::Range;

/// Errors raised by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// The assembled Hamiltonian is not symmetric. This points at an index or
    /// sign-factor bug, never at user input.
    #[error("basis assembly failed: asymmetry {asymmetry:.3e} exceeds {tolerance:.1e} x max entry {scale:.3e}")]
    BasisAssembly {
        asymmetry: f64,
        scale: f64,
        tolerance: f64,
    },

    #[error("eigensolver failed on a {dim}x{dim} matrix{}", detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default())]
    Eigensolver { dim: usize, detail: Option<String> },

    #[error("level {level} lost {deficiency:.3e} of its norm in a Fock space with cutoff {fock_cutoff}")]
    RepresentationLoss {
        level: usize,
        deficiency: f64,
        fock_cutoff: usize,
    },

    #[error("level range {range:?} outside a spectrum of {available} levels")]
    LevelRange {
        range: Range<usize>,
        available: usize,
    },

    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("representation mismatch: {0}")]
    RepresentationMismatch(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("relative entropy undefined: weight {weight:.3e} outside the support of the reference state")]
    Support { weight: f64 },

    #[error("positivity lost at t = {time}: minimum eigenvalue {min_eigenvalue:.3e} (dt = {dt}; reduce the step)")]
    Positivity {
        time: f64,
        min_eigenvalue: f64,
        dt: f64,
    },

    #[error("unitarity lost: purity drifted by {drift:.3e} with dt = {dt} over {steps} steps; reduce the step")]
    Unitarity { drift: f64, dt: f64, steps: usize },

    #[error("hot and cold spectra differ in dimension ({hot} vs {cold})")]
    DimensionMismatch { hot: usize, cold: usize },

    #[error("cycle {cycle}, stroke {stroke}: {source}")]
    Stroke {
        cycle: usize,
        stroke: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::invalid(field, reason)
}
