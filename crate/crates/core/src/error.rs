use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Quantum numbers, polarizations or level assignments that do not
    /// describe a physical configuration.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown preset `{name}` (valid presets: {valid})")]
    UnknownPreset { name: String, valid: String },

    /// The trace-constrained Liouvillian could not be solved for a unique
    /// steady state.
    #[error("steady-state solve failed: {reason} (dimension {dim}, smallest pivot {min_pivot:.3e})")]
    Solver { reason: String, dim: usize, min_pivot: f64 },

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("numerical consistency violated: {0}")]
    Numerical(String),

    #[error("at theta = {theta_deg} deg, coupling detuning = {detuning:.6e} rad/s: {source}")]
    GridPoint {
        theta_deg: f64,
        detuning: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
