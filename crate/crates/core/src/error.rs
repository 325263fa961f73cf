use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The field point sits on (or within 1 nm of) a magnet rim circle.
    #[error("field point (r = {r:e} m, z = {z:e} m) is on a magnet edge singularity")]
    EdgeSingularity { r: f64, z: f64 },

    /// The rotor volume intersects a magnet or otherwise violates the geometry.
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("no stable levitation: {0}")]
    NoLevitation(String),

    #[error("unstable mode along {axis}: curvature {curvature:e} J/m^2")]
    UnstableMode { axis: &'static str, curvature: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("mesh resolution error: {0}")]
    Resolution(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("rank-deficient sample geometry: {0}")]
    Rank(String),

    #[error(
        "phase unwrap ambiguity between samples {index} and {next}: |dphi| = {step:.3} rad >= pi"
    )]
    UnwrapAmbiguity {
        index: usize,
        next: usize,
        step: f64,
    },

    #[error("non-positive angular velocity at indices {0:?}")]
    NonPositiveOmega(Vec<usize>),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("schema violation at `{key}`: {message}")]
    Schema { key: String, message: String },

    #[error("missing unit on `{key}`: write it as e.g. `{key}_{example}`")]
    MissingUnit { key: String, example: &'static str },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn schema(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            key: key.into(),
            message: message.into(),
        }
    }
}
