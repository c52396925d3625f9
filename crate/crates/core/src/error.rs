use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("grid mismatch between {0} and {1}")]
    GridMismatch(&'static str, &'static str),

    #[error("quadrature weights underflow: lambda1*dx = {0} exceeds 50")]
    QuadratureUnderflow(f64),

    #[error("tail rate {rate} does not give a convergent kernel integral (needs rate > -{limit})")]
    DivergentTail { rate: f64, limit: f64 },

    #[error("precondition violated at node {node} (x = {x}): value {value} exceeds bound {bound}")]
    Precondition {
        node: usize,
        x: f64,
        value: f64,
        bound: f64,
    },

    #[error("hypothesis {hypothesis} fails: {detail}")]
    Hypothesis {
        hypothesis: &'static str,
        detail: String,
    },

    #[error("time step {dt} violates the {gate} stability gate (limit {limit})")]
    StabilityGate {
        gate: &'static str,
        dt: f64,
        limit: f64,
    },

    #[error("blow-up at t = {t}: max u = {max} exceeds cap {cap}")]
    BlowUp {
        t: f64,
        max: f64,
        cap: f64,
        profile: Vec<f64>,
    },

    #[error("clipped mass {clipped} exceeds tolerance relative to total mass {total} at t = {t}")]
    ClippedMass { t: f64, clipped: f64, total: f64 },

    #[error("{what} did not converge after {iterations} iterations (last increment {last})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last: f64,
    },

    #[error("inner evolution increased by {violation} at t = {t}; the scheme lost monotonicity")]
    Monotonicity { t: f64, violation: f64 },

    #[error("iterate left the envelope class by {violation}")]
    EnvelopeEscape { violation: f64 },

    #[error("no admissible D below 1e12: {term} dominates")]
    NoAdmissibleD { term: &'static str },

    #[error("need at least {needed} samples in window, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("front position undefined at t = {t}")]
    FrontLost { t: f64 },
}
