use thiserror::Error;

/// Errors raised by the simulation, estimation and decision routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("loop count must be at least 1")]
    ZeroLoops,
    #[error("transmission amplitude {0} outside [0, 1]")]
    TauOutOfRange(f64),
    #[error("probability {name} = {value} outside the admissible range")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("particle count must be at least 1")]
    ZeroParticles,
    #[error(
        "tau = {tau} is not below the Zeno threshold {threshold} for L = {loops}; \
         the asymptotic law does not apply"
    )]
    OutsideZenoRegime {
        tau: f64,
        loops: u32,
        threshold: f64,
    },
    #[error("channel probabilities sum to {sum}, drift exceeds 1e-12")]
    InconsistentProbabilities { sum: f64 },
    #[error("H1 must absorb less than H2 (p_a1 = {p_a1}, p_a2 = {p_a2})")]
    MisorderedHypotheses { p_a1: f64, p_a2: f64 },
    #[error("hypotheses have identical absorption probability; they cannot be distinguished")]
    IndistinguishableHypotheses,
    #[error("trinomial decision line is degenerate (zero denominator)")]
    DegenerateGeometry,
    #[error("outcome (n_z = {n_z}, n_o = {n_o}) lies outside the triangle for N = {n_particles}")]
    OutcomeOutsideTriangle {
        n_z: u64,
        n_o: u64,
        n_particles: u64,
    },
    #[error("target error probability {target} is unreachable: {reason}")]
    UnreachableTarget { target: f64, reason: &'static str },
    #[error("invalid gray model: {0}")]
    InvalidModel(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("special function did not converge for a = {a}, b = {b}, x = {x}")]
    NoConvergence { a: f64, b: f64, x: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
