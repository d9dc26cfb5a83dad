use crate::solver::Unconverged;

/// Errors produced anywhere in the reconstruction pipeline.
#[derive(Debug, thiserror::Error)]
pub enum SfsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// The Oren-Nayar `tan(beta)` term needs `cos(theta_r) > 0`.
    #[error("degenerate view direction: cos(theta_r) = {cos_theta_r:e}")]
    DegenerateView { cos_theta_r: f64 },

    #[error("brightness {value} outside the model range (0, {max}]")]
    BrightnessOutOfRange { value: f64, max: f64 },

    /// `P(x, z) < 0` at the listed nodes; the operator is not monotone there.
    #[error("negative coefficient P (min {min_p:e}) at {} node(s), first {:?}", nodes.len(), nodes.first())]
    NonpositiveP {
        nodes: Vec<(usize, usize)>,
        min_p: f64,
    },

    #[error("degenerate Phong denominator Q = {q:e} at node ({i}, {j})")]
    DegenerateQ { i: usize, j: usize, q: f64 },

    #[error("Kruzkov value {v} outside [0, 1/mu) for mu = {mu}")]
    DomainError { v: f64, mu: f64 },

    #[error("no convergence after {} iterations (last update {:e})", .0.report.iterations, .0.report.last_residual())]
    NoConvergence(Box<Unconverged>),

    #[error("mask has no inside nodes")]
    EmptyMask,

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("unsupported PGM depth: maxval {0}")]
    UnsupportedDepth(u32),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SfsError> = std::result::Result<T, E>;
