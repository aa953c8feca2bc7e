//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two nulled users have (near-)collinear steering vectors at this APV.
    #[error("rank-deficient steering matrix: users {first} and {second} are nearly collinear (condition estimate {condition:.3e})")]
    RankDeficient {
        first: usize,
        second: usize,
        condition: f64,
    },

    #[error("user {user} coincides with the target in direction and curvature; positioning cannot null it")]
    DegenerateDirection { user: usize },

    #[error("{users} users cannot be nulled with N = {n}: only {factors} prime factors available")]
    InfeasibleFactorization {
        n: usize,
        users: usize,
        factors: usize,
    },

    #[error(
        "users with different angles cannot be combined by the product construction (user {user})"
    )]
    MixedAngles { user: usize },

    #[error("no extension offset up to q = {max_q} keeps spacing >= d_min")]
    SpacingUnattainable { max_q: usize },

    #[error("user {user} has negative curvature coefficient b = {b:.6e}")]
    NegativeCurvature { user: usize, b: f64 },

    #[error("user {user}: {value} is not rational within tolerance at max denominator {max_denominator}")]
    IrrationalInput {
        user: usize,
        value: f64,
        max_denominator: i64,
    },

    #[error("aperture {aperture:.6} m exceeds d_max = {d_max:.6} m")]
    ApertureExceeded { aperture: f64, d_max: f64 },

    #[error("no feasible grid point for antenna {antenna}")]
    EmptyFeasibleSet { antenna: usize },

    #[error("infeasible array: {0}")]
    Infeasible(String),

    #[error("user {user} is not nulled at the nominal APV (|S0| = {residual:.3e})")]
    NotNulled { user: usize, residual: f64 },

    #[error("user {user} is not at full gain at the nominal APV (gain {gain:.9} < N)")]
    NotFullGain { user: usize, gain: f64 },

    #[error("N = {n} exceeds the enumeration budget of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("solver failure: {0}")]
    SolverFailure(String),
}

impl Error {
    /// True for failures of an iterative solver, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::SolverFailure(_))
    }
}
