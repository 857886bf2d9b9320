use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not symmetric (max asymmetry {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("negative temperature {0}")]
    NegativeTemperature(f64),

    #[error("unstable mode {mode}: squared frequency {omega_sq:e} is not positive")]
    UnstableMode { mode: usize, omega_sq: f64 },

    #[error("unstable ring (N_E = {n_oscillators}): lambda_I = {lambda_i} is at or below the critical coupling {critical}")]
    UnstableRing {
        n_oscillators: usize,
        lambda_i: f64,
        critical: f64,
    },

    #[error("Hamiltonian outside the supported class: {0}")]
    UnsupportedHamiltonian(String),

    #[error("unphysical covariance matrix: smallest eigenvalue of sigma + i Omega/2 is {min_eigenvalue:e}")]
    Unphysical { min_eigenvalue: f64 },

    #[error("symplectic eigenvalues failed to pair (gap {gap:e})")]
    PairingFailure { gap: f64 },

    #[error("continuum limit diverges: spring weights sum to {weight_sum:e}, the renormalized system frequency blows up as dt -> 0")]
    ContinuumLimitDiverges { weight_sum: f64 },

    #[error("no steady state: drift has an eigenvalue with real part {max_real_part:e} >= 0")]
    NoSteadyState { max_real_part: f64 },

    #[error("integration diverged at t = {t}: |entry| = {max_entry:e}")]
    Diverged { t: f64, max_entry: f64 },

    #[error("inverse coth undefined for argument {0} (must exceed 1)")]
    CothDomain(f64),

    #[error("no bracketing interval for the root in [{lower}, {upper}]")]
    NoBracket { lower: f64, upper: f64 },

    #[error("entropy production undefined at zero bath temperature")]
    ZeroTemperature,

    #[error("all couplings are zero")]
    AllCouplingsZero,

    #[error("wrong model kind: {0}")]
    WrongModel(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("singular linear system")]
    Singular,
}
