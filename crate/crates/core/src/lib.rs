//! Continuous-variable structured collision models.
//!
//! A single harmonic oscillator (the system) collides repeatedly with fresh
//! environmental units, each a ring of `N_E` spring-coupled oscillators
//! prepared in a thermal state. Everything is Gaussian, so the state is
//! carried by covariance matrices in the interleaved ordering
//! `(x1, p1, x2, p2, ...)` and every Hamiltonian is `H = ½ Rᵀ M R`.
//! Natural units throughout: `ħ = m = k_B = 1`.
//!
//! Module map:
//!
//! * [`gaussian`]: symplectic linear algebra, thermal states, symplectic
//!   eigenvalues, normal modes, matrix exponential.
//! * [`model`]: Hamiltonian and drift matrices for the system, the ring unit,
//!   beamsplitter and spring couplings, and the optional drain bath.
//! * [`engine`]: collision steppers (exact, second-order superoperator,
//!   discrete spring recursion), continuous Lyapunov dynamics and steady
//!   states, and the trajectory driver.
//! * [`thermo`]: energy, heat, work, entropy and entropy production.
//! * [`effective`]: closed-form predictions (effective squeezed bath,
//!   steady-state energies and work, critical coupling).

pub mod effective;
pub mod engine;
mod error;
pub mod gaussian;
pub mod model;
pub mod thermo;

pub use error::{Error, Result};

pub use engine::{
    build_lyapunov, discrete_recursion_step, exact_collision_step, integrate_lyapunov, simulate,
    solve_steady_state, superoperator_step, CollisionModel, CollisionScenario, LyapunovSystem,
    PropagationMode, Trajectory, TrajectoryPoint,
};
pub use gaussian::{
    matrix_exponential, normal_mode_decomposition, ring_mode_frequencies, symplectic_eigenvalues,
    symplectic_form, thermal_covariance, CovarianceMatrix, NormalModeDecomposition,
    QuadraticHamiltonian, SymplecticForm,
};
pub use model::{
    CouplingKind, CouplingSpec, CouplingWeights, DrainSpec, ModeSelector, RingUnitSpec,
    StrengthSemantics, SystemSpec,
};
pub use thermo::ThermoRecord;
