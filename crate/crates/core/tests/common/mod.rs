#![allow(dead_code)]

use cvcm_core::*;
use nalgebra::DMatrix;
use rand::Rng;

/// Random physical single-mode state: rotated, squeezed thermal.
pub fn random_state<R: Rng>(rng: &mut R) -> CovarianceMatrix {
    let nu: f64 = rng.gen_range(0.5..2.5);
    let r: f64 = rng.gen_range(-0.8..0.8);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (s, c) = phi.sin_cos();
    let t = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]) * DMatrix::from_row_slice(2, 2, &[r.exp(), 0.0, 0.0, (-r).exp()]);
    CovarianceMatrix::new(&t * t.transpose() * nu).unwrap()
}

pub fn scenario(
    kind: CouplingKind,
    selector: ModeSelector,
    strength: f64,
    semantics: StrengthSemantics,
    lambda_i: f64,
    dt: f64,
) -> CollisionScenario {
    CollisionScenario {
        system: SystemSpec::new(1.0, 1.0).unwrap(),
        unit: RingUnitSpec::new(4, 1.0, lambda_i, 1.0).unwrap(),
        coupling: CouplingSpec::single_mode(kind, selector, strength, semantics),
        dt,
        n_steps: 1,
        drain: None,
        mode: PropagationMode::ExactStep,
        ode_step: None,
    }
}

/// Energy of a single-mode state.
pub fn energy(sigma: &CovarianceMatrix, omega: f64) -> f64 {
    cvcm_core::thermo::system_energy(sigma, omega)
}
