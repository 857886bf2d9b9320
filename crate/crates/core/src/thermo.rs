//! Energy, heat, work and entropy bookkeeping.
//!
//! Sign convention: heat `ΔQ > 0` flows into the system, work `ΔW > 0` is
//! done on it, and `ΔU = ΔQ + ΔW`.

use nalgebra::DMatrix;

use crate::gaussian::{
    direct_sum, symplectic_eigenvalues, thermal_factor, CovarianceMatrix, QuadraticHamiltonian,
    TAU_PHYS, ZERO_TEMPERATURE,
};
use crate::{Error, Result};

/// Symplectic eigenvalues this close to ½ count as pure.
pub const TAU_PURE: f64 = 1e-12;
/// Allowed negative entropy production.
pub const TAU_LAW: f64 = 1e-8;
/// Allowed first-law residual per collision.
pub const TAU_FIRST_LAW: f64 = 1e-12;

/// One row of the ledger. In collision modes the differences are per
/// collision; in continuous mode they are rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoRecord {
    pub t: f64,
    pub energy: f64,
    pub du: f64,
    /// Total heat, primary environment plus drain.
    pub dq: f64,
    /// Heat from the drain alone (zero without one).
    pub dq_drain: f64,
    pub dw: f64,
    pub entropy: f64,
    pub ds: f64,
    /// `None` when a bath sits at zero temperature.
    pub entropy_production: Option<f64>,
}

impl ThermoRecord {
    /// Initial row: no step taken yet.
    pub fn initial(t: f64, energy: f64, entropy: f64) -> Self {
        Self {
            t,
            energy,
            du: 0.0,
            dq: 0.0,
            dq_drain: 0.0,
            dw: 0.0,
            entropy,
            ds: 0.0,
            entropy_production: Some(0.0),
        }
    }

    pub fn first_law_residual(&self) -> f64 {
        (self.du - self.dq - self.dw).abs()
    }
}

fn trace_pairing(delta: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    0.5 * delta.component_mul(m).sum()
}

fn check_pair(before: &CovarianceMatrix, after: &CovarianceMatrix, dim: usize) -> Result<()> {
    for s in [before, after] {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "collision ledger",
                expected: dim,
                found: s.dim(),
            });
        }
    }
    Ok(())
}

/// `(ΔU, ΔQ, ΔW)` of one collision from the total state before and after.
/// `system` is the bare system Hamiltonian; `environment` covers everything
/// else in the collision. Each term is its own trace.
pub fn energy_heat_work(
    before: &CovarianceMatrix,
    after: &CovarianceMatrix,
    system: &QuadraticHamiltonian,
    environment: &QuadraticHamiltonian,
) -> Result<(f64, f64, f64)> {
    let ns = system.matrix().nrows();
    let ne = environment.matrix().nrows();
    check_pair(before, after, ns + ne)?;
    let delta = after.matrix() - before.matrix();
    let zs = DMatrix::zeros(ns, ns);
    let ze = DMatrix::zeros(ne, ne);
    let du = trace_pairing(&delta, &direct_sum(system.matrix(), &ze));
    let dq = -trace_pairing(&delta, &direct_sum(&zs, environment.matrix()));
    let dw = trace_pairing(&delta, &direct_sum(system.matrix(), environment.matrix()));
    Ok((du, dq, dw))
}

/// Heat delivered by the bath occupying rows `offset..offset + dim(bath)`.
pub fn bath_heat(
    before: &CovarianceMatrix,
    after: &CovarianceMatrix,
    offset: usize,
    bath: &QuadraticHamiltonian,
) -> Result<f64> {
    let k = bath.matrix().nrows();
    if before.dim() != after.dim() || offset + k > before.dim() {
        return Err(Error::DimensionMismatch {
            context: "bath heat",
            expected: offset + k,
            found: before.dim().min(after.dim()),
        });
    }
    let delta = after.matrix().view((offset, offset), (k, k)) - before.matrix().view((offset, offset), (k, k));
    Ok(-trace_pairing(&delta, bath.matrix()))
}

/// `⟨H_S⟩ = ½(ω² σ_xx + σ_pp)` of a single oscillator.
pub fn system_energy(sigma: &CovarianceMatrix, omega: f64) -> f64 {
    let s = sigma.matrix();
    0.5 * (omega * omega * s[(0, 0)] + s[(1, 1)])
}

/// `S_e(ν) = (ν+½)ln(ν+½) − (ν−½)ln(ν−½)`.
pub fn entropy_term(nu: f64) -> Result<f64> {
    if nu < 0.5 - TAU_PHYS || !nu.is_finite() {
        return Err(Error::Unphysical {
            min_eigenvalue: nu - 0.5,
        });
    }
    let plus = nu + 0.5;
    let minus = nu - 0.5;
    let first = plus * plus.ln();
    if minus <= TAU_PURE {
        return Ok(first.max(0.0));
    }
    Ok(first - minus * minus.ln())
}

/// Von Neumann entropy from the symplectic spectrum.
pub fn von_neumann_entropy(sigma: &CovarianceMatrix) -> Result<f64> {
    symplectic_eigenvalues(sigma)?
        .into_iter()
        .map(entropy_term)
        .sum()
}

/// `Σ = ΔS − ΔQ/T_E`.
pub fn entropy_production(ds: f64, dq: f64, temperature: f64) -> Result<f64> {
    if temperature < ZERO_TEMPERATURE {
        return Err(Error::ZeroTemperature);
    }
    Ok(ds - dq / temperature)
}

/// Two-bath extension with additive Clausius terms,
/// `Σ = ΔS − ΔQ_E/T_E − ΔQ_B/T_B`.
pub fn entropy_production_two_baths(
    ds: f64,
    dq_env: f64,
    t_env: f64,
    dq_drain: f64,
    t_drain: f64,
) -> Result<f64> {
    if t_env < ZERO_TEMPERATURE || t_drain < ZERO_TEMPERATURE {
        return Err(Error::ZeroTemperature);
    }
    Ok(ds - dq_env / t_env - dq_drain / t_drain)
}

/// `dS/dt` of a single-mode state given `σ̇`. Infinite when a pure state
/// starts to mix.
pub fn entropy_rate(sigma: &CovarianceMatrix, sigma_dot: &DMatrix<f64>) -> Result<f64> {
    if sigma.dim() != 2 || sigma_dot.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            context: "entropy rate",
            expected: 2,
            found: sigma.dim(),
        });
    }
    let s = sigma.matrix();
    let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    let nu = det.max(0.0).sqrt();
    if nu < 0.5 - TAU_PHYS {
        return Err(Error::Unphysical {
            min_eigenvalue: nu - 0.5,
        });
    }
    // d(det)/dt = det · tr(σ⁻¹ σ̇), written without the inverse.
    let d = sigma_dot;
    let ddet = d[(0, 0)] * s[(1, 1)] + s[(0, 0)] * d[(1, 1)] - d[(0, 1)] * s[(1, 0)] - s[(0, 1)] * d[(1, 0)];
    let nu_dot = ddet / (2.0 * nu);
    if nu - 0.5 <= TAU_PURE {
        return Ok(if nu_dot > 0.0 {
            f64::INFINITY
        } else {
            0.0
        });
    }
    Ok(((nu + 0.5) / (nu - 0.5)).ln() * nu_dot)
}

/// Continuous-time energy flows into the system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRates {
    pub energy: f64,
    pub heat: f64,
    pub work: f64,
}

impl EnergyRates {
    fn from_energy_heat(energy: f64, heat: f64) -> Self {
        Self {
            energy,
            heat,
            work: energy - heat,
        }
    }
}

/// Beamsplitter bath in the continuum limit: mode rates `γ̃_m` on ring
/// modes of frequency `ω̃_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamsplitterBath {
    pub omega_s: f64,
    pub omega_e: f64,
    pub rates: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub temperature: f64,
}

/// Zero-sum spring bath in the continuum limit.
#[derive(Debug, Clone, PartialEq)]
pub struct SpringBath {
    /// Rescaled site amplitudes `s_i` (`λ_i = s_i/√δt`).
    pub amplitudes: Vec<f64>,
    /// Thermal `⟨x_i²⟩` of each ring oscillator.
    pub position_variances: Vec<f64>,
    /// `Λ̃_m`.
    pub rates: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousBath {
    Beamsplitter(BeamsplitterBath),
    Spring(SpringBath),
}

impl ContinuousBath {
    pub fn temperature(&self) -> f64 {
        match self {
            ContinuousBath::Beamsplitter(b) => b.temperature,
            ContinuousBath::Spring(b) => b.temperature,
        }
    }
}

fn moments(sigma: &CovarianceMatrix) -> Result<(f64, f64)> {
    if sigma.dim() != 2 {
        return Err(Error::DimensionMismatch {
            context: "single-mode rates",
            expected: 2,
            found: sigma.dim(),
        });
    }
    Ok((sigma.matrix()[(0, 0)], sigma.matrix()[(1, 1)]))
}

/// Closed-form `(U̇, Q̇, Ẇ)` of a beamsplitter bath.
pub fn continuous_rates(sigma: &CovarianceMatrix, bath: &ContinuousBath) -> Result<EnergyRates> {
    let b = match bath {
        ContinuousBath::Beamsplitter(b) => b,
        ContinuousBath::Spring(_) => {
            return Err(Error::WrongModel(
                "beamsplitter rate formulas applied to a spring bath".into(),
            ))
        }
    };
    let (xx, pp) = moments(sigma)?;
    let (ws, we) = (b.omega_s, b.omega_e);
    let mut energy = 0.0;
    let mut heat = 0.0;
    for (g, w) in b.rates.iter().zip(&b.frequencies) {
        let c = thermal_factor(*w, b.temperature);
        energy += g / 4.0 * ((we * we + w * w) * ws / (we * w) * c - 2.0 * ws * ws * xx - 2.0 * pp);
        heat += g / 2.0 * (w * c - ws * we * xx - w * w * pp / (ws * we));
    }
    Ok(EnergyRates::from_energy_heat(energy, heat))
}

/// `f = γ̃[ω_S σ_xx + σ_pp/ω_S − coth(ω_E/2T_E)]` of the centre-of-mass
/// coupling.
pub fn com_flow_factor(sigma: &CovarianceMatrix, gamma: f64, omega_s: f64, omega_e: f64, temperature: f64) -> Result<f64> {
    let (xx, pp) = moments(sigma)?;
    Ok(gamma * (omega_s * xx + pp / omega_s - thermal_factor(omega_e, temperature)))
}

/// Centre-of-mass rates `U̇ = −ω_S f/2`, `Q̇ = −ω_E f/2`,
/// `Ẇ = −(ω_S − ω_E) f/2`.
pub fn com_rates(sigma: &CovarianceMatrix, gamma: f64, omega_s: f64, omega_e: f64, temperature: f64) -> Result<EnergyRates> {
    let f = com_flow_factor(sigma, gamma, omega_s, omega_e, temperature)?;
    Ok(EnergyRates {
        energy: -0.5 * omega_s * f,
        heat: -0.5 * omega_e * f,
        work: -0.5 * (omega_s - omega_e) * f,
    })
}

/// Zero-sum spring rates: `U̇ = Σ Λ̃_m coth_m/ω̃_m` (state independent) and
/// `Q̇ = −2 Σ_i s_i² (σ_xx + ⟨x_i²⟩)`.
pub fn spring_rates(sigma: &CovarianceMatrix, bath: &SpringBath) -> Result<EnergyRates> {
    let (xx, _) = moments(sigma)?;
    let energy: f64 = bath
        .rates
        .iter()
        .zip(&bath.frequencies)
        .map(|(l, w)| l * thermal_factor(*w, bath.temperature) / w)
        .sum();
    let heat: f64 = -2.0
        * bath
            .amplitudes
            .iter()
            .zip(&bath.position_variances)
            .map(|(s, v)| s * s * (xx + v))
            .sum::<f64>();
    Ok(EnergyRates::from_energy_heat(energy, heat))
}

/// Rates of either bath kind.
pub fn bath_rates(sigma: &CovarianceMatrix, bath: &ContinuousBath) -> Result<EnergyRates> {
    match bath {
        ContinuousBath::Beamsplitter(_) => continuous_rates(sigma, bath),
        ContinuousBath::Spring(b) => spring_rates(sigma, b),
    }
}
