//! Closed-form predictions for the continuum limit.
//!
//! Nothing here calls into the engine, so the two can serve as oracles for
//! each other.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::gaussian::{thermal_factor, ZERO_TEMPERATURE};
use crate::{Error, Result};

/// `coth⁻¹(u) = ½ ln((u + 1)/(u − 1))`, defined for `u > 1`.
pub fn acoth(u: f64) -> Result<f64> {
    if !(u > 1.0) || !u.is_finite() {
        return Err(Error::CothDomain(u));
    }
    Ok(0.5 * ((u + 1.0) / (u - 1.0)).ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squeezing {
    pub r: f64,
    pub alpha_x: f64,
    pub alpha_p: f64,
}

/// `α_p = Σ γ̃_m ω̃_m coth_m/ω_E`, `α_x = Σ γ̃_m ω_E coth_m/ω̃_m`,
/// `r = ¼ ln(α_p/α_x)`.
pub fn effective_squeezing(rates: &[f64], frequencies: &[f64], omega_e: f64, temperature: f64) -> Result<Squeezing> {
    if rates.len() != frequencies.len() {
        return Err(Error::DimensionMismatch {
            context: "mode rates",
            expected: frequencies.len(),
            found: rates.len(),
        });
    }
    if rates.iter().any(|g| *g < 0.0 || !g.is_finite()) {
        return Err(Error::InvalidArgument("mode rates must be nonnegative".into()));
    }
    if rates.iter().all(|g| *g == 0.0) {
        return Err(Error::AllCouplingsZero);
    }
    let mut alpha_x = 0.0;
    let mut alpha_p = 0.0;
    for (g, w) in rates.iter().zip(frequencies) {
        let c = thermal_factor(*w, temperature);
        alpha_p += g * w * c / omega_e;
        alpha_x += g * omega_e * c / w;
    }
    Ok(Squeezing {
        r: 0.25 * (alpha_p / alpha_x).ln(),
        alpha_x,
        alpha_p,
    })
}

/// `T_Ê = ω_E / (2 coth⁻¹(√(α_x α_p)/γ_Ê))`.
pub fn effective_temperature(alpha_x: f64, alpha_p: f64, gamma: f64, omega_e: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::AllCouplingsZero);
    }
    Ok(omega_e / (2.0 * acoth((alpha_x * alpha_p).sqrt() / gamma)?))
}

/// Single oscillator bath in a squeezed thermal state that reproduces the
/// structured unit's effect on the system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSqueezedBath {
    pub r: f64,
    pub temperature: f64,
    pub gamma: f64,
    pub omega_e: f64,
}

impl EffectiveSqueezedBath {
    pub fn from_couplings(rates: &[f64], frequencies: &[f64], omega_e: f64, temperature: f64) -> Result<Self> {
        let sq = effective_squeezing(rates, frequencies, omega_e, temperature)?;
        let gamma: f64 = rates.iter().sum();
        Ok(Self {
            r: sq.r,
            temperature: effective_temperature(sq.alpha_x, sq.alpha_p, gamma, omega_e)?,
            gamma,
            omega_e,
        })
    }

    /// `V_eff = (γ_Ê/2) coth(ω_E/2T_Ê) diag(e^{2r}/ω_S, ω_S/e^{2r})`.
    pub fn diffusion(&self, omega_s: f64) -> DMatrix<f64> {
        let c = 0.5 * self.gamma * thermal_factor(self.omega_e, self.temperature);
        let e = (2.0 * self.r).exp();
        DMatrix::from_row_slice(2, 2, &[c * e / omega_s, 0.0, 0.0, c * omega_s / e])
    }

    /// `D_eff = D_S − (γ_Ê/2) 1`.
    pub fn drift(&self, omega_s: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-self.gamma / 2.0, 1.0, -omega_s * omega_s, -self.gamma / 2.0])
    }

    pub fn second_moments(&self) -> (f64, f64) {
        squeezed_thermal_second_moments(self.r, self.temperature, self.omega_e)
    }
}

/// `(⟨x²⟩, ⟨p²⟩) = (coth/(2e^{2r}ω_E), e^{2r}ω_E coth/2)`.
pub fn squeezed_thermal_second_moments(r: f64, temperature: f64, omega_e: f64) -> (f64, f64) {
    let c = thermal_factor(omega_e, temperature);
    let e = (2.0 * r).exp();
    (c / (2.0 * e * omega_e), e * omega_e * c / 2.0)
}

/// `⟨H_S⟩ = (ω_S/2) coth(ω_E/2T_Ê) cosh(2r)`.
pub fn steady_state_energy_bs(r: f64, effective_temperature: f64, omega_s: f64, omega_e: f64) -> f64 {
    0.5 * omega_s * thermal_factor(omega_e, effective_temperature) * (2.0 * r).cosh()
}

/// `E_eq = (ω_S/2) coth(ω_E/2T_E)`.
pub fn equilibrium_energy(omega_s: f64, omega_e: f64, temperature: f64) -> f64 {
    0.5 * omega_s * thermal_factor(omega_e, temperature)
}

/// Frequency of mode `m = ⌊N_E/2⌋ + 1`: `√(ω_E² + 8λ_I)` for even rings,
/// `√(ω_E² + 8λ_I cos²(π/2N_E))` for odd ones, `√(ω_E² + 4λ_I)` on the
/// two-oscillator line.
pub fn highest_mode_frequency(oscillators: usize, omega_e: f64, lambda_i: f64) -> Result<f64> {
    let coeff = match oscillators {
        0 | 1 => {
            return Err(Error::InvalidArgument(format!(
                "a ring needs at least two oscillators, got {oscillators}"
            )))
        }
        2 => 4.0,
        n if n % 2 == 0 => 8.0,
        n => 8.0 * (PI / (2.0 * n as f64)).cos().powi(2),
    };
    let radicand = omega_e * omega_e + coeff * lambda_i;
    if radicand <= 0.0 {
        return Err(Error::UnstableRing {
            n_oscillators: oscillators,
            lambda_i,
            critical: -omega_e * omega_e / coeff,
        });
    }
    Ok(radicand.sqrt())
}

/// Steady-state energy under single highest-mode beamsplitter coupling.
pub fn highest_mode_steady_energy(omega_s: f64, omega_e: f64, temperature: f64, gamma: f64, oscillators: usize, lambda_i: f64) -> Result<f64> {
    let w = highest_mode_frequency(oscillators, omega_e, lambda_i)?;
    let bath = EffectiveSqueezedBath::from_couplings(&[gamma], &[w], omega_e, temperature)?;
    Ok(steady_state_energy_bs(bath.r, bath.temperature, omega_s, omega_e))
}

const BRACKET_START: f64 = 1e-6;
const BRACKET_CAP: f64 = 1e6;

/// `λ_IC > 0` where the highest-mode steady-state energy crosses back up
/// through `E_eq`. The bracket grows geometrically from `10⁻⁶`; bisection
/// runs to a relative width of `10⁻¹⁰`.
pub fn critical_coupling(omega_s: f64, omega_e: f64, temperature: f64, gamma: f64, oscillators: usize) -> Result<f64> {
    if temperature < ZERO_TEMPERATURE {
        return Err(Error::ZeroTemperature);
    }
    let e_eq = equilibrium_energy(omega_s, omega_e, temperature);
    let excess = |lam: f64| -> Result<f64> {
        Ok(highest_mode_steady_energy(omega_s, omega_e, temperature, gamma, oscillators, lam)? - e_eq)
    };
    let mut lo = BRACKET_START;
    if excess(lo)? >= 0.0 {
        return Err(Error::NoBracket { lower: lo, upper: lo });
    }
    let mut hi = 2.0 * lo;
    while excess(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(Error::NoBracket {
                lower: BRACKET_START,
                upper: BRACKET_CAP,
            });
        }
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Steady-state work rate under highest-mode coupling,
/// `γ ω_S² (ω_E² − ω̃²)² coth(ω̃/2T_E) / (2 ω_E² ω̃ (γ² + 4ω_S²))`.
pub fn steady_state_work_bs(gamma: f64, omega_s: f64, omega_e: f64, omega_max: f64, temperature: f64) -> f64 {
    let diff = omega_e * omega_e - omega_max * omega_max;
    gamma * omega_s * omega_s * diff * diff * thermal_factor(omega_max, temperature)
        / (2.0 * omega_e * omega_e * omega_max * (gamma * gamma + 4.0 * omega_s * omega_s))
}

/// Zero-sum spring plus drain:
/// `Σ_m Λ̃_m coth(ω̃_m/2T_E)/(γ_B ω̃_m) + (ω_S/2) coth(ω_B/2T_B)`.
pub fn drain_steady_state_energy(
    rates: &[f64],
    frequencies: &[f64],
    temperature: f64,
    gamma_b: f64,
    omega_s: f64,
    omega_b: f64,
    temperature_b: f64,
) -> Result<f64> {
    if !(gamma_b > 0.0) {
        return Err(Error::NoSteadyState { max_real_part: -gamma_b / 2.0 });
    }
    if rates.len() != frequencies.len() {
        return Err(Error::DimensionMismatch {
            context: "mode rates",
            expected: frequencies.len(),
            found: rates.len(),
        });
    }
    let pumped: f64 = rates
        .iter()
        .zip(frequencies)
        .map(|(l, w)| l * thermal_factor(*w, temperature) / (gamma_b * w))
        .sum();
    Ok(pumped + 0.5 * omega_s * thermal_factor(omega_b, temperature_b))
}
