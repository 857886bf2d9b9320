//! Hamiltonians and drift matrices of the collision model.
//!
//! Index layout of the composite space: mode 0 is the system, modes
//! `1..=N_E` are the ring oscillators. Every coupling matrix returned here
//! is full size, `2(1 + N_E)` square, so pieces can simply be added.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::gaussian::{
    canonical_sign, direct_sum, ring_critical_coupling, ring_mode_frequencies_with,
    symplectic_matrix, thermal_factor, CovarianceMatrix, NormalModeDecomposition,
    QuadraticHamiltonian,
};
use crate::{Error, Result};

/// Spring weights must sum to zero within this for the continuum limit.
pub const ZERO_SUM_TOLERANCE: f64 = 1e-12;

fn check_frequency(name: &str, omega: f64) -> Result<()> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidArgument(format!("{name} must be positive, got {omega}")));
    }
    Ok(())
}

fn check_temperature(temperature: f64) -> Result<()> {
    if temperature.is_nan() || temperature.is_infinite() {
        return Err(Error::InvalidArgument(format!("temperature {temperature}")));
    }
    if temperature < 0.0 {
        return Err(Error::NegativeTemperature(temperature));
    }
    Ok(())
}

/// The single system oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    pub omega: f64,
    /// Temperature of the initial thermal state.
    pub temperature: f64,
}

impl SystemSpec {
    pub fn new(omega: f64, temperature: f64) -> Result<Self> {
        let spec = Self { omega, temperature };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_frequency("system frequency", self.omega)?;
        check_temperature(self.temperature)
    }

    pub fn hamiltonian(&self) -> QuadraticHamiltonian {
        single_oscillator(self.omega)
    }

    pub fn thermal_state(&self) -> Result<CovarianceMatrix> {
        self.validate()?;
        Ok(thermal_single_mode(self.omega, self.temperature))
    }
}

fn single_oscillator(omega: f64) -> QuadraticHamiltonian {
    QuadraticHamiltonian::oscillators(&[omega]).expect("diagonal matrix is symmetric")
}

fn thermal_single_mode(omega: f64, temperature: f64) -> CovarianceMatrix {
    let c = thermal_factor(omega, temperature);
    CovarianceMatrix::single_mode(c / (2.0 * omega), 0.0, omega * c / 2.0)
}

/// One environmental unit: `N_E` identical oscillators on a ring,
/// neighbours coupled by `λ_I (x_i − x_{i+1})²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingUnitSpec {
    pub oscillators: usize,
    pub omega: f64,
    pub lambda_i: f64,
    pub temperature: f64,
    /// Close the ring at `N_E = 2`, which puts the single spring in twice.
    pub force_ring: bool,
}

impl RingUnitSpec {
    pub fn new(oscillators: usize, omega: f64, lambda_i: f64, temperature: f64) -> Result<Self> {
        let spec = Self {
            oscillators,
            omega,
            lambda_i,
            temperature,
            force_ring: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_force_ring(mut self, force_ring: bool) -> Result<Self> {
        self.force_ring = force_ring;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.oscillators < 2 {
            return Err(Error::InvalidArgument(format!(
                "a ring needs at least two oscillators, got {}",
                self.oscillators
            )));
        }
        check_frequency("unit frequency", self.omega)?;
        check_temperature(self.temperature)?;
        if !self.lambda_i.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda_I = {}", self.lambda_i)));
        }
        self.mode_frequencies().map(|_| ())
    }

    /// All modes are stable iff `λ_I` lies strictly above this.
    pub fn critical_coupling(&self) -> f64 {
        ring_critical_coupling(self.oscillators, self.omega, self.force_ring)
    }

    /// Springs `(i, j)`, each contributing `λ_I (x_i − x_j)²`.
    pub fn springs(&self) -> Vec<(usize, usize)> {
        let n = self.oscillators;
        if n == 2 && !self.force_ring {
            return vec![(0, 1)];
        }
        (0..n).map(|i| (i, (i + 1) % n)).collect()
    }

    /// Closed-form frequencies in mode order `m = 1..N_E`.
    pub fn mode_frequencies(&self) -> Result<Vec<f64>> {
        ring_mode_frequencies_with(self.oscillators, self.omega, self.lambda_i, self.force_ring)
    }

    /// Fourier normal modes, row `m - 1` of the position transform being
    /// mode `m`. Mode 1 is the centre of mass.
    ///
    /// For `q = m - 1` the row is `1/√N` (`q = 0`), `(−1)^j/√N` (`2q = N`),
    /// `√(2/N) cos(2πqj/N)` (`2q < N`) or `√(2/N) sin(2π(N−q)j/N)`
    /// (`2q > N`), so cosine/sine partners share a frequency. The explicit
    /// basis keeps mode labels stable under degeneracy and for `λ_I < 0`.
    pub fn normal_modes(&self) -> Result<NormalModeDecomposition> {
        let n = self.oscillators;
        let frequencies = self.mode_frequencies()?;
        let nf = n as f64;
        let mut position = DMatrix::zeros(n, n);
        for q in 0..n {
            let mut row: Vec<f64> = (0..n)
                .map(|j| {
                    let jf = j as f64;
                    if q == 0 {
                        1.0 / nf.sqrt()
                    } else if 2 * q == n {
                        (if j % 2 == 0 { 1.0 } else { -1.0 }) / nf.sqrt()
                    } else if 2 * q < n {
                        (2.0 / nf).sqrt() * (2.0 * PI * q as f64 * jf / nf).cos()
                    } else {
                        (2.0 / nf).sqrt() * (2.0 * PI * (n - q) as f64 * jf / nf).sin()
                    }
                })
                .collect();
            canonical_sign(&mut row);
            for (j, v) in row.into_iter().enumerate() {
                position[(q, j)] = v;
            }
        }
        NormalModeDecomposition::from_position_modes(&position, frequencies)
    }

    pub fn hamiltonian(&self) -> Result<QuadraticHamiltonian> {
        build_ring_hamiltonian(self)
    }

    pub fn thermal_state(&self) -> Result<CovarianceMatrix> {
        self.normal_modes()?.thermal_covariance(self.temperature)
    }
}

/// Secondary bath of single thermal oscillators, beamsplitter-coupled at
/// rate `γ_B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrainSpec {
    pub omega: f64,
    pub temperature: f64,
    pub gamma: f64,
}

impl DrainSpec {
    pub fn new(omega: f64, temperature: f64, gamma: f64) -> Result<Self> {
        let spec = Self {
            omega,
            temperature,
            gamma,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_frequency("drain frequency", self.omega)?;
        check_temperature(self.temperature)?;
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "drain rate must be nonnegative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn hamiltonian(&self) -> QuadraticHamiltonian {
        single_oscillator(self.omega)
    }

    pub fn thermal_state(&self) -> CovarianceMatrix {
        thermal_single_mode(self.omega, self.temperature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// `g_i (√(ω_S ω_E) x_S x_i + p_S p_i / √(ω_S ω_E))`
    Beamsplitter,
    /// `λ_i (x_S − x_i)²`
    Spring,
}

/// Picks one normal mode of the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelector {
    /// 1-based mode label `m`.
    Index(usize),
    /// `m = 1`.
    CenterOfMass,
    /// `m = ⌊N_E/2⌋ + 1`, the mode with the largest `sin²[π(m−1)/N_E]`.
    Highest,
}

impl ModeSelector {
    /// Zero-based row of the position transform.
    pub fn resolve(&self, oscillators: usize) -> Result<usize> {
        let m = match *self {
            ModeSelector::Index(m) => m,
            ModeSelector::CenterOfMass => 1,
            ModeSelector::Highest => oscillators / 2 + 1,
        };
        if m == 0 || m > oscillators {
            return Err(Error::InvalidArgument(format!(
                "mode {m} out of range 1..={oscillators}"
            )));
        }
        Ok(m - 1)
    }
}

/// How coupling numbers are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrengthSemantics {
    /// Plain `g_i` or `λ_i` at the given `δt`.
    Raw,
    /// Continuum-limit rates. A single-mode strength is `γ̃` (or `Λ̃`);
    /// per-oscillator numbers are amplitudes `a_i` with `g_i = a_i/√δt`.
    Rescaled,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingWeights {
    PerOscillator(Vec<f64>),
    SingleMode { mode: ModeSelector, strength: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    pub kind: CouplingKind,
    pub weights: CouplingWeights,
    pub semantics: StrengthSemantics,
}

impl CouplingSpec {
    pub fn single_mode(
        kind: CouplingKind,
        mode: ModeSelector,
        strength: f64,
        semantics: StrengthSemantics,
    ) -> Self {
        Self {
            kind,
            weights: CouplingWeights::SingleMode { mode, strength },
            semantics,
        }
    }

    pub fn per_oscillator(kind: CouplingKind, weights: Vec<f64>, semantics: StrengthSemantics) -> Self {
        Self {
            kind,
            weights: CouplingWeights::PerOscillator(weights),
            semantics,
        }
    }

    /// Site-basis numbers before any `δt` conversion: raw weights, or
    /// rescaled amplitudes `a_i` (for a single mode `a_i = √γ̃ G_{m′i}`).
    pub fn site_amplitudes(&self, modes: &NormalModeDecomposition) -> Result<Vec<f64>> {
        let n = modes.n_modes();
        match &self.weights {
            CouplingWeights::PerOscillator(w) => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch {
                        context: "coupling weights",
                        expected: n,
                        found: w.len(),
                    });
                }
                if w.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite coupling weight".into()));
                }
                Ok(w.clone())
            }
            CouplingWeights::SingleMode { mode, strength } => {
                if !strength.is_finite() {
                    return Err(Error::InvalidArgument(format!("coupling strength {strength}")));
                }
                let row = mode.resolve(n)?;
                let scale = match self.semantics {
                    StrengthSemantics::Raw => *strength,
                    StrengthSemantics::Rescaled => {
                        if *strength < 0.0 {
                            return Err(Error::InvalidArgument(format!(
                                "rescaled strength must be nonnegative, got {strength}"
                            )));
                        }
                        strength.sqrt()
                    }
                };
                let g = modes.transform();
                Ok((0..n).map(|i| scale * g[(2 * row, 2 * i)]).collect())
            }
        }
    }

    /// Site weights `g_i` (or `λ_i`) for a collision of duration `dt`.
    pub fn site_weights(&self, modes: &NormalModeDecomposition, dt: f64) -> Result<Vec<f64>> {
        let a = self.site_amplitudes(modes)?;
        Ok(match self.semantics {
            StrengthSemantics::Raw => a,
            StrengthSemantics::Rescaled => {
                let s = dt.sqrt();
                a.into_iter().map(|v| v / s).collect()
            }
        })
    }

    /// Continuum-limit mode rates `γ̃_m` (or `Λ̃_m`) `= (Σ_i G_{mi} a_i)²`.
    pub fn mode_rates(&self, modes: &NormalModeDecomposition) -> Result<Vec<f64>> {
        if self.semantics != StrengthSemantics::Rescaled {
            return Err(Error::WrongModel(
                "mode rates need rescaled coupling strengths".into(),
            ));
        }
        let a = self.site_amplitudes(modes)?;
        Ok(modes.project(&a)?.into_iter().map(|v| v * v).collect())
    }

    /// `Σ_i a_i`, which must vanish for a spring continuum limit.
    pub fn weight_sum(&self, modes: &NormalModeDecomposition) -> Result<f64> {
        Ok(self.site_amplitudes(modes)?.iter().sum())
    }

    pub fn is_zero_sum(&self, modes: &NormalModeDecomposition) -> Result<bool> {
        let a = self.site_amplitudes(modes)?;
        let scale = a.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        Ok(a.iter().sum::<f64>().abs() <= ZERO_SUM_TOLERANCE * scale)
    }
}

/// Ring Hamiltonian: position block `ω_E² + 4λ_I` on the diagonal and
/// `−2λ_I` between neighbours (`ω_E² + 2λ_I` on the `N_E = 2` line).
pub fn build_ring_hamiltonian(spec: &RingUnitSpec) -> Result<QuadraticHamiltonian> {
    spec.validate()?;
    let n = spec.oscillators;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(2 * i, 2 * i)] = spec.omega * spec.omega;
        m[(2 * i + 1, 2 * i + 1)] = 1.0;
    }
    // λ(x_i − x_j)² = ½ Rᵀ M R with M_ii += 2λ, M_jj += 2λ, M_ij = M_ji −= 2λ.
    for (i, j) in spec.springs() {
        let lam = spec.lambda_i;
        m[(2 * i, 2 * i)] += 2.0 * lam;
        m[(2 * j, 2 * j)] += 2.0 * lam;
        m[(2 * i, 2 * j)] -= 2.0 * lam;
        m[(2 * j, 2 * i)] -= 2.0 * lam;
    }
    QuadraticHamiltonian::new(m)
}

fn check_weights(unit: &RingUnitSpec, weights: &[f64]) -> Result<()> {
    if weights.len() != unit.oscillators {
        return Err(Error::DimensionMismatch {
            context: "coupling weights",
            expected: unit.oscillators,
            found: weights.len(),
        });
    }
    Ok(())
}

/// Beamsplitter coupling matrix on the composite space.
pub fn build_beamsplitter_coupling(
    sys: &SystemSpec,
    unit: &RingUnitSpec,
    weights: &[f64],
) -> Result<QuadraticHamiltonian> {
    check_weights(unit, weights)?;
    let product = sys.omega * unit.omega;
    if !(product > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beamsplitter needs omega_S * omega_E > 0, got {product}"
        )));
    }
    let root = product.sqrt();
    let dim = 2 * (1 + unit.oscillators);
    let mut m = DMatrix::zeros(dim, dim);
    for (i, g) in weights.iter().enumerate() {
        let x = 2 * (i + 1);
        m[(0, x)] = g * root;
        m[(x, 0)] = g * root;
        m[(1, x + 1)] = g / root;
        m[(x + 1, 1)] = g / root;
    }
    QuadraticHamiltonian::new(m)
}

/// `Σ λ_i (x_S − x_i)²` split into its three pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct SpringCoupling {
    /// `2Σλ_i` on `x_S x_S`: the shift `ω_S² → ω̄_S²`.
    pub system_shift: DMatrix<f64>,
    /// `2λ_i` on `x_i x_i`, in the site basis of the unit.
    pub environment: DMatrix<f64>,
    /// `−2λ_i` on `x_S x_i`, full size.
    pub cross: DMatrix<f64>,
    pub renormalized_frequency_sq: f64,
    /// `λ̃_m = Σ_i G_{mi} λ_i`.
    pub mode_weights: Vec<f64>,
}

impl SpringCoupling {
    /// All three pieces embedded in the composite space.
    pub fn hamiltonian(&self) -> Result<QuadraticHamiltonian> {
        let embedded = direct_sum(&self.system_shift, &self.environment);
        QuadraticHamiltonian::new(embedded + &self.cross)
    }
}

pub fn build_spring_coupling(
    sys: &SystemSpec,
    unit: &RingUnitSpec,
    weights: &[f64],
) -> Result<SpringCoupling> {
    check_weights(unit, weights)?;
    let n = unit.oscillators;
    let total: f64 = weights.iter().sum();
    let mut system_shift = DMatrix::zeros(2, 2);
    system_shift[(0, 0)] = 2.0 * total;
    let mut environment = DMatrix::zeros(2 * n, 2 * n);
    let mut cross = DMatrix::zeros(2 * (n + 1), 2 * (n + 1));
    for (i, lam) in weights.iter().enumerate() {
        environment[(2 * i, 2 * i)] = 2.0 * lam;
        let x = 2 * (i + 1);
        cross[(0, x)] = -2.0 * lam;
        cross[(x, 0)] = -2.0 * lam;
    }
    let mode_weights = unit.normal_modes()?.project(weights)?;
    Ok(SpringCoupling {
        system_shift,
        environment,
        cross,
        renormalized_frequency_sq: sys.omega * sys.omega + 2.0 * total,
        mode_weights,
    })
}

/// Coupling matrix of either kind on the composite space.
pub fn build_coupling(
    kind: CouplingKind,
    sys: &SystemSpec,
    unit: &RingUnitSpec,
    weights: &[f64],
) -> Result<QuadraticHamiltonian> {
    match kind {
        CouplingKind::Beamsplitter => build_beamsplitter_coupling(sys, unit, weights),
        CouplingKind::Spring => build_spring_coupling(sys, unit, weights)?.hamiltonian(),
    }
}

/// Drift pieces of one collision, `D_tot = D_S′ + D_E′ + D_SE`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrices {
    pub system: DMatrix<f64>,
    pub environment: DMatrix<f64>,
    pub coupling: DMatrix<f64>,
    pub total: DMatrix<f64>,
    pub total_hamiltonian: QuadraticHamiltonian,
}

impl DriftMatrices {
    /// `D_S ⊕ 0`.
    pub fn system_embedded(&self) -> DMatrix<f64> {
        let n = self.environment.nrows();
        direct_sum(&self.system, &DMatrix::zeros(n, n))
    }

    /// `0 ⊕ D_E`.
    pub fn environment_embedded(&self) -> DMatrix<f64> {
        let n = self.system.nrows();
        direct_sum(&DMatrix::zeros(n, n), &self.environment)
    }
}

/// Drift matrices from the free system, free environment and full-size
/// coupling Hamiltonians.
pub fn build_drift(
    system: &QuadraticHamiltonian,
    environment: &QuadraticHamiltonian,
    coupling: &QuadraticHamiltonian,
) -> Result<DriftMatrices> {
    let dim = system.matrix().nrows() + environment.matrix().nrows();
    if coupling.matrix().nrows() != dim {
        return Err(Error::DimensionMismatch {
            context: "coupling Hamiltonian",
            expected: dim,
            found: coupling.matrix().nrows(),
        });
    }
    let free = direct_sum(system.matrix(), environment.matrix());
    let total_hamiltonian = QuadraticHamiltonian::new(free + coupling.matrix())?;
    let omega = symplectic_matrix(dim / 2);
    Ok(DriftMatrices {
        system: system.drift(),
        environment: environment.drift(),
        coupling: &omega * coupling.matrix(),
        total: &omega * total_hamiltonian.matrix(),
        total_hamiltonian,
    })
}
