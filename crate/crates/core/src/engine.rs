//! Propagation of the system state.
//!
//! Collision modes work on the composite state `σ_S ⊕ σ_E` (plus one drain
//! oscillator when present, placed after the ring) with a fresh thermal unit
//! every step. The continuous mode integrates the 2×2 Lyapunov equation.

use nalgebra::{DMatrix, Schur};

use crate::gaussian::{
    direct_sum, matrix_exponential, thermal_factor, CovarianceMatrix, QuadraticHamiltonian,
    TAU_PHYS,
};
use crate::model::{
    build_coupling, build_drift, CouplingKind, CouplingSpec, DriftMatrices, DrainSpec,
    RingUnitSpec, StrengthSemantics, SystemSpec,
};
use crate::thermo::{
    bath_heat, bath_rates, energy_heat_work, entropy_production, entropy_production_two_baths,
    entropy_rate, system_energy, von_neumann_entropy, BeamsplitterBath, ContinuousBath,
    SpringBath, ThermoRecord, TAU_FIRST_LAW, TAU_LAW,
};
use crate::{Error, Result};

/// Entries beyond this abort an integration.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
/// Residual allowed in the algebraic steady-state solve (relative to `‖V‖`).
pub const STEADY_STATE_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMode {
    ExactStep,
    SuperoperatorStep,
    DiscreteRecursion,
    ContinuousOde,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionScenario {
    pub system: SystemSpec,
    pub unit: RingUnitSpec,
    pub coupling: CouplingSpec,
    pub dt: f64,
    pub n_steps: usize,
    pub drain: Option<DrainSpec>,
    pub mode: PropagationMode,
    /// RK4 step for the continuous mode; defaults to `min(δt/10, 1e-3)`.
    pub ode_step: Option<f64>,
}

impl CollisionScenario {
    pub fn t_end(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn ode_step(&self) -> f64 {
        self.ode_step.unwrap_or((self.dt / 10.0).min(1e-3))
    }

    /// Checks shared by every mode.
    fn validate_parts(&self) -> Result<()> {
        self.system.validate()?;
        self.unit.validate()?;
        if let Some(d) = &self.drain {
            d.validate()?;
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidScenario(format!("time step must be positive, got {}", self.dt)));
        }
        self.coupling.site_amplitudes(&self.unit.normal_modes()?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_parts()?;
        let modes = self.unit.normal_modes()?;
        match self.mode {
            PropagationMode::ContinuousOde => {
                if self.coupling.semantics != StrengthSemantics::Rescaled {
                    return Err(Error::InvalidScenario(
                        "continuous propagation needs rescaled coupling strengths".into(),
                    ));
                }
                if self.coupling.kind == CouplingKind::Spring && !self.coupling.is_zero_sum(&modes)? {
                    return Err(Error::ContinuumLimitDiverges {
                        weight_sum: self.coupling.weight_sum(&modes)?,
                    });
                }
                let h = self.ode_step();
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::InvalidScenario(format!("ODE step must be positive, got {h}")));
                }
            }
            PropagationMode::DiscreteRecursion => {
                if self.coupling.kind != CouplingKind::Spring {
                    return Err(Error::InvalidScenario(
                        "the discrete recursion is defined for spring coupling only".into(),
                    ));
                }
                if self.drain.is_some() {
                    return Err(Error::InvalidScenario(
                        "the discrete recursion has no drain term; use exact or superoperator steps".into(),
                    ));
                }
            }
            PropagationMode::ExactStep | PropagationMode::SuperoperatorStep => {}
        }
        Ok(())
    }
}

/// Total state before and after one collision, plus the new system state.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionOutcome {
    pub before: CovarianceMatrix,
    pub after: CovarianceMatrix,
    pub system: CovarianceMatrix,
}

/// One collision prepared for repeated use: Hamiltonians, fresh-unit state
/// and propagator are built once.
#[derive(Debug, Clone)]
pub struct CollisionModel {
    scenario: CollisionScenario,
    system: QuadraticHamiltonian,
    ring: QuadraticHamiltonian,
    drain: Option<QuadraticHamiltonian>,
    environment: QuadraticHamiltonian,
    environment_state: CovarianceMatrix,
    drift: DriftMatrices,
    propagator: DMatrix<f64>,
    spring: Option<SpringRecursion>,
}

#[derive(Debug, Clone, Copy)]
struct SpringRecursion {
    renormalized_frequency_sq: f64,
    /// `2δt Σ λ̃_m² coth(ω̃_m/2T_E)/ω̃_m`.
    noise: f64,
}

impl CollisionModel {
    pub fn new(scenario: &CollisionScenario) -> Result<Self> {
        scenario.validate_parts()?;
        let sys = &scenario.system;
        let unit = &scenario.unit;
        let n = unit.oscillators;
        let dt = scenario.dt;
        let modes = unit.normal_modes()?;
        let weights = scenario.coupling.site_weights(&modes, dt)?;

        let system = sys.hamiltonian();
        let ring = unit.hamiltonian()?;
        let ring_state = modes.thermal_covariance(unit.temperature)?;
        let ring_coupling = build_coupling(scenario.coupling.kind, sys, unit, &weights)?;

        let (drain, environment, environment_state, coupling) = match &scenario.drain {
            None => (None, ring.clone(), ring_state, ring_coupling),
            Some(d) => {
                let dh = d.hamiltonian();
                let env = QuadraticHamiltonian::new(direct_sum(ring.matrix(), dh.matrix()))?;
                let state = ring_state.direct_sum(&d.thermal_state());
                let mut m = direct_sum(ring_coupling.matrix(), &DMatrix::zeros(2, 2));
                let g = (d.gamma / dt).sqrt();
                let root = (sys.omega * d.omega).sqrt();
                let b = 2 * (n + 1);
                m[(0, b)] = g * root;
                m[(b, 0)] = g * root;
                m[(1, b + 1)] = g / root;
                m[(b + 1, 1)] = g / root;
                (Some(dh), env, state, QuadraticHamiltonian::new(m)?)
            }
        };
        let drift = build_drift(&system, &environment, &coupling)?;
        let propagator = matrix_exponential(&drift.total, dt)?;

        let spring = match scenario.coupling.kind {
            CouplingKind::Spring => {
                let lam_tilde = modes.project(&weights)?;
                let noise = 2.0
                    * dt
                    * lam_tilde
                        .iter()
                        .zip(modes.frequencies())
                        .map(|(l, w)| l * l * thermal_factor(*w, unit.temperature) / w)
                        .sum::<f64>();
                Some(SpringRecursion {
                    renormalized_frequency_sq: sys.omega * sys.omega + 2.0 * weights.iter().sum::<f64>(),
                    noise,
                })
            }
            CouplingKind::Beamsplitter => None,
        };

        Ok(Self {
            scenario: scenario.clone(),
            system,
            ring,
            drain,
            environment,
            environment_state,
            drift,
            propagator,
            spring,
        })
    }

    pub fn scenario(&self) -> &CollisionScenario {
        &self.scenario
    }

    pub fn drift(&self) -> &DriftMatrices {
        &self.drift
    }

    /// `U = exp(δt D_tot)`.
    pub fn propagator(&self) -> &DMatrix<f64> {
        &self.propagator
    }

    pub fn system_hamiltonian(&self) -> &QuadraticHamiltonian {
        &self.system
    }

    /// Ring, followed by the drain oscillator if any.
    pub fn environment_hamiltonian(&self) -> &QuadraticHamiltonian {
        &self.environment
    }

    pub fn environment_state(&self) -> &CovarianceMatrix {
        &self.environment_state
    }

    fn check_system(&self, sigma: &CovarianceMatrix) -> Result<()> {
        if sigma.dim() != 2 {
            return Err(Error::DimensionMismatch {
                context: "system state",
                expected: 2,
                found: sigma.dim(),
            });
        }
        Ok(())
    }

    fn total_state(&self, sigma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
        self.check_system(sigma)?;
        Ok(sigma.direct_sum(&self.environment_state))
    }

    /// `U (σ_S ⊕ σ_E) Uᵀ`.
    pub fn exact_step(&self, sigma: &CovarianceMatrix) -> Result<CollisionOutcome> {
        let before = self.total_state(sigma)?;
        let u = &self.propagator;
        let after = CovarianceMatrix::new(u * before.matrix() * u.transpose())?;
        let system = after.leading_block(1)?;
        Ok(CollisionOutcome {
            before,
            after,
            system,
        })
    }

    /// Second-order expansion in `δt`. `after` is the full Taylor-expanded
    /// total state; `system` is assembled block by block as
    /// `σ_S + L₁ + L₂^S + L₂^SE + L₂^{S/SE}`, without any `D_E` terms.
    pub fn superoperator_step(&self, sigma: &CovarianceMatrix) -> Result<CollisionOutcome> {
        let before = self.total_state(sigma)?;
        let dt = self.scenario.dt;
        let s = before.matrix();
        let d = &self.drift.total;
        let dts = d.transpose();
        let after = s + (d * s + s * &dts) * dt + (d * d * s + d * s * &dts * 2.0 + s * &dts * &dts) * (0.5 * dt * dt);
        let after = CovarianceMatrix::new(after)?;

        let block = |m: DMatrix<f64>| m.view((0, 0), (2, 2)).into_owned();
        let ss = sigma.matrix();
        let ds = &self.drift.system;
        let dst = ds.transpose();
        let a = self.drift.system_embedded();
        let at = a.transpose();
        let c = &self.drift.coupling;
        let ct = c.transpose();

        let first = (ds * ss + ss * &dst) + block(c * s + s * &ct);
        let second_s = ds * ds * ss + ds * ss * &dst * 2.0 + ss * &dst * &dst;
        let second_se = block(c * c * s + c * s * &ct * 2.0 + s * &ct * &ct);
        let ac = &a * c + c * &a;
        let second_mixed = block(&ac * s + (&a * s * &ct + c * s * &at) * 2.0 + s * ac.transpose());
        let system = ss + first * dt + (second_s + second_se + second_mixed) * (0.5 * dt * dt);
        Ok(CollisionOutcome {
            before,
            after,
            system: CovarianceMatrix::new(system)?,
        })
    }

    /// `σ ← σ + δt[D_Sp σ + σ D_Spᵀ + δt D^RN σ D^RNᵀ + V_Sp]` with
    /// `D^RN = [[0, 1], [−ω̄_S², 0]]` and `D_Sp = D^RN − (ω̄_S² δt/2) 1`.
    pub fn discrete_recursion_step(&self, sigma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
        self.check_system(sigma)?;
        let sp = self.spring.ok_or_else(|| {
            Error::WrongModel("the discrete recursion needs spring coupling".into())
        })?;
        if self.drain.is_some() {
            return Err(Error::WrongModel("the discrete recursion has no drain term".into()));
        }
        let dt = self.scenario.dt;
        let w2 = sp.renormalized_frequency_sq;
        let rn = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -w2, 0.0]);
        let dsp = &rn - DMatrix::identity(2, 2) * (w2 * dt / 2.0);
        let mut v = DMatrix::zeros(2, 2);
        v[(1, 1)] = sp.noise;
        let s = sigma.matrix();
        let bracket = &dsp * s + s * dsp.transpose() + &rn * s * rn.transpose() * dt + v;
        CovarianceMatrix::new(s + bracket * dt)
    }

    /// Ledger row of one collision. `t` is the time after it.
    pub fn ledger(&self, outcome: &CollisionOutcome, previous: &CovarianceMatrix, t: f64) -> Result<ThermoRecord> {
        let (du, dq, dw) = energy_heat_work(&outcome.before, &outcome.after, &self.system, &self.environment)?;
        let entropy = von_neumann_entropy(&outcome.system)?;
        let ds = entropy - von_neumann_entropy(previous)?;
        let t_env = self.scenario.unit.temperature;
        let (dq_drain, production) = match (&self.drain, &self.scenario.drain) {
            (Some(h), Some(spec)) => {
                let offset = 2 + self.ring.matrix().nrows();
                let qb = bath_heat(&outcome.before, &outcome.after, offset, h)?;
                (qb, entropy_production_two_baths(ds, dq - qb, t_env, qb, spec.temperature).ok())
            }
            _ => (0.0, entropy_production(ds, dq, t_env).ok()),
        };
        Ok(ThermoRecord {
            t,
            energy: system_energy(&outcome.system, self.scenario.system.omega),
            du,
            dq,
            dq_drain,
            dw,
            entropy,
            ds,
            entropy_production: production,
        })
    }
}

pub fn exact_collision_step(sigma: &CovarianceMatrix, scenario: &CollisionScenario) -> Result<CovarianceMatrix> {
    Ok(CollisionModel::new(scenario)?.exact_step(sigma)?.system)
}

pub fn superoperator_step(sigma: &CovarianceMatrix, scenario: &CollisionScenario) -> Result<CovarianceMatrix> {
    Ok(CollisionModel::new(scenario)?.superoperator_step(sigma)?.system)
}

pub fn discrete_recursion_step(sigma: &CovarianceMatrix, scenario: &CollisionScenario) -> Result<CovarianceMatrix> {
    CollisionModel::new(scenario)?.discrete_recursion_step(sigma)
}

/// `σ̇ = D σ + σ Dᵀ + V`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSystem {
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
}

impl LyapunovSystem {
    pub fn new(drift: DMatrix<f64>, diffusion: DMatrix<f64>) -> Result<Self> {
        let n = drift.nrows();
        if drift.ncols() != n {
            return Err(Error::NonSquare {
                rows: n,
                cols: drift.ncols(),
            });
        }
        if diffusion.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                context: "Lyapunov diffusion",
                expected: n,
                found: diffusion.nrows(),
            });
        }
        let diffusion = CovarianceMatrix::new(diffusion)?.into_inner();
        Ok(Self { drift, diffusion })
    }

    pub fn derivative(&self, sigma: &DMatrix<f64>) -> DMatrix<f64> {
        &self.drift * sigma + sigma * self.drift.transpose() + &self.diffusion
    }

    /// One classical RK4 step, symmetrized.
    pub fn rk4_step(&self, sigma: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
        let k1 = self.derivative(sigma);
        let k2 = self.derivative(&(sigma + &k1 * (h / 2.0)));
        let k3 = self.derivative(&(sigma + &k2 * (h / 2.0)));
        let k4 = self.derivative(&(sigma + &k3 * h));
        let next = sigma + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        (&next + next.transpose()) * 0.5
    }
}

/// Baths seen by the system in the continuum limit, primary first.
pub fn continuous_baths(scenario: &CollisionScenario) -> Result<Vec<ContinuousBath>> {
    let unit = &scenario.unit;
    let modes = unit.normal_modes()?;
    let rates = scenario.coupling.mode_rates(&modes)?;
    let frequencies = modes.frequencies().to_vec();
    let mut baths = vec![match scenario.coupling.kind {
        CouplingKind::Beamsplitter => ContinuousBath::Beamsplitter(BeamsplitterBath {
            omega_s: scenario.system.omega,
            omega_e: unit.omega,
            rates,
            frequencies,
            temperature: unit.temperature,
        }),
        CouplingKind::Spring => {
            if !scenario.coupling.is_zero_sum(&modes)? {
                return Err(Error::ContinuumLimitDiverges {
                    weight_sum: scenario.coupling.weight_sum(&modes)?,
                });
            }
            let thermal = modes.thermal_covariance(unit.temperature)?;
            ContinuousBath::Spring(SpringBath {
                amplitudes: scenario.coupling.site_amplitudes(&modes)?,
                position_variances: (0..unit.oscillators).map(|i| thermal.matrix()[(2 * i, 2 * i)]).collect(),
                rates,
                frequencies,
                temperature: unit.temperature,
            })
        }
    }];
    if let Some(d) = &scenario.drain {
        baths.push(ContinuousBath::Beamsplitter(BeamsplitterBath {
            omega_s: scenario.system.omega,
            omega_e: d.omega,
            rates: vec![d.gamma],
            frequencies: vec![d.omega],
            temperature: d.temperature,
        }));
    }
    Ok(baths)
}

/// Continuum-limit equation of motion of the system.
///
/// Beamsplitter: `D = D_S − (Σγ̃/2) 1`,
/// `V = Σ (γ̃_m/2) coth(ω̃_m/2T_E) diag(ω̃_m/(ω_S ω_E), ω_S ω_E/ω̃_m)`.
/// Zero-sum spring: `D = D_S`, `V_pp = 2 Σ Λ̃_m coth(ω̃_m/2T_E)/ω̃_m`.
/// A drain adds `−γ_B/2` to `D` and `½ γ_B coth(ω_B/2T_B) diag(1/ω_S, ω_S)`.
pub fn build_lyapunov(scenario: &CollisionScenario) -> Result<LyapunovSystem> {
    if scenario.coupling.semantics != StrengthSemantics::Rescaled {
        return Err(Error::InvalidScenario(
            "the continuum limit needs rescaled coupling strengths".into(),
        ));
    }
    let ws = scenario.system.omega;
    let mut drift = scenario.system.hamiltonian().drift();
    let mut diffusion = DMatrix::zeros(2, 2);
    for bath in continuous_baths(scenario)? {
        match bath {
            ContinuousBath::Beamsplitter(b) => {
                let gamma: f64 = b.rates.iter().sum();
                drift -= DMatrix::identity(2, 2) * (gamma / 2.0);
                for (g, w) in b.rates.iter().zip(&b.frequencies) {
                    let c = g / 2.0 * thermal_factor(*w, b.temperature);
                    diffusion[(0, 0)] += c * w / (ws * b.omega_e);
                    diffusion[(1, 1)] += c * ws * b.omega_e / w;
                }
            }
            ContinuousBath::Spring(b) => {
                diffusion[(1, 1)] += 2.0
                    * b.rates
                        .iter()
                        .zip(&b.frequencies)
                        .map(|(l, w)| l * thermal_factor(*w, b.temperature) / w)
                        .sum::<f64>();
            }
        }
    }
    LyapunovSystem::new(drift, diffusion)
}

fn check_finite(sigma: &DMatrix<f64>, t: f64) -> Result<()> {
    let max_entry = sigma.iter().fold(0.0_f64, |a, v| if v.is_finite() { a.max(v.abs()) } else { f64::INFINITY });
    if max_entry > DIVERGENCE_THRESHOLD {
        return Err(Error::Diverged { t, max_entry });
    }
    Ok(())
}

/// Fixed-step RK4 from `t = 0` to `t_end`. The step is shrunk slightly so
/// an integer number of steps lands exactly on `t_end`. Returns every step.
pub fn integrate_lyapunov(
    sys: &LyapunovSystem,
    sigma0: &CovarianceMatrix,
    t_end: f64,
    h: f64,
) -> Result<Vec<(f64, CovarianceMatrix)>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!("end time must be nonnegative, got {t_end}")));
    }
    if sigma0.dim() != sys.drift.nrows() {
        return Err(Error::DimensionMismatch {
            context: "Lyapunov initial state",
            expected: sys.drift.nrows(),
            found: sigma0.dim(),
        });
    }
    let n = (t_end / h).ceil() as usize;
    let step = if n == 0 { 0.0 } else { t_end / n as f64 };
    let mut out = Vec::with_capacity(n + 1);
    let mut sigma = sigma0.matrix().clone();
    out.push((0.0, sigma0.clone()));
    for k in 1..=n {
        sigma = sys.rk4_step(&sigma, step);
        let t = k as f64 * step;
        check_finite(&sigma, t)?;
        out.push((t, CovarianceMatrix::new(sigma.clone())?));
    }
    Ok(out)
}

/// Largest real part of the drift spectrum.
pub fn spectral_abscissa(drift: &DMatrix<f64>) -> Result<f64> {
    if drift.shape() == (2, 2) {
        let half_trace = 0.5 * (drift[(0, 0)] + drift[(1, 1)]);
        let det = drift[(0, 0)] * drift[(1, 1)] - drift[(0, 1)] * drift[(1, 0)];
        let disc = half_trace * half_trace - det;
        return Ok(if disc > 0.0 { half_trace + disc.sqrt() } else { half_trace });
    }
    let schur = Schur::try_new(drift.clone(), f64::EPSILON, 10_000).ok_or(Error::Singular)?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Solves `D σ + σ Dᵀ + V = 0` through `(1 ⊗ D + D ⊗ 1) vec σ = −vec V`.
pub fn solve_steady_state(sys: &LyapunovSystem) -> Result<CovarianceMatrix> {
    let d = &sys.drift;
    let n = d.nrows();
    let abscissa = spectral_abscissa(d)?;
    let scale = 1.0 + d.amax();
    if abscissa >= -1e-12 * scale {
        return Err(Error::NoSteadyState {
            max_real_part: abscissa,
        });
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(d) + d.kronecker(&eye);
    let rhs = -nalgebra::DVector::from_column_slice(sys.diffusion.as_slice());
    let x = k.lu().solve(&rhs).ok_or(Error::Singular)?;
    let sigma = DMatrix::from_column_slice(n, n, x.as_slice());
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    let residual = sys.derivative(&sigma).amax();
    if residual > STEADY_STATE_RESIDUAL * (1.0 + sys.diffusion.amax()) {
        return Err(Error::Singular);
    }
    CovarianceMatrix::new(sigma)
}

/// Worst law violations over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawCheck {
    pub max_first_law_residual: f64,
    /// `None` if entropy production was undefined (zero-temperature bath).
    pub min_entropy_production: Option<f64>,
    pub steps: usize,
}

impl LawCheck {
    fn new() -> Self {
        Self {
            max_first_law_residual: 0.0,
            min_entropy_production: None,
            steps: 0,
        }
    }

    fn record(&mut self, row: &ThermoRecord) {
        self.steps += 1;
        self.max_first_law_residual = self.max_first_law_residual.max(row.first_law_residual());
        if let Some(s) = row.entropy_production {
            self.min_entropy_production = Some(self.min_entropy_production.map_or(s, |m| m.min(s)));
        }
    }

    pub fn first_law_holds(&self) -> bool {
        self.max_first_law_residual <= TAU_FIRST_LAW
    }

    pub fn second_law_holds(&self) -> bool {
        self.min_entropy_production.map_or(true, |s| s >= -TAU_LAW)
    }

    pub fn holds(&self) -> bool {
        self.first_law_holds() && self.second_law_holds()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub sigma: CovarianceMatrix,
    pub thermo: ThermoRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub laws: LawCheck,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory holds at least the initial point")
    }
}

fn check_recorded(sigma: &CovarianceMatrix) -> Result<()> {
    let min = sigma.min_uncertainty_eigenvalue();
    if min < -TAU_PHYS {
        return Err(Error::Unphysical { min_eigenvalue: min });
    }
    Ok(())
}

/// Default recording stride: every collision, or about 10⁴ rows for an ODE.
pub fn default_record_every(scenario: &CollisionScenario) -> usize {
    match scenario.mode {
        PropagationMode::ContinuousOde => {
            let steps = (scenario.t_end() / scenario.ode_step()).ceil();
            ((steps / 1e4).ceil() as usize).max(1)
        }
        _ => 1,
    }
}

/// Runs a scenario from the thermal system state, checking both laws at
/// every step and storing every `record_every`-th one.
pub fn simulate(scenario: &CollisionScenario, record_every: Option<usize>) -> Result<Trajectory> {
    scenario.validate()?;
    let every = record_every.unwrap_or_else(|| default_record_every(scenario)).max(1);
    let sigma0 = scenario.system.thermal_state()?;
    match scenario.mode {
        PropagationMode::ContinuousOde => simulate_continuous(scenario, sigma0, every),
        _ => simulate_collisions(scenario, sigma0, every),
    }
}

fn simulate_collisions(scenario: &CollisionScenario, sigma0: CovarianceMatrix, every: usize) -> Result<Trajectory> {
    let model = CollisionModel::new(scenario)?;
    let omega = scenario.system.omega;
    let mut laws = LawCheck::new();
    let mut points = vec![TrajectoryPoint {
        t: 0.0,
        thermo: ThermoRecord::initial(0.0, system_energy(&sigma0, omega), von_neumann_entropy(&sigma0)?),
        sigma: sigma0.clone(),
    }];
    let mut sigma = sigma0;
    for k in 1..=scenario.n_steps {
        let t = k as f64 * scenario.dt;
        let outcome = match scenario.mode {
            PropagationMode::ExactStep => model.exact_step(&sigma)?,
            PropagationMode::SuperoperatorStep => model.superoperator_step(&sigma)?,
            PropagationMode::DiscreteRecursion => {
                // The ledger needs a total state; the second-order expansion
                // supplies it and has the same system block.
                let mut o = model.superoperator_step(&sigma)?;
                o.system = model.discrete_recursion_step(&sigma)?;
                o
            }
            PropagationMode::ContinuousOde => unreachable!("handled by simulate_continuous"),
        };
        check_finite(outcome.system.matrix(), t)?;
        let row = model.ledger(&outcome, &sigma, t)?;
        laws.record(&row);
        sigma = outcome.system;
        if k % every == 0 || k == scenario.n_steps {
            check_recorded(&sigma)?;
            points.push(TrajectoryPoint {
                t,
                sigma: sigma.clone(),
                thermo: row,
            });
        }
    }
    Ok(Trajectory { points, laws })
}

/// Rates at one point of a continuous run. `du` comes from `σ̇` directly,
/// heat and work from the closed-form bath rates.
pub fn continuous_record(
    sys: &LyapunovSystem,
    baths: &[ContinuousBath],
    sigma: &CovarianceMatrix,
    omega_s: f64,
    t: f64,
) -> Result<ThermoRecord> {
    let sigma_dot = sys.derivative(sigma.matrix());
    let du = 0.5 * (omega_s * omega_s * sigma_dot[(0, 0)] + sigma_dot[(1, 1)]);
    let mut dq = 0.0;
    let mut dw = 0.0;
    let mut clausius = 0.0;
    let mut defined = true;
    let mut dq_drain = 0.0;
    for (k, bath) in baths.iter().enumerate() {
        let r = bath_rates(sigma, bath)?;
        dq += r.heat;
        dw += r.work;
        if k > 0 {
            dq_drain += r.heat;
        }
        let temp = bath.temperature();
        if temp < crate::gaussian::ZERO_TEMPERATURE {
            defined = false;
        } else {
            clausius += r.heat / temp;
        }
    }
    let ds = entropy_rate(sigma, &sigma_dot)?;
    Ok(ThermoRecord {
        t,
        energy: system_energy(sigma, omega_s),
        du,
        dq,
        dq_drain,
        dw,
        entropy: von_neumann_entropy(sigma)?,
        ds,
        entropy_production: defined.then_some(ds - clausius),
    })
}

fn simulate_continuous(scenario: &CollisionScenario, sigma0: CovarianceMatrix, every: usize) -> Result<Trajectory> {
    let sys = build_lyapunov(scenario)?;
    let baths = continuous_baths(scenario)?;
    let omega = scenario.system.omega;
    let t_end = scenario.t_end();
    let n = (t_end / scenario.ode_step()).ceil() as usize;
    let h = if n == 0 { 0.0 } else { t_end / n as f64 };
    let mut laws = LawCheck::new();
    let first = continuous_record(&sys, &baths, &sigma0, omega, 0.0)?;
    let mut points = vec![TrajectoryPoint {
        t: 0.0,
        sigma: sigma0.clone(),
        thermo: first,
    }];
    let mut sigma = sigma0.into_inner();
    for k in 1..=n {
        sigma = sys.rk4_step(&sigma, h);
        let t = k as f64 * h;
        check_finite(&sigma, t)?;
        let state = CovarianceMatrix::new(sigma.clone())?;
        let row = continuous_record(&sys, &baths, &state, omega, t)?;
        laws.record(&row);
        if k % every == 0 || k == n {
            check_recorded(&state)?;
            points.push(TrajectoryPoint {
                t,
                sigma: state,
                thermo: row,
            });
        }
    }
    Ok(Trajectory { points, laws })
}
