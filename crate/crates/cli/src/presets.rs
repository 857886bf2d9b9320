//! Scenarios and parameter sweeps behind each figure.

use std::fmt;
use std::str::FromStr;

use cvcm_core::effective::{
    critical_coupling, drain_steady_state_energy, equilibrium_energy, highest_mode_frequency, highest_mode_steady_energy,
    steady_state_work_bs, EffectiveSqueezedBath,
};
use cvcm_core::engine::continuous_baths;
use cvcm_core::thermo::{bath_rates, system_energy};
use cvcm_core::{
    build_lyapunov, solve_steady_state, CollisionScenario, CouplingKind, CouplingSpec, DrainSpec, ModeSelector,
    PropagationMode, RingUnitSpec, StrengthSemantics, SystemSpec,
};
use rayon::prelude::*;
use serde::Deserialize;

use crate::output::Table;
use crate::CliError;

/// Number of uniform `λ_I` points in every sweep.
pub const SWEEP_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Fig2, Preset::Fig3, Preset::Fig4, Preset::Fig5, Preset::Fig6];

    /// The trajectory each preset runs.
    ///
    /// fig2, fig3: beamsplitter to the highest mode of a 4-ring, exact
    /// collisions. fig4, fig5: discrete spring recursion on the centre of
    /// mass. fig6: zero-sum spring in the continuum limit.
    pub fn scenario(&self) -> CollisionScenario {
        let unit = RingUnitSpec {
            oscillators: 4,
            omega: 1.0,
            lambda_i: 0.67,
            temperature: 1.0,
            force_ring: false,
        };
        let system = SystemSpec {
            omega: 1.0,
            temperature: 1.0,
        };
        match self {
            Preset::Fig2 | Preset::Fig3 => CollisionScenario {
                system,
                unit,
                coupling: highest(CouplingKind::Beamsplitter),
                dt: 0.01,
                n_steps: 2000,
                drain: None,
                mode: PropagationMode::ExactStep,
                ode_step: None,
            },
            Preset::Fig4 | Preset::Fig5 => CollisionScenario {
                system,
                unit,
                coupling: CouplingSpec::single_mode(
                    CouplingKind::Spring,
                    ModeSelector::CenterOfMass,
                    15.0,
                    StrengthSemantics::Raw,
                ),
                dt: 0.01,
                n_steps: 10_000,
                drain: None,
                mode: PropagationMode::DiscreteRecursion,
                ode_step: None,
            },
            Preset::Fig6 => CollisionScenario {
                system,
                unit,
                coupling: highest(CouplingKind::Spring),
                dt: 0.01,
                n_steps: 5000,
                drain: None,
                mode: PropagationMode::ContinuousOde,
                ode_step: None,
            },
        }
    }

    /// Parameter sweep behind the figure, if it has one.
    pub fn sweep(&self) -> Result<Option<Table>, CliError> {
        match self {
            Preset::Fig2 => fig2_table().map(Some),
            Preset::Fig3 => fig3_table().map(Some),
            Preset::Fig6 => fig6_table().map(Some),
            Preset::Fig4 | Preset::Fig5 => Ok(None),
        }
    }

    /// Extra summary lines.
    pub fn extras(&self) -> Result<Vec<(String, String)>, CliError> {
        match self {
            Preset::Fig3 => {
                let lc = critical_coupling(1.0, 1.0, 1.0, 0.5, 4).map_err(|e| numerical("critical coupling", e))?;
                Ok(vec![("lambda_ic".into(), crate::output::fmt_f64(lc))])
            }
            _ => Ok(Vec::new()),
        }
    }
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| CliError::Config {
                origin: "preset".into(),
                message: format!("unknown preset `{s}` (expected fig2, fig3, fig4, fig5 or fig6)"),
            })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Preset::Fig2 => 2,
            Preset::Fig3 => 3,
            Preset::Fig4 => 4,
            Preset::Fig5 => 5,
            Preset::Fig6 => 6,
        };
        write!(f, "fig{n}")
    }
}

fn highest(kind: CouplingKind) -> CouplingSpec {
    CouplingSpec::single_mode(kind, ModeSelector::Highest, 0.5, StrengthSemantics::Rescaled)
}

fn numerical(context: &str, source: cvcm_core::Error) -> CliError {
    CliError::Numerical {
        context: context.to_string(),
        source,
    }
}

/// `n` uniform points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

fn rows<F>(lambdas: &[f64], f: F) -> Result<Vec<Vec<f64>>, CliError>
where
    F: Fn(f64) -> Result<Vec<f64>, CliError> + Sync,
{
    lambdas.par_iter().map(|&l| f(l)).collect()
}

/// `λ_I` against the effective temperature (and squeezing) for rings of
/// 3, 4 and 5 oscillators.
pub fn fig2_table() -> Result<Table, CliError> {
    let sizes = [3usize, 4, 5];
    let lambdas = linspace(-0.1, 2.0, SWEEP_POINTS);
    let data = rows(&lambdas, |lam| {
        let mut row = vec![lam];
        let mut squeezing = Vec::new();
        for &n in &sizes {
            let w = highest_mode_frequency(n, 1.0, lam).map_err(|e| numerical("fig2 sweep", e))?;
            let b = EffectiveSqueezedBath::from_couplings(&[0.5], &[w], 1.0, 1.0).map_err(|e| numerical("fig2 sweep", e))?;
            row.push(b.temperature);
            squeezing.push(b.r);
        }
        row.extend(squeezing);
        Ok(row)
    })?;
    Ok(Table::new(
        &["lambda_i", "t_eff_n3", "t_eff_n4", "t_eff_n5", "r_n3", "r_n4", "r_n5"],
        data,
    ))
}

/// Steady-state energy and work under highest-mode beamsplitter coupling,
/// closed form next to the numerical fixed point.
pub fn fig3_table() -> Result<Table, CliError> {
    let e_eq = equilibrium_energy(1.0, 1.0, 1.0);
    let lambdas = linspace(-0.1, 2.0, SWEEP_POINTS);
    let data = rows(&lambdas, |lam| {
        let mut sc = Preset::Fig3.scenario();
        sc.unit.lambda_i = lam;
        let err = |e| numerical("fig3 sweep", e);
        let ss = solve_steady_state(&build_lyapunov(&sc).map_err(err)?).map_err(err)?;
        let rates = bath_rates(&ss, &continuous_baths(&sc).map_err(err)?[0]).map_err(err)?;
        let w = highest_mode_frequency(4, 1.0, lam).map_err(err)?;
        Ok(vec![
            lam,
            highest_mode_steady_energy(1.0, 1.0, 1.0, 0.5, 4, lam).map_err(err)?,
            system_energy(&ss, 1.0),
            e_eq,
            steady_state_work_bs(0.5, 1.0, 1.0, w, 1.0),
            rates.work,
        ])
    })?;
    Ok(Table::new(
        &["lambda_i", "h_steady", "h_steady_numeric", "e_eq", "work", "work_numeric"],
        data,
    ))
}

/// Zero-sum spring plus drain: steady-state energy and work.
pub fn fig6_table() -> Result<Table, CliError> {
    let lambdas = linspace(-0.05, 2.0, SWEEP_POINTS);
    let data = rows(&lambdas, |lam| {
        let sc = drain_scenario(lam);
        let err = |e| numerical("fig6 sweep", e);
        let ss = solve_steady_state(&build_lyapunov(&sc).map_err(err)?).map_err(err)?;
        let modes = sc.unit.normal_modes().map_err(err)?;
        let rates = sc.coupling.mode_rates(&modes).map_err(err)?;
        let closed = drain_steady_state_energy(&rates, modes.frequencies(), 1.0, 0.5, 1.0, 1.0, 1.0).map_err(err)?;
        let mut work = 0.0;
        for bath in continuous_baths(&sc).map_err(err)? {
            work += bath_rates(&ss, &bath).map_err(err)?.work;
        }
        Ok(vec![lam, closed, system_energy(&ss, 1.0), work])
    })?;
    Ok(Table::new(&["lambda_i", "h_steady", "h_steady_numeric", "work"], data))
}

/// The drained spring scenario at a given ring coupling.
pub fn drain_scenario(lambda_i: f64) -> CollisionScenario {
    let mut sc = Preset::Fig6.scenario();
    sc.unit.lambda_i = lambda_i;
    sc.drain = Some(DrainSpec {
        omega: 1.0,
        temperature: 1.0,
        gamma: 0.5,
    });
    sc
}
