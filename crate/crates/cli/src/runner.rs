use std::path::Path;
use std::str::FromStr;

use cvcm_core::effective::{drain_steady_state_energy, steady_state_energy_bs, EffectiveSqueezedBath};
use cvcm_core::engine::{default_record_every, spectral_abscissa};
use cvcm_core::thermo::system_energy;
use cvcm_core::{
    build_lyapunov, simulate, solve_steady_state, CollisionScenario, CouplingKind, PropagationMode, StrengthSemantics,
    Trajectory,
};
use log::{debug, info};
use rayon::prelude::*;

use crate::config::{OutputConfig, RunConfig};
use crate::output::{fmt_f64, ledger_csv, trajectory_csv, write_file, Summary, Table};
use crate::presets::{linspace, Preset};
use crate::{CliError, ExitStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub summary: Summary,
    pub laws_hold: bool,
}

impl RunReport {
    pub fn exit_status(&self) -> ExitStatus {
        if self.laws_hold {
            ExitStatus::Success
        } else {
            ExitStatus::LawViolation
        }
    }
}

pub fn describe(sc: &CollisionScenario) -> String {
    format!(
        "{:?} coupling, {:?}, N_E = {}, lambda_I = {}, dt = {}, steps = {}{}",
        sc.coupling.kind,
        sc.mode,
        sc.unit.oscillators,
        sc.unit.lambda_i,
        sc.dt,
        sc.n_steps,
        if sc.drain.is_some() { ", with drain" } else { "" }
    )
}

fn mode_name(mode: PropagationMode) -> &'static str {
    match mode {
        PropagationMode::ExactStep => "exact",
        PropagationMode::SuperoperatorStep => "superoperator",
        PropagationMode::DiscreteRecursion => "recursion",
        PropagationMode::ContinuousOde => "ode",
    }
}

fn check(sc: &CollisionScenario) -> Result<(), CliError> {
    sc.validate().map_err(|source| CliError::Scenario {
        context: describe(sc),
        source,
    })
}

fn propagate(sc: &CollisionScenario, record_every: Option<usize>) -> Result<Trajectory, CliError> {
    check(sc)?;
    simulate(sc, record_every).map_err(|source| CliError::Numerical {
        context: describe(sc),
        source,
    })
}

/// Numerical fixed point of the continuum-limit equation, when it has one.
pub fn numerical_steady_state(sc: &CollisionScenario) -> Option<f64> {
    if sc.coupling.semantics != StrengthSemantics::Rescaled {
        return None;
    }
    let sys = build_lyapunov(sc).ok()?;
    if spectral_abscissa(&sys.drift).ok()? >= 0.0 {
        return None;
    }
    solve_steady_state(&sys).ok().map(|s| system_energy(&s, sc.system.omega))
}

/// Closed-form steady-state energy: effective squeezed bath for a lone
/// beamsplitter environment, drain formula for a drained spring.
pub fn analytic_steady_state(sc: &CollisionScenario) -> Option<f64> {
    if sc.coupling.semantics != StrengthSemantics::Rescaled {
        return None;
    }
    let modes = sc.unit.normal_modes().ok()?;
    let rates = sc.coupling.mode_rates(&modes).ok()?;
    match (sc.coupling.kind, &sc.drain) {
        (CouplingKind::Beamsplitter, None) => {
            let b = EffectiveSqueezedBath::from_couplings(&rates, modes.frequencies(), sc.unit.omega, sc.unit.temperature)
                .ok()?;
            Some(steady_state_energy_bs(b.r, b.temperature, sc.system.omega, sc.unit.omega))
        }
        (CouplingKind::Spring, Some(d)) => drain_steady_state_energy(
            &rates,
            modes.frequencies(),
            sc.unit.temperature,
            d.gamma,
            sc.system.omega,
            d.omega,
            d.temperature,
        )
        .ok(),
        _ => None,
    }
}

fn summarize(sc: &CollisionScenario, traj: &Trajectory, preset: Option<Preset>, record_every: usize) -> Summary {
    let mut s = Summary::default();
    s.push("preset", preset.map_or("none".to_string(), |p| p.to_string()));
    s.push("kind", format!("{:?}", sc.coupling.kind).to_lowercase());
    s.push("mode", mode_name(sc.mode));
    s.push("oscillators", sc.unit.oscillators.to_string());
    s.push_f64("lambda_i", sc.unit.lambda_i);
    s.push_f64("dt", sc.dt);
    s.push("steps", sc.n_steps.to_string());
    s.push("record_every", record_every.to_string());
    s.push("rows", traj.points.len().to_string());
    let last = traj.last();
    s.push_f64("final_t", last.t);
    s.push_f64("final_energy", last.thermo.energy);
    s.push_f64("final_sxx", last.sigma.matrix()[(0, 0)]);
    s.push_f64("final_sxp", last.sigma.matrix()[(0, 1)]);
    s.push_f64("final_spp", last.sigma.matrix()[(1, 1)]);
    s.push_f64("final_entropy", last.thermo.entropy);
    s.push_f64("max_first_law_residual", traj.laws.max_first_law_residual);
    s.push(
        "min_entropy_production",
        traj.laws.min_entropy_production.map_or("undefined".to_string(), fmt_f64),
    );
    s.push("first_law", verdict(traj.laws.first_law_holds()));
    s.push("second_law", verdict(traj.laws.second_law_holds()));
    let numeric = numerical_steady_state(sc);
    let analytic = analytic_steady_state(sc);
    s.push("steady_state_energy", numeric.map_or("none".to_string(), fmt_f64));
    s.push("analytic_steady_state_energy", analytic.map_or("none".to_string(), fmt_f64));
    if let (Some(n), Some(a)) = (numeric, analytic) {
        s.push_f64("steady_state_delta", n - a);
    }
    s
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn execute(
    sc: &CollisionScenario,
    record_every: Option<usize>,
    preset: Option<Preset>,
    outputs: &OutputConfig,
) -> Result<RunReport, CliError> {
    let every = record_every.unwrap_or_else(|| default_record_every(sc)).max(1);
    info!("running {}", describe(sc));
    let traj = propagate(sc, Some(every))?;
    let mut summary = summarize(sc, &traj, preset, every);
    if let Some(p) = preset {
        for (k, v) in p.extras()? {
            summary.push(&k, v);
        }
        if let Some(table) = p.sweep()? {
            write_file(&outputs.sweep, &table.to_csv())?;
        }
    }
    write_file(&outputs.trajectory, &trajectory_csv(&traj))?;
    write_file(&outputs.ledger, &ledger_csv(&traj))?;
    write_file(&outputs.summary, &summary.render())?;
    info!(
        "done: first-law residual {:e}, laws {}",
        traj.laws.max_first_law_residual,
        verdict(traj.laws.holds())
    );
    Ok(RunReport {
        summary,
        laws_hold: traj.laws.holds(),
    })
}

pub fn run(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let sc = cfg.scenario()?;
    execute(&sc, cfg.record_every, cfg.preset, &cfg.outputs)
}

/// Runs a preset into `dir` (trajectory, ledger, summary and, for the
/// sweep figures, `sweep.csv`).
pub fn run_preset(preset: Preset, dir: &Path) -> Result<RunReport, CliError> {
    execute(&preset.scenario(), None, Some(preset), &OutputConfig::in_dir(dir))
}

/// Dry-run checks. An empty list means the config is runnable.
pub fn validate(cfg: &RunConfig) -> Vec<String> {
    let sc = match cfg.scenario() {
        Ok(sc) => sc,
        Err(e) => return vec![e.to_string()],
    };
    let mut report = Vec::new();
    let mut parts_ok = true;
    let mut note = |ok: &mut bool, label: &str, r: cvcm_core::Result<()>| {
        if let Err(e) = r {
            *ok = false;
            report.push(format!("{label}: {e}"));
        }
    };
    note(&mut parts_ok, "system", sc.system.validate());
    note(&mut parts_ok, "unit", sc.unit.validate());
    if let Some(d) = &sc.drain {
        note(&mut parts_ok, "drain", d.validate());
    }
    if cfg.record_every == Some(0) {
        report.push("record_every must be at least 1".into());
    }
    if !parts_ok {
        return report;
    }
    if let Err(e) = sc.validate() {
        report.push(format!("scenario: {e}"));
        return report;
    }
    if sc.coupling.semantics == StrengthSemantics::Rescaled {
        if sc.coupling.kind == CouplingKind::Beamsplitter {
            let eff = sc.unit.normal_modes().and_then(|m| {
                let rates = sc.coupling.mode_rates(&m)?;
                EffectiveSqueezedBath::from_couplings(&rates, m.frequencies(), sc.unit.omega, sc.unit.temperature)
            });
            if let Err(e) = eff {
                report.push(format!("effective bath: {e}"));
            }
        }
        let wants_steady_state = sc.drain.is_some() || sc.coupling.kind == CouplingKind::Beamsplitter;
        if wants_steady_state {
            match build_lyapunov(&sc).and_then(|sys| spectral_abscissa(&sys.drift)) {
                Ok(a) if a >= 0.0 => report.push(format!(
                    "steady state: drift is not Hurwitz (spectral abscissa {a:e})"
                )),
                Ok(_) => {}
                Err(e) => report.push(format!("steady state: {e}")),
            }
        }
    }
    report
}

/// Scenario fields a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    LambdaI,
    Strength,
    UnitTemperature,
    UnitOmega,
    SystemOmega,
    SystemTemperature,
    Dt,
    DrainGamma,
}

impl SweepParam {
    const NAMES: [(&'static str, SweepParam); 8] = [
        ("lambda_i", SweepParam::LambdaI),
        ("strength", SweepParam::Strength),
        ("unit_temperature", SweepParam::UnitTemperature),
        ("unit_omega", SweepParam::UnitOmega),
        ("system_omega", SweepParam::SystemOmega),
        ("system_temperature", SweepParam::SystemTemperature),
        ("dt", SweepParam::Dt),
        ("drain_gamma", SweepParam::DrainGamma),
    ];

    pub fn name(&self) -> &'static str {
        Self::NAMES.iter().find(|(_, p)| p == self).map(|(n, _)| *n).unwrap()
    }

    fn apply(&self, sc: &mut CollisionScenario, v: f64) -> Result<(), CliError> {
        use cvcm_core::CouplingWeights;
        match self {
            SweepParam::LambdaI => sc.unit.lambda_i = v,
            SweepParam::Strength => match &mut sc.coupling.weights {
                CouplingWeights::SingleMode { strength, .. } => *strength = v,
                CouplingWeights::PerOscillator(_) => return Err(sweep_error("`strength` needs single-mode coupling")),
            },
            SweepParam::UnitTemperature => sc.unit.temperature = v,
            SweepParam::UnitOmega => sc.unit.omega = v,
            SweepParam::SystemOmega => sc.system.omega = v,
            SweepParam::SystemTemperature => sc.system.temperature = v,
            SweepParam::Dt => {
                let t_end = sc.t_end();
                sc.dt = v;
                sc.n_steps = (t_end / v).round() as usize;
            }
            SweepParam::DrainGamma => match &mut sc.drain {
                Some(d) => d.gamma = v,
                None => return Err(sweep_error("`drain_gamma` needs a [drain] table")),
            },
        }
        Ok(())
    }
}

fn sweep_error(message: &str) -> CliError {
    CliError::Config {
        origin: "--sweep".into(),
        message: message.into(),
    }
}

/// `<param>=<start>:<stop>:<n>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl FromStr for SweepSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, range) = s.split_once('=').ok_or_else(|| sweep_error("expected <param>=<start>:<stop>:<n>"))?;
        let param = SweepParam::NAMES
            .iter()
            .find(|(n, _)| *n == name.trim())
            .map(|(_, p)| *p)
            .ok_or_else(|| {
                let known: Vec<&str> = SweepParam::NAMES.iter().map(|(n, _)| *n).collect();
                sweep_error(&format!("unknown parameter `{name}` (known: {})", known.join(", ")))
            })?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(sweep_error("expected <start>:<stop>:<n>"));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| sweep_error(&format!("bad number `{t}`: {e}")));
        let points = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| sweep_error(&format!("bad point count `{}`: {e}", parts[2])))?;
        if points == 0 {
            return Err(sweep_error("a sweep needs at least one point"));
        }
        Ok(Self {
            param,
            start: num(parts[0])?,
            stop: num(parts[1])?,
            points,
        })
    }
}

pub const SWEEP_COLUMNS: [&str; 5] = [
    "final_energy",
    "steady_state_energy",
    "analytic_steady_state_energy",
    "max_first_law_residual",
    "min_entropy_production",
];

/// Runs every sweep point in parallel and writes one row per point, in
/// parameter order, to the sweep path. Missing quantities are written as
/// NaN.
pub fn sweep(cfg: &RunConfig, spec: &SweepSpec) -> Result<(Table, RunReport), CliError> {
    let base = cfg.scenario()?;
    let values = linspace(spec.start, spec.stop, spec.points);
    let results: Vec<(Vec<f64>, bool)> = values
        .par_iter()
        .map(|&v| {
            let mut sc = base.clone();
            spec.param.apply(&mut sc, v)?;
            debug!("sweep point {} = {v}", spec.param.name());
            let traj = propagate(&sc, Some(usize::MAX))?;
            let last = traj.last();
            let row = vec![
                v,
                last.thermo.energy,
                numerical_steady_state(&sc).unwrap_or(f64::NAN),
                analytic_steady_state(&sc).unwrap_or(f64::NAN),
                traj.laws.max_first_law_residual,
                traj.laws.min_entropy_production.unwrap_or(f64::NAN),
            ];
            Ok((row, traj.laws.holds()))
        })
        .collect::<Result<_, CliError>>()?;
    let mut header = vec![spec.param.name()];
    header.extend(SWEEP_COLUMNS);
    let laws_hold = results.iter().all(|(_, ok)| *ok);
    let table = Table::new(&header, results.into_iter().map(|(r, _)| r).collect());
    write_file(&cfg.outputs.sweep, &table.to_csv())?;
    let mut summary = Summary::default();
    summary.push("sweep", spec.param.name());
    summary.push("points", spec.points.to_string());
    summary.push("laws", verdict(laws_hold));
    write_file(&cfg.outputs.summary, &summary.render())?;
    Ok((table, RunReport { summary, laws_hold }))
}
