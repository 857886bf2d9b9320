//! End-to-end acceptance run. Each criterion prints one PASS/FAIL line with
//! the measured numbers; the binary exits nonzero if any criterion fails.
//! Built without the libtest harness so the report is never captured.

use std::time::{Duration, Instant};

use cvcm::presets::{drain_scenario, fig2_table, fig6_table};
use cvcm::{run_preset, Preset};
use cvcm_core::effective::{
    critical_coupling, equilibrium_energy, highest_mode_steady_energy, EffectiveSqueezedBath,
};
use cvcm_core::engine::{CollisionModel, LawCheck};
use cvcm_core::gaussian::thermal_factor;
use cvcm_core::model::build_ring_hamiltonian;
use cvcm_core::thermo::{com_flow_factor, system_energy};
use cvcm_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, budget_s: f64, detail: String) -> Outcome {
    let s = elapsed.as_secs_f64();
    ensure(s < budget_s, format!("{detail}, {s:.2} s (budget {budget_s} s)"))
}

fn random_state(rng: &mut ChaCha8Rng) -> CovarianceMatrix {
    let nu: f64 = rng.gen_range(0.5..2.5);
    let r: f64 = rng.gen_range(-0.8..0.8);
    let (s, c) = rng.gen_range(0.0..std::f64::consts::TAU).sin_cos();
    let (a, b) = ((2.0 * r).exp(), (-2.0 * r).exp());
    CovarianceMatrix::single_mode(
        nu * (c * c * a + s * s * b),
        nu * c * s * (b - a),
        nu * (s * s * a + c * c * b),
    )
}

fn base(kind: CouplingKind, mode: ModeSelector, strength: f64, semantics: StrengthSemantics, lambda_i: f64, dt: f64) -> CollisionScenario {
    CollisionScenario {
        system: SystemSpec::new(1.0, 1.0).unwrap(),
        unit: RingUnitSpec::new(4, 1.0, lambda_i, 1.0).unwrap(),
        coupling: CouplingSpec::single_mode(kind, mode, strength, semantics),
        dt,
        n_steps: 1,
        drain: None,
        mode: PropagationMode::ExactStep,
        ode_step: None,
    }
}

/// Least-squares line through `(x, y)`: slope and R².
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, sxy * sxy / (sxx * syy))
}

/// Centred moving average over `half` points either side.
fn running_mean(y: &[f64], half: usize) -> Vec<f64> {
    (half..y.len() - half)
        .map(|i| y[i - half..=i + half].iter().sum::<f64>() / (2 * half + 1) as f64)
        .collect()
}

fn spectrum() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for n in 2..=12 {
        for &lam in &[-0.1, 0.0, 0.5, 1.0, 5.0] {
            let unit = RingUnitSpec::new(n, 1.0, lam, 1.0).map_err(|e| e.to_string())?;
            let mut closed = ring_mode_frequencies(n, 1.0, lam).map_err(|e| e.to_string())?;
            let h = build_ring_hamiltonian(&unit).map_err(|e| e.to_string())?;
            let mut numeric = normal_mode_decomposition(&h).map_err(|e| e.to_string())?.frequencies().to_vec();
            closed.sort_by(f64::total_cmp);
            numeric.sort_by(f64::total_cmp);
            if closed.len() != numeric.len() {
                return Err(format!("N_E = {n}: {} vs {} modes", closed.len(), numeric.len()));
            }
            for (a, b) in closed.iter().zip(&numeric) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let ok = worst <= 1e-10;
    within(start.elapsed(), 1.0, format!("max |dω| = {worst:.1e} over N_E 2..12")).and_then(|d| ensure(ok, d))
}

fn superoperator_fidelity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for kind in [CouplingKind::Beamsplitter, CouplingKind::Spring] {
        for _ in 0..5 {
            let sigma = random_state(&mut rng);
            let mut errs = Vec::new();
            for &dt in &[0.1, 0.05, 0.025, 0.0125] {
                let sc = base(kind, ModeSelector::Highest, 0.8, StrengthSemantics::Raw, 0.5, dt);
                let m = CollisionModel::new(&sc).map_err(|e| e.to_string())?;
                let exact = m.exact_step(&sigma).map_err(|e| e.to_string())?.system;
                let approx = m.superoperator_step(&sigma).map_err(|e| e.to_string())?.system;
                errs.push((exact.matrix() - approx.matrix()).norm());
            }
            for w in errs.windows(2) {
                lo = lo.min(w[0] / w[1]);
                hi = hi.max(w[0] / w[1]);
            }
        }
    }
    let ok = (6.0..=10.0).contains(&lo) && (6.0..=10.0).contains(&hi);
    within(start.elapsed(), 5.0, format!("halving ratios in [{lo:.3}, {hi:.3}]")).and_then(|d| ensure(ok, d))
}

fn lyapunov_convergence() -> Outcome {
    let start = Instant::now();
    let mut sc = base(CouplingKind::Beamsplitter, ModeSelector::Highest, 0.1, StrengthSemantics::Rescaled, 0.67, 0.01);
    sc.system.temperature = 2.0;
    let sys = build_lyapunov(&sc).map_err(|e| e.to_string())?;
    let s0 = sc.system.thermal_state().map_err(|e| e.to_string())?;
    let reference = integrate_lyapunov(&sys, &s0, 10.0, 1e-3).map_err(|e| e.to_string())?.pop().unwrap().1;
    let steps = [0.04, 0.02, 0.01];
    let mut errs = Vec::new();
    for &dt in &steps {
        sc.dt = dt;
        let m = CollisionModel::new(&sc).map_err(|e| e.to_string())?;
        let mut s = s0.clone();
        for _ in 0..(10.0 / dt).round() as usize {
            s = m.exact_step(&s).map_err(|e| e.to_string())?.system;
        }
        errs.push((s.matrix() - reference.matrix()).norm());
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    // Leading coefficient from the last two points, evaluated at δt = 0.01.
    let extrapolated = (errs[1] - errs[2]) / (steps[1] - steps[2]) * 0.01;
    let ok = ratios.iter().all(|r| (1.8..=2.2).contains(r)) && extrapolated <= 1e-3;
    within(
        start.elapsed(),
        10.0,
        format!("gamma~ = 0.1, ratios {ratios:.3?}, extrapolated error {extrapolated:.2e}"),
    )
    .and_then(|d| ensure(ok, d))
}

fn steady_state_grid() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut regions = [0usize; 3];
    let mut misplaced = Vec::new();
    for &te in &[0.25, 0.5, 1.0, 2.0, 4.0] {
        let lc = critical_coupling(1.0, 1.0, te, 0.5, 4).map_err(|e| e.to_string())?;
        let e_eq = equilibrium_energy(1.0, 1.0, te);
        for &lam in &[-0.1, -0.05, 0.5, 1.0, 3.0] {
            for &g in &[0.1, 0.5, 1.0] {
                let mut sc = base(CouplingKind::Beamsplitter, ModeSelector::Highest, g, StrengthSemantics::Rescaled, lam, 0.01);
                sc.unit.temperature = te;
                let ss = solve_steady_state(&build_lyapunov(&sc).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
                let numeric = system_energy(&ss, 1.0);
                let closed = highest_mode_steady_energy(1.0, 1.0, te, g, 4, lam).map_err(|e| e.to_string())?;
                worst = worst.max((numeric - closed).abs());
                let (region, above) = if lam < 0.0 {
                    (0, true)
                } else if lam < lc {
                    (1, false)
                } else {
                    (2, true)
                };
                regions[region] += 1;
                if (numeric > e_eq) != above {
                    misplaced.push((te, lam, g));
                }
            }
        }
    }
    let ok = worst <= 1e-8 && misplaced.is_empty() && regions.iter().all(|&c| c > 0);
    within(
        start.elapsed(),
        5.0,
        format!("75 points, max |dE| = {worst:.1e}, region counts {regions:?}, misplaced {misplaced:?}"),
    )
    .and_then(|d| ensure(ok, d))
}

fn effective_bath() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0_f64;
    let mut worst_zero = 0.0_f64;
    let mut r_zero = true;
    for k in 0..100 {
        let n = rng.gen_range(2..=7);
        let omega_e = rng.gen_range(0.5..2.0);
        let floor = RingUnitSpec::new(n, omega_e, 0.0, 1.0).unwrap().critical_coupling();
        let lam = if k % 10 == 0 { 0.0 } else { rng.gen_range(0.9 * floor..3.0) };
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.6..0.6)).collect();
        let temp = rng.gen_range(0.2..3.0);
        let sc = CollisionScenario {
            system: SystemSpec::new(rng.gen_range(0.5..2.0), 1.0).unwrap(),
            unit: RingUnitSpec::new(n, omega_e, lam, temp).unwrap(),
            coupling: CouplingSpec::per_oscillator(CouplingKind::Beamsplitter, weights, StrengthSemantics::Rescaled),
            dt: 0.01,
            n_steps: 1,
            drain: None,
            mode: PropagationMode::ContinuousOde,
            ode_step: None,
        };
        let direct = build_lyapunov(&sc).map_err(|e| e.to_string())?;
        let modes = sc.unit.normal_modes().map_err(|e| e.to_string())?;
        let rates = sc.coupling.mode_rates(&modes).map_err(|e| e.to_string())?;
        let eff = EffectiveSqueezedBath::from_couplings(&rates, modes.frequencies(), omega_e, temp).map_err(|e| e.to_string())?;
        let ws = sc.system.omega;
        worst = worst.max((&direct.diffusion - eff.diffusion(ws)).amax());
        worst = worst.max((&direct.drift - eff.drift(ws)).amax());
        if lam == 0.0 {
            r_zero &= eff.r == 0.0;
            worst_zero = worst_zero.max((eff.temperature - temp).abs() / temp);
        }
    }
    let ok = worst <= 1e-12 && r_zero && worst_zero <= 1e-12;
    ensure(
        ok,
        format!("100 scenarios, max |dV|, |dD| = {worst:.1e}; lambda_I = 0: r = 0 {r_zero}, rel dT = {worst_zero:.1e}"),
    )
}

fn centre_of_mass() -> Outcome {
    let mut sc = base(CouplingKind::Beamsplitter, ModeSelector::CenterOfMass, 0.5, StrengthSemantics::Rescaled, 0.67, 0.05);
    sc.system.temperature = 3.0;
    sc.n_steps = 1200;
    let thermal = SystemSpec::new(1.0, 1.0).unwrap().thermal_state().unwrap();
    let ss = solve_steady_state(&build_lyapunov(&sc).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let d_fixed = (ss.matrix() - thermal.matrix()).amax();
    let traj = simulate(&sc, Some(1)).map_err(|e| e.to_string())?;
    let d_run = (traj.last().sigma.matrix() - thermal.matrix()).amax();
    let max_dw = traj.points.iter().map(|p| p.thermo.dw.abs()).fold(0.0, f64::max);
    let f0 = com_flow_factor(&traj.points[0].sigma, 0.5, 1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let f_end = com_flow_factor(&traj.last().sigma, 0.5, 1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let ok = d_fixed <= 1e-8 && d_run <= 1e-8 && max_dw <= 1e-10 && f_end.abs() <= 1e-8 * f0.abs();
    ensure(
        ok,
        format!("|σ_ss − thermal| = {d_fixed:.1e}, after 1200 collisions {d_run:.1e}, max |ΔW| = {max_dw:.1e}, f: {f0:.3e} -> {f_end:.1e}"),
    )
}

fn spring_discrete() -> Outcome {
    let start = Instant::now();
    let traj = simulate(&Preset::Fig4.scenario(), Some(1)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let t: Vec<f64> = traj.points.iter().map(|p| p.t).collect();
    let e: Vec<f64> = traj.points.iter().map(|p| p.thermo.energy).collect();
    let half = 100;
    let mean = running_mean(&e, half);
    let (tx, ex): (Vec<f64>, Vec<f64>) = t[half..t.len() - half]
        .iter()
        .zip(&mean)
        .filter(|(t, _)| (20.0..=100.0).contains(*t))
        .map(|(t, e)| (*t, *e))
        .unzip();
    let (slope, r2) = linear_fit(&tx, &ex);
    let max_dq = traj.points.iter().skip(1).map(|p| p.thermo.dq).fold(f64::NEG_INFINITY, f64::max);
    let ratio = e[e.len() - 1] / e[0];
    let ok = slope > 0.0 && r2 > 0.99 && max_dq <= 1e-10 && ratio > 2.0 && traj.points.len() == 10_001;
    within(
        elapsed,
        10.0,
        format!("slope {slope:.4}, R² {r2:.5}, max ΔQ {max_dq:.2e}, E_end/E_0 = {ratio:.2}"),
    )
    .and_then(|d| ensure(ok, d))
}

fn spring_continuous() -> Outcome {
    let traj = simulate(&Preset::Fig6.scenario(), Some(1)).map_err(|e| e.to_string())?;
    let du: Vec<f64> = traj.points.iter().map(|p| p.thermo.du).collect();
    let du_max = du.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let du_min = du.iter().cloned().fold(f64::INFINITY, f64::min);
    let variation = (du_max - du_min) / du_max.abs();
    let t: Vec<f64> = traj.points.iter().map(|p| p.t).collect();
    let half = 1000;
    let mut fits = Vec::new();
    for (i, j) in [(0, 0), (1, 1)] {
        let y: Vec<f64> = traj.points.iter().map(|p| p.sigma.matrix()[(i, j)]).collect();
        let mean = running_mean(&y, half);
        fits.push(linear_fit(&t[half..t.len() - half], &mean));
    }
    let work_positive = traj.points.iter().all(|p| p.thermo.dw > 0.0);
    let heat_negative = traj.points.iter().all(|p| p.thermo.dq < 0.0);
    let ok = variation <= 1e-8
        && fits.iter().all(|(s, r2)| *s > 0.0 && *r2 > 0.99)
        && work_positive
        && heat_negative;
    ensure(
        ok,
        format!(
            "U̇ rel variation {variation:.1e}, <x²> slope {:.4} (R² {:.5}), <p²> slope {:.4} (R² {:.5}), Ẇ > 0 {work_positive}, Q̇ < 0 {heat_negative}",
            fits[0].0, fits[0].1, fits[1].0, fits[1].1
        ),
    )
}

fn drain() -> Outcome {
    let mut worst = 0.0_f64;
    for k in 0..20 {
        let lam = -0.05 + 2.05 * k as f64 / 19.0;
        let sc = drain_scenario(lam);
        let ss = solve_steady_state(&build_lyapunov(&sc).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let modes = sc.unit.normal_modes().map_err(|e| e.to_string())?;
        let rates = sc.coupling.mode_rates(&modes).map_err(|e| e.to_string())?;
        let closed = cvcm_core::effective::drain_steady_state_energy(&rates, modes.frequencies(), 1.0, 0.5, 1.0, 1.0, 1.0)
            .map_err(|e| e.to_string())?;
        worst = worst.max((system_energy(&ss, 1.0) - closed).abs());
    }
    let at_zero = solve_steady_state(&build_lyapunov(&drain_scenario(0.0)).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let e0 = system_energy(&at_zero, 1.0);
    let thermal = 0.5 * thermal_factor(1.0, 1.0);
    let table = fig6_table().map_err(|e| e.to_string())?;
    let preset_gap = table
        .rows
        .iter()
        .map(|r| (r[1] - r[2]).abs())
        .fold(0.0, f64::max);
    let ok = worst <= 1e-8 && preset_gap <= 1e-8 && e0 > thermal;
    ensure(
        ok,
        format!("20 points, max |dE| = {worst:.1e} (preset sweep {preset_gap:.1e}); lambda_I = 0: {e0:.10} > {thermal:.10}"),
    )
}

fn fuzzed_scenario(rng: &mut ChaCha8Rng) -> CollisionScenario {
    loop {
        let n = rng.gen_range(2..=6);
        let omega_e = rng.gen_range(0.5..2.0);
        let floor = RingUnitSpec::new(n, omega_e, 0.0, 1.0).unwrap().critical_coupling();
        let kind = if rng.gen_bool(0.5) {
            CouplingKind::Beamsplitter
        } else {
            CouplingKind::Spring
        };
        let mode = match rng.gen_range(0..4) {
            0 => PropagationMode::ExactStep,
            1 => PropagationMode::SuperoperatorStep,
            2 => PropagationMode::DiscreteRecursion,
            _ => PropagationMode::ContinuousOde,
        };
        let dt = rng.gen_range(0.005..0.05);
        let semantics = if mode == PropagationMode::ContinuousOde || rng.gen_bool(0.5) {
            StrengthSemantics::Rescaled
        } else {
            StrengthSemantics::Raw
        };
        let strength = match semantics {
            StrengthSemantics::Raw => rng.gen_range(0.05..2.0),
            StrengthSemantics::Rescaled => rng.gen_range(0.01..1.0),
        };
        let selector = ModeSelector::Index(rng.gen_range(1..=n));
        let drain = (mode != PropagationMode::DiscreteRecursion && rng.gen_bool(0.3))
            .then(|| DrainSpec::new(rng.gen_range(0.5..2.0), rng.gen_range(0.1..3.0), rng.gen_range(0.05..1.0)).unwrap());
        let sc = CollisionScenario {
            system: SystemSpec::new(rng.gen_range(0.5..2.0), rng.gen_range(0.1..3.0)).unwrap(),
            unit: RingUnitSpec::new(n, omega_e, rng.gen_range(0.9 * floor..3.0), rng.gen_range(0.1..3.0)).unwrap(),
            coupling: CouplingSpec::single_mode(kind, selector, strength, semantics),
            dt,
            n_steps: 60,
            drain,
            mode,
            ode_step: None,
        };
        if sc.validate().is_ok() {
            return sc;
        }
    }
}

fn laws() -> Outcome {
    let mut checks: Vec<(String, LawCheck)> = Vec::new();
    let dir = std::env::temp_dir().join(format!("cvcm-acceptance-{}", std::process::id()));
    for p in Preset::ALL {
        let report = run_preset(p, &dir.join(p.to_string())).map_err(|e| format!("{p}: {e}"))?;
        if !report.laws_hold {
            return Err(format!("{p}: {:?}", report.summary));
        }
        let traj = simulate(&p.scenario(), None).map_err(|e| e.to_string())?;
        checks.push((p.to_string(), traj.laws));
    }
    let _ = std::fs::remove_dir_all(&dir);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..500 {
        let sc = fuzzed_scenario(&mut rng);
        let traj = simulate(&sc, None).map_err(|e| format!("fuzz {k} ({sc:?}): {e}"))?;
        checks.push((format!("fuzz {k}"), traj.laws));
    }
    let max_res = checks.iter().map(|(_, l)| l.max_first_law_residual).fold(0.0, f64::max);
    let min_sigma = checks
        .iter()
        .filter_map(|(_, l)| l.min_entropy_production)
        .fold(f64::INFINITY, f64::min);
    let failing: Vec<&str> = checks.iter().filter(|(_, l)| !l.holds()).map(|(n, _)| n.as_str()).collect();
    let fig2 = fig2_table().map_err(|e| e.to_string())?;
    let mut decreasing = true;
    for col in ["t_eff_n3", "t_eff_n4", "t_eff_n5"] {
        let t = fig2.column(col).unwrap();
        decreasing &= t.windows(2).all(|w| w[1] < w[0]);
    }
    let ok = failing.is_empty() && max_res <= 1e-12 && min_sigma >= -1e-8 && decreasing;
    ensure(
        ok,
        format!(
            "5 presets + 500 fuzzed: max first-law residual {max_res:.1e}, min Σ {min_sigma:.2e}, failing {failing:?}; T_Ê strictly decreasing {decreasing}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("normal-mode spectrum", spectrum),
        ("superoperator fidelity", superoperator_fidelity),
        ("collision to Lyapunov convergence", lyapunov_convergence),
        ("steady-state equivalence", steady_state_grid),
        ("effective-bath equivalence", effective_bath),
        ("centre-of-mass regime", centre_of_mass),
        ("spring discrete", spring_discrete),
        ("spring continuous", spring_continuous),
        ("drain steady state", drain),
        ("laws of thermodynamics", laws),
    ];
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("criterion {:>2} PASS {name}: {d}", k + 1),
            Err(d) => {
                println!("criterion {:>2} FAIL {name}: {d}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
