use std::fs;

use cvcm::presets::{fig2_table, fig3_table, fig6_table, SWEEP_POINTS};
use cvcm::{run_preset, Preset};

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

#[test]
fn fig2_curves_fall_with_ring_coupling() {
    let t = fig2_table().unwrap();
    assert_eq!(t.rows.len(), SWEEP_POINTS);
    for col in ["t_eff_n3", "t_eff_n4", "t_eff_n5"] {
        let v = t.column(col).unwrap();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "{col}");
    }
    // λ_I = 0 is not on the grid; the curves straddle T_E there.
    let lam = t.column("lambda_i").unwrap();
    let k = lam.iter().position(|l| *l > 0.0).unwrap();
    let t4 = t.column("t_eff_n4").unwrap();
    assert!(t4[k - 1] > 1.0 && t4[k] < 1.0);
}

#[test]
fn fig3_columns_agree() {
    let t = fig3_table().unwrap();
    for r in &t.rows {
        assert!((r[1] - r[2]).abs() < 1e-8);
        assert!((r[4] - r[5]).abs() < 1e-8);
        assert!(r[4] >= 0.0);
    }
}

#[test]
fn fig6_sweep_has_energy_and_work() {
    let t = fig6_table().unwrap();
    assert_eq!(t.header, ["lambda_i", "h_steady", "h_steady_numeric", "work"]);
    assert!(t.rows.iter().all(|r| (r[1] - r[2]).abs() < 1e-8 && r[3] > 0.0));
}

#[test]
fn fig4_energy_oscillates_about_linear_growth() {
    let dir = std::env::temp_dir().join(format!("cvcm-presets-{}", std::process::id()));
    let report = run_preset(Preset::Fig4, &dir).unwrap();
    assert!(report.laws_hold);
    let data = rows(&fs::read_to_string(dir.join("trajectory.csv")).unwrap());
    assert_eq!(data.len(), 10_001);
    let energy: Vec<f64> = data.iter().map(|r| r[4]).collect();
    let drops = energy.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(drops > 100, "no oscillation: {drops} decreasing steps");
    let quarter = energy.len() / 4;
    let means: Vec<f64> = energy.chunks(quarter).take(4).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let steps: Vec<f64> = means.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|s| *s > 0.0));
    assert!(steps.iter().all(|s| (s / steps[0] - 1.0).abs() < 0.2), "{steps:?}");
    assert!(!dir.join("sweep.csv").exists());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn preset_output_is_reproducible() {
    let base = std::env::temp_dir().join(format!("cvcm-presets-rep-{}", std::process::id()));
    for sub in ["a", "b"] {
        run_preset(Preset::Fig3, &base.join(sub)).unwrap();
    }
    for f in ["trajectory.csv", "ledger.csv", "summary.txt", "sweep.csv"] {
        assert_eq!(fs::read(base.join("a").join(f)).unwrap(), fs::read(base.join("b").join(f)).unwrap(), "{f}");
    }
    let _ = fs::remove_dir_all(&base);
}

#[test]
fn preset_names_round_trip() {
    for p in Preset::ALL {
        assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
    }
    assert!("fig7".parse::<Preset>().is_err());
}
