//! Stages shared by the pipeline commands.

use anyhow::{Context, Result};
use serde::Serialize;

use exburg_core::evolve::Trajectory;
use exburg_core::grid::Profile;
use exburg_core::problem::{classify_regime, Regime};
use exburg_core::stationary::StationaryWave;
use exburg_core::weight::WeightGenerator;

use crate::config::{RunConfig, WeightConfig};
use crate::output::RunRecorder;

pub fn build_generator(
    config: &RunConfig,
    params: &exburg_core::problem::ProblemParams,
) -> Result<WeightGenerator> {
    match config.weight {
        WeightConfig::Default => Ok(exburg_core::weight::default_generator(params)),
        WeightConfig::Epsilon { eps } => exburg_core::weight::epsilon_generator(params, eps)
            .context("invalid weight generator"),
    }
}

#[derive(Debug, Serialize)]
pub struct RegimeSummary {
    pub v_minus_eff: f64,
    pub c0: f64,
    pub regime: Regime,
}

pub fn regime_summary(params: &exburg_core::problem::ProblemParams) -> RegimeSummary {
    RegimeSummary {
        v_minus_eff: params.v_minus_eff(),
        c0: params.c0(),
        regime: classify_regime(params),
    }
}

/// Write (r, psi, phi) for a stationary wave.
pub fn write_stationary_csv(rec: &mut RunRecorder, sw: &StationaryWave) -> Result<()> {
    let rows: Vec<Vec<f64>> = sw
        .psi
        .grid()
        .nodes()
        .iter()
        .zip(sw.psi.values())
        .zip(sw.phi.values())
        .map(|((&r, &psi), &phi)| vec![r, psi, phi])
        .collect();
    rec.write_csv("stationary.csv", "r,psi,phi", &rows)
}

/// Write (r, chi).
pub fn write_weight_csv(rec: &mut RunRecorder, chi: &Profile) -> Result<()> {
    let rows: Vec<Vec<f64>> = chi
        .grid()
        .nodes()
        .iter()
        .zip(chi.values())
        .map(|(&r, &c)| vec![r, c])
        .collect();
    rec.write_csv("weight.csv", "r,chi", &rows)
}

/// Stream all snapshots in long form.
pub fn write_trajectory_csv(rec: &mut RunRecorder, traj: &Trajectory) -> Result<()> {
    let grid = traj.grid();
    let phi = traj.phi.values();
    let mut rows = Vec::with_capacity(traj.snapshots.len() * grid.len());
    for snap in &traj.snapshots {
        for (i, &r) in grid.nodes().iter().enumerate() {
            let v = snap.v.values()[i];
            rows.push(vec![snap.t, r, v, v - phi[i], snap.w.values()[i]]);
        }
    }
    rec.write_csv("trajectory.csv", "t,r,v,v_minus_phi,w", &rows)
}

/// Per-snapshot diagnostic series.
pub fn write_series_csv(rec: &mut RunRecorder, traj: &Trajectory) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..traj.times.len())
        .map(|k| {
            vec![
                traj.times[k],
                traj.sup_diff[k],
                traj.w_at_r0[k],
                traj.l2_w[k],
                traj.l2_w_over_r[k],
                traj.l2_w_r[k],
            ]
        })
        .collect();
    rec.write_csv(
        "series.csv",
        "t,sup_diff,w_at_r0,l2_w,l2_w_over_r,l2_w_r",
        &rows,
    )?;
    let rate_rows: Vec<Vec<f64>> = (0..traj.times.len())
        .map(|k| {
            let v = traj.sup_diff[k];
            vec![traj.times[k], v, if v > 0.0 { v.ln() } else { f64::NAN }]
        })
        .collect();
    rec.write_csv("rate_series.csv", "t,value,log_value", &rate_rows)
}

/// Default fit window: past the initial transient, before both the
/// contamination bound and the point where the series sinks into its
/// late-time floor (20x the terminal value).
pub fn derive_window(series: &[(f64, f64)], t_end: f64, t_contam: f64) -> (f64, f64) {
    let t_lo = 0.08 * t_end;
    let floor = series.last().map_or(0.0, |&(_, y)| y);
    let mut t_hi = t_contam.min(t_end);
    if floor > 0.0 {
        let above = series
            .iter()
            .rev()
            .find(|&&(_, y)| y >= 20.0 * floor)
            .map(|&(t, _)| t);
        if let Some(t_floor) = above {
            t_hi = t_hi.min(t_floor);
        }
    }
    if t_hi <= t_lo {
        t_hi = t_contam.min(t_end);
    }
    (t_lo, t_hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_stops_above_the_floor() {
        // Decay to a plateau of 1e-6: the window should end where the series
        // crosses 2e-5.
        let series: Vec<(f64, f64)> = (0..=100)
            .map(|k| {
                let t = k as f64;
                (t, (1e-2 * (-0.3 * t).exp()).max(1e-6))
            })
            .collect();
        let (lo, hi) = derive_window(&series, 100.0, 90.0);
        assert_eq!(lo, 8.0);
        assert!((19.0..23.0).contains(&hi), "hi = {hi}");
    }

    #[test]
    fn window_falls_back_to_contamination_bound() {
        let series: Vec<(f64, f64)> = (0..=100).map(|k| (k as f64, 0.0)).collect();
        let (lo, hi) = derive_window(&series, 100.0, 60.0);
        assert_eq!((lo, hi), (8.0, 60.0));
    }
}
