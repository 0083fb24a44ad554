//! `exburg evolve`: full pipeline from stationary wave to decay-rate fits.

use std::path::Path;

use anyhow::{anyhow, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use exburg_core::diagnostics::{
    admissible_beta_gamma, check_zeroth_order_bound, coefficient_bounds,
    energy_identity_residual, fit_algebraic_rate, fit_exponential_rate, CoefficientBoundsReport,
    EnergyReport, RateFit,
};
use exburg_core::evolve::{
    contamination_time, evolve, make_initial_data, w_equation_residual, EvolveError,
    WResidualReport,
};
use exburg_core::stationary::solve_stationary;
use exburg_core::weight::build_weight;

use super::common::{
    build_generator, derive_window, write_series_csv, write_trajectory_csv, write_weight_csv,
};
use super::CommandStatus;
use crate::config::{FaultInjection, FitKindConfig, RunConfig};
use crate::output::RunRecorder;

#[derive(Debug, Serialize)]
struct RateFitsReport {
    window: (f64, f64),
    contamination_time: f64,
    fit: Option<RateFit>,
    fit_error: Option<String>,
    beta: f64,
    gamma: f64,
    gamma_admissible: f64,
    coefficient_bounds: CoefficientBoundsReport,
}

#[derive(Debug, Serialize)]
struct PartialRunNote {
    error: String,
    snapshots_recorded: usize,
    last_time: Option<f64>,
}

pub fn cmd_evolve(config: &RunConfig, out: &Path, seed_override: Option<u64>) -> Result<CommandStatus> {
    let evolve_cfg = config
        .evolve
        .as_ref()
        .ok_or_else(|| anyhow!("config has no `evolve` section"))?;
    let params = config.params.build()?;
    let grid = config.grid.build(params.r0())?;
    let opts = config.stationary.build();
    let mut rec = RunRecorder::new(out, true)?;

    let sw = solve_stationary(&params, &grid, &opts)?;
    let gen = build_generator(config, &params)?;
    let wf = build_weight(&sw, &gen, &grid)?;

    let seed = seed_override.unwrap_or(config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = evolve_cfg.initial_data.build(&mut rng);
    let mut v0 = make_initial_data(&sw, &spec)?;
    if config.fault == Some(FaultInjection::InjectNan) {
        let mid = v0.len() / 2;
        v0.values_mut()[mid] = f64::NAN;
    }

    let scheme = evolve_cfg.scheme();
    let t_contam = contamination_time(&sw, &v0);
    let traj = match evolve(&params, &sw, &v0, evolve_cfg.t_end, &scheme) {
        Ok(traj) => traj,
        Err(err) => {
            // Abort, but leave the partial trajectory and a manifest behind
            // for inspection.
            let (partial, message) = match &err {
                EvolveError::CflCollapse { partial, .. } => (Some(partial), err.to_string()),
                EvolveError::NonFinite { partial, .. } => (Some(partial), err.to_string()),
                EvolveError::Setup(e) => (None, e.to_string()),
            };
            if let Some(partial) = partial {
                write_trajectory_csv(&mut rec, partial)?;
                write_series_csv(&mut rec, partial)?;
                rec.write_json(
                    "partial_run.json",
                    &PartialRunNote {
                        error: message.clone(),
                        snapshots_recorded: partial.snapshots.len(),
                        last_time: partial.times.last().copied(),
                    },
                )?;
            }
            rec.check("run_completed", false, message.clone());
            rec.finish("evolve", config)?;
            return Err(anyhow!("{message}"));
        }
    };

    rec.check(
        "run_completed",
        true,
        format!("{} steps, final dt {:.3e}", traj.steps_taken, traj.final_dt),
    );
    let sup0 = traj.sup_diff[0];
    let sup_end = *traj.sup_diff.last().unwrap();
    rec.check(
        "deviation_not_growing",
        sup_end <= sup0.max(1e-14),
        format!("sup_diff {sup0:.3e} -> {sup_end:.3e}"),
    );

    // Energy accounting.
    let mut energy: EnergyReport = check_zeroth_order_bound(&traj);
    energy.identity_residual = Some(energy_identity_residual(&traj, &wf)?);
    let w_residual: WResidualReport = w_equation_residual(&traj, &sw)?;
    rec.check(
        "w_boundary_derivative",
        w_residual.max_boundary_wr <= 1e-5,
        format!("max |w_r(t, r0)| = {:.3e}", w_residual.max_boundary_wr),
    );

    // Decay-rate fit.
    let series = traj.sup_diff_series();
    let window = config
        .diagnostics
        .window
        .unwrap_or_else(|| derive_window(&series, evolve_cfg.t_end, t_contam));
    let (fit, fit_error) = match config.diagnostics.fit {
        FitKindConfig::None => (None, None),
        FitKindConfig::Algebraic => match fit_algebraic_rate(&series, window) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        },
        FitKindConfig::Exponential => match fit_exponential_rate(&series, window) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        },
    };
    if config.diagnostics.fit != FitKindConfig::None {
        match &fit {
            Some(f) => rec.check(
                "fit_quality",
                f.r_squared >= config.checks.fit_r_squared_min,
                format!(
                    "exponent {:.4}, r2 {:.4} (min {:.2}), window ({:.2}, {:.2})",
                    f.exponent, f.r_squared, config.checks.fit_r_squared_min, window.0, window.1
                ),
            ),
            None => rec.check(
                "fit_quality",
                false,
                fit_error.clone().unwrap_or_default(),
            ),
        }
    }

    let (beta_max, gamma_max) = admissible_beta_gamma(&wf, &params);
    let beta = config.diagnostics.beta.unwrap_or(beta_max);
    let gamma = config.diagnostics.gamma.unwrap_or(gamma_max);
    let bounds = coefficient_bounds(&wf, &params, beta, gamma);
    rec.check(
        "coefficient_bounds",
        bounds.admissible && bounds.a_beta_min_ok && bounds.b_beta_ok,
        format!(
            "beta {beta:.4}, gamma {gamma:.5}, admissible {}, A ok {}, B ok {}",
            bounds.admissible, bounds.a_beta_min_ok, bounds.b_beta_ok
        ),
    );

    write_trajectory_csv(&mut rec, &traj)?;
    write_series_csv(&mut rec, &traj)?;
    write_weight_csv(&mut rec, &wf.chi)?;
    rec.write_json("energy_report.json", &energy)?;
    rec.write_json("w_residual.json", &w_residual)?;
    rec.write_json(
        "rate_fits.json",
        &RateFitsReport {
            window,
            contamination_time: t_contam,
            fit,
            fit_error,
            beta,
            gamma,
            gamma_admissible: gamma_max,
            coefficient_bounds: bounds,
        },
    )?;
    let all_passed = rec.all_passed();
    rec.finish("evolve", config)?;
    Ok(if all_passed {
        CommandStatus::Pass
    } else {
        CommandStatus::ChecksFailed
    })
}
