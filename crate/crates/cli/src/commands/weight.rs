//! `exburg weight`: build the energy weight and verify its properties.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use exburg_core::stationary::solve_stationary;
use exburg_core::weight::{build_weight, verify_weight_properties, WeightReport};

use super::common::{build_generator, write_weight_csv};
use super::CommandStatus;
use crate::config::{FaultInjection, RunConfig};
use crate::output::RunRecorder;

#[derive(Debug, Serialize)]
struct WeightFileReport {
    generator: String,
    c1: f64,
    c2: f64,
    farfield_value: f64,
    farfield_formula: f64,
    build_radius: f64,
    halfway_gap: f64,
    verification: WeightReport,
}

pub fn cmd_weight(config: &RunConfig, out: &Path) -> Result<CommandStatus> {
    let params = config.params.build()?;
    let grid = config.grid.build(params.r0())?;
    let opts = config.stationary.build();
    let mut rec = RunRecorder::new(out, true)?;

    let sw = solve_stationary(&params, &grid, &opts)?;
    let gen = build_generator(config, &params)?;
    let mut wf = build_weight(&sw, &gen, &grid)?;

    if config.fault == Some(FaultInjection::ShiftChi) {
        for v in wf.chi.values_mut() {
            *v += 1.0;
        }
    }

    let verification = verify_weight_properties(&wf, &sw);
    let farfield_formula = params.mu() * gen.lim_abs_f() / params.v_plus().abs();
    let halfway_gap = (wf.chi_at(wf.build_radius / 2.0) - wf.farfield_value).abs();

    rec.check("positivity", verification.positivity, format!("min chi = {:.4e}", wf.c1));
    rec.check(
        "ode_residual",
        verification.ode_residual <= config.checks.weight_ode_residual_max,
        format!(
            "{:.3e} (max {:.1e})",
            verification.ode_residual, config.checks.weight_ode_residual_max
        ),
    );
    rec.check(
        "boundary_identity",
        verification.boundary_value_error <= config.checks.weight_boundary_error_max,
        format!(
            "{:.3e} (max {:.1e})",
            verification.boundary_value_error, config.checks.weight_boundary_error_max
        ),
    );
    rec.check(
        "second_identity",
        verification.second_identity_residual <= config.checks.weight_second_identity_max,
        format!(
            "{:.3e} (max {:.1e})",
            verification.second_identity_residual, config.checks.weight_second_identity_max
        ),
    );
    rec.check(
        "farfield_value",
        (wf.farfield_value - farfield_formula).abs() <= 1e-10 && halfway_gap <= 1e-3,
        format!(
            "imposed {:.6}, formula {:.6}, halfway gap {:.3e}",
            wf.farfield_value, farfield_formula, halfway_gap
        ),
    );

    write_weight_csv(&mut rec, &wf.chi)?;
    rec.write_json(
        "weight_report.json",
        &WeightFileReport {
            generator: gen.label().to_string(),
            c1: wf.c1,
            c2: wf.c2,
            farfield_value: wf.farfield_value,
            farfield_formula,
            build_radius: wf.build_radius,
            halfway_gap,
            verification,
        },
    )?;
    let all_passed = rec.all_passed();
    rec.finish("weight", config)?;
    Ok(if all_passed {
        CommandStatus::Pass
    } else {
        CommandStatus::ChecksFailed
    })
}
