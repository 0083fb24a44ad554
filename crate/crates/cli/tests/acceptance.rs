//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Desk scale throughout: grids of at most 4000 nodes, end times of at most
//! 100, every run within a 60 s single-core budget.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use exburg_core::diagnostics::{
    admissible_beta_gamma, b_beta, check_zeroth_order_bound, coefficient_bounds,
    energy_identity_residual, fit_algebraic_rate, fit_exponential_rate,
};
use exburg_core::evolve::{
    evolve, make_initial_data, InitialDataFamily, InitialDataSpec, SchemeConfig, Trajectory,
};
use exburg_core::grid::RadialGrid;
use exburg_core::problem::{both_negative_subcase, ProblemParams};
use exburg_core::stationary::{
    check_far_field_decay, check_negative_bound_and_monotone, solve_stationary,
    StationarySolveOptions, StationaryWave,
};
use exburg_core::weight::{build_weight, default_generator, verify_weight_properties, WeightFunction};

/// The nine-point stationary suite: n in {4, 5, 6} x (v-, v+) in
/// {(0, -1), (-0.5, -1), (2, -1)} with mu = 1, r0 = 1.
const SUITE_N: [u32; 3] = [4, 5, 6];
const SUITE_DATA: [(f64, f64); 3] = [(0.0, -1.0), (-0.5, -1.0), (2.0, -1.0)];

fn pass(name: &str, detail: &str) {
    println!("[PASS] {name}: {detail}");
}

fn suite_grid() -> Arc<RadialGrid> {
    static GRID: OnceLock<Arc<RadialGrid>> = OnceLock::new();
    GRID.get_or_init(|| {
        Arc::new(RadialGrid::geometric_from_first_spacing(1.0, 60.0, 2000, 4e-4).unwrap())
    })
    .clone()
}

#[allow(clippy::type_complexity)]
fn suite_solutions() -> &'static BTreeMap<(u32, (i64, i64)), (ProblemParams, StationaryWave, f64)> {
    static SUITE: OnceLock<BTreeMap<(u32, (i64, i64)), (ProblemParams, StationaryWave, f64)>> =
        OnceLock::new();
    SUITE.get_or_init(|| {
        let grid = suite_grid();
        let opts = StationarySolveOptions::default();
        let mut map = BTreeMap::new();
        for n in SUITE_N {
            for (vm, vp) in SUITE_DATA {
                let params = ProblemParams::new(n, 1.0, 1.0, vm, vp).unwrap();
                let start = Instant::now();
                let sw = solve_stationary(&params, &grid, &opts).unwrap();
                let elapsed = start.elapsed().as_secs_f64();
                let key = (n, ((vm * 10.0) as i64, (vp * 10.0) as i64));
                map.insert(key, (params, sw, elapsed));
            }
        }
        map
    })
}

fn evolution_grid() -> Arc<RadialGrid> {
    static GRID: OnceLock<Arc<RadialGrid>> = OnceLock::new();
    GRID.get_or_init(|| {
        Arc::new(RadialGrid::geometric_from_first_spacing(1.0, 60.0, 1401, 1e-3).unwrap())
    })
    .clone()
}

fn bump_spec(amplitude: f64) -> InitialDataSpec {
    InitialDataSpec {
        family: InitialDataFamily::CompactBump {
            center: 3.0,
            width: 1.0,
        },
        amplitude,
    }
}

fn uniform_times(t_end: f64, count: usize) -> Vec<f64> {
    (1..count).map(|k| t_end * k as f64 / count as f64).collect()
}

/// T = 50 compact-bump run for the base case (v- = 0, v+ = -1, n = 4),
/// shared by the stability and exponential-rate criteria.
fn base_bump_run() -> &'static (ProblemParams, StationaryWave, WeightFunction, Trajectory) {
    static RUN: OnceLock<(ProblemParams, StationaryWave, WeightFunction, Trajectory)> =
        OnceLock::new();
    RUN.get_or_init(|| {
        let params = ProblemParams::new(4, 1.0, 1.0, 0.0, -1.0).unwrap();
        let grid = evolution_grid();
        let sw = solve_stationary(&params, &grid, &StationarySolveOptions::default()).unwrap();
        let wf = build_weight(&sw, &default_generator(&params), &grid).unwrap();
        let v0 = make_initial_data(&sw, &bump_spec(1e-2)).unwrap();
        let scheme = SchemeConfig {
            dt: 3.8e-4,
            theta: 0.5,
            snapshot_times: uniform_times(50.0, 250),
            ..Default::default()
        };
        let traj = evolve(&params, &sw, &v0, 50.0, &scheme).unwrap();
        (params, sw, wf, traj)
    })
}

#[test]
fn criterion_01_stationary_solver_suite() {
    for ((n, (vm, vp)), (_, sw, elapsed)) in suite_solutions() {
        assert!(
            sw.residual_max <= 1e-8,
            "n={n} (v-,v+)=({vm},{vp}): residual {:.3e}",
            sw.residual_max
        );
        assert!(
            sw.farfield_gap <= 1e-6,
            "n={n} (v-,v+)=({vm},{vp}): far-field gap {:.3e}",
            sw.farfield_gap
        );
        assert!(
            *elapsed < 1.0,
            "n={n} (v-,v+)=({vm},{vp}): took {elapsed:.2} s"
        );
    }
    let worst_res = suite_solutions()
        .values()
        .map(|(_, sw, _)| sw.residual_max)
        .fold(0.0f64, f64::max);
    let worst_gap = suite_solutions()
        .values()
        .map(|(_, sw, _)| sw.farfield_gap)
        .fold(0.0f64, f64::max);
    pass(
        "criterion 1 (stationary solver suite)",
        &format!("9 cases: residual <= {worst_res:.2e}, far-field gap <= {worst_gap:.2e}, each < 1 s"),
    );
}

#[test]
fn criterion_02_far_field_exponent() {
    let mut slopes = Vec::new();
    for ((n, (vm, vp)), (_, sw, _)) in suite_solutions() {
        let slope = check_far_field_decay(sw).unwrap();
        assert!(
            (-2.2..=-1.8).contains(&slope),
            "n={n} (v-,v+)=({vm},{vp}): slope {slope}"
        );
        slopes.push(slope);
    }
    pass(
        "criterion 2 (quadratic far-field decay)",
        &format!(
            "9 slopes in [{:.3}, {:.3}] within [-2.2, -1.8]",
            slopes.iter().copied().fold(f64::INFINITY, f64::min),
            slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        ),
    );
}

#[test]
fn criterion_03_conditional_bounds() {
    let mut checked = 0;
    for ((n, (vm, vp)), (params, sw, _)) in suite_solutions() {
        if !both_negative_subcase(params) {
            continue;
        }
        let report = check_negative_bound_and_monotone(sw, params).unwrap();
        assert!(
            report.phi_max <= 1e-10,
            "n={n} (v-,v+)=({vm},{vp}): max phi {:.3e}",
            report.phi_max
        );
        assert!(
            report.min_monotone_expr >= -1e-8,
            "n={n} (v-,v+)=({vm},{vp}): monotone {:.3e}",
            report.min_monotone_expr
        );
        checked += 1;
    }
    assert_eq!(checked, 3, "expected the three both-negative suite cases");
    pass(
        "criterion 3 (sign and monotonicity bounds)",
        &format!("{checked} gated cases: max phi <= 1e-10, monotone expression >= -1e-8"),
    );
}

#[test]
fn criterion_04_weight_properties() {
    let grid = suite_grid();
    let mut worst = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    for ((n, (vm, vp)), (params, sw, _)) in suite_solutions() {
        let gen = default_generator(params);
        let wf = build_weight(sw, &gen, &grid).unwrap();
        let report = verify_weight_properties(&wf, sw);
        let label = format!("n={n} (v-,v+)=({vm},{vp})");
        assert!(wf.c1 >= 1e-3, "{label}: min chi {:.3e}", wf.c1);
        assert!(
            report.ode_residual <= 1e-8,
            "{label}: residual {:.3e}",
            report.ode_residual
        );
        assert!(
            report.boundary_value_error <= 1e-6,
            "{label}: boundary {:.3e}",
            report.boundary_value_error
        );
        let formula = params.mu() * (2.0 / params.r0()) / params.v_plus().abs();
        assert!(
            (wf.farfield_value - formula).abs() <= 1e-4,
            "{label}: far value {} vs {formula}",
            wf.farfield_value
        );
        worst = (
            worst.0.max(report.ode_residual),
            worst.1.min(wf.c1),
            worst.2.max(report.boundary_value_error),
            worst.3.max((wf.farfield_value - formula).abs()),
        );
    }
    pass(
        "criterion 4 (weight construction)",
        &format!(
            "9 cases: min chi >= {:.3}, residual <= {:.2e}, boundary <= {:.2e}, far value exact to {:.1e}",
            worst.1, worst.0, worst.2, worst.3
        ),
    );
}

#[test]
fn criterion_05_constant_profile_quadrature() {
    // n = 3 with V- = v+: psi is constant and the weight integral explicit.
    let params = ProblemParams::new(3, 1.0, 1.0, 1.0, -1.0).unwrap();
    let grid = suite_grid();
    let sw = solve_stationary(&params, &grid, &StationarySolveOptions::default()).unwrap();
    let wf = build_weight(&sw, &default_generator(&params), &grid).unwrap();

    let mut max_err = 0.0f64;
    for (i, &r) in grid.nodes().iter().enumerate().step_by(10) {
        let oracle = chi_constant_quadrature(r, 1.0, 1.0, 1.0);
        max_err = max_err.max((wf.chi.values()[i] - oracle).abs());
    }
    assert!(max_err <= 1e-8, "max |chi - quadrature| = {max_err:.3e}");
    pass(
        "criterion 5 (constant-profile quadrature oracle)",
        &format!("max error {max_err:.3e} <= 1e-8"),
    );
}

#[test]
fn criterion_06_energy_identity_refinement() {
    let params = ProblemParams::new(4, 1.0, 1.0, 0.0, -1.0).unwrap();
    let finest = Arc::new(RadialGrid::geometric_from_first_spacing(1.0, 60.0, 3201, 1.1e-3).unwrap());
    let mid = Arc::new(finest.coarsen().unwrap());
    let coarse = Arc::new(mid.coarsen().unwrap());
    let t_end = 6.0;
    let opts = StationarySolveOptions::default();
    let run = |grid: &Arc<RadialGrid>, dt: f64, snapshots: usize| -> f64 {
        let sw = solve_stationary(&params, grid, &opts).unwrap();
        let wf = build_weight(&sw, &default_generator(&params), grid).unwrap();
        let v0 = make_initial_data(&sw, &bump_spec(1e-2)).unwrap();
        let scheme = SchemeConfig {
            dt,
            theta: 0.5,
            snapshot_times: uniform_times(t_end, snapshots),
            ..Default::default()
        };
        let traj = evolve(&params, &sw, &v0, t_end, &scheme).unwrap();
        assert_eq!(traj.final_dt, dt);
        energy_identity_residual(&traj, &wf).unwrap()
    };
    let r_coarse = run(&coarse, 8e-4, 240);
    let r_mid = run(&mid, 4e-4, 480);
    let r_fine = run(&finest, 2e-4, 960);
    let order1 = (r_coarse / r_mid).log2();
    let order2 = (r_mid / r_fine).log2();
    assert!(order1 >= 1.0, "first refinement order {order1:.2}");
    assert!(order2 >= 1.0, "second refinement order {order2:.2}");
    assert!(r_fine <= 1e-3, "finest residual {r_fine:.3e}");
    pass(
        "criterion 6 (energy identity refinement)",
        &format!(
            "residuals {r_coarse:.3e} -> {r_mid:.3e} -> {r_fine:.3e} (orders {order1:.2}, {order2:.2}), finest <= 1e-3"
        ),
    );
}

#[test]
fn criterion_07_stability_including_new_case() {
    // Base case.
    let (_, _, _, traj) = base_bump_run();
    let ratio_base = traj.sup_diff.last().unwrap() / traj.sup_diff[0];
    assert!(
        ratio_base <= 0.1,
        "base case ratio {ratio_base:.3e} exceeds 0.1"
    );

    // Newly covered range reached at its edge: v- = 2, v+ = -1, n = 4 gives
    // V- = -1 = v+ with V- + v+ < 0.
    let params = ProblemParams::new(4, 1.0, 1.0, 2.0, -1.0).unwrap();
    assert_eq!(params.v_minus_eff(), -1.0);
    assert!(params.v_minus_eff() + params.v_plus() < 0.0);
    let grid = evolution_grid();
    let sw = solve_stationary(&params, &grid, &StationarySolveOptions::default()).unwrap();
    let v0 = make_initial_data(&sw, &bump_spec(1e-2)).unwrap();
    let scheme = SchemeConfig {
        dt: 1.9e-4,
        theta: 0.5,
        snapshot_times: uniform_times(50.0, 100),
        ..Default::default()
    };
    let traj2 = evolve(&params, &sw, &v0, 50.0, &scheme).unwrap();
    let ratio_new = traj2.sup_diff.last().unwrap() / traj2.sup_diff[0];
    assert!(
        ratio_new <= 0.1,
        "new-case ratio {ratio_new:.3e} exceeds 0.1"
    );
    pass(
        "criterion 7 (nonlinear stability)",
        &format!("sup ratios at T=50: base {ratio_base:.2e}, steep-boundary case {ratio_new:.2e} (<= 0.1)"),
    );
}

#[test]
fn criterion_08_exponential_rate() {
    let (params, _, wf, traj) = base_bump_run();
    let (beta, gamma_adm) = admissible_beta_gamma(wf, params);
    assert!(beta > 0.0 && gamma_adm > 0.0);
    let series = traj.sup_diff_series();
    let fit = fit_exponential_rate(&series, (4.0, 20.0)).unwrap();
    assert!(
        fit.exponent >= 0.9 * gamma_adm,
        "fitted gamma {:.4} below 0.9 x {gamma_adm:.4}",
        fit.exponent
    );
    pass(
        "criterion 8 (exponential decay rate)",
        &format!(
            "gamma_fit {:.4} >= 0.9 * gamma_admissible {:.4} (beta {beta:.4}, c2 {:.4})",
            fit.exponent, gamma_adm, wf.c2
        ),
    );
}

#[test]
fn criterion_09_algebraic_rate() {
    let params = ProblemParams::new(4, 1.0, 1.0, 0.0, -1.0).unwrap();
    let grid = evolution_grid();
    let sw = solve_stationary(&params, &grid, &StationarySolveOptions::default()).unwrap();
    let spec = InitialDataSpec {
        family: InitialDataFamily::AlgebraicTail {
            p: 3.0,
            alpha: Some(2.0),
        },
        amplitude: 1e-2,
    };
    let v0 = make_initial_data(&sw, &spec).unwrap();
    let scheme = SchemeConfig {
        dt: 3.8e-4,
        theta: 0.5,
        snapshot_times: uniform_times(50.0, 250),
        ..Default::default()
    };
    let traj = evolve(&params, &sw, &v0, 50.0, &scheme).unwrap();
    let fit = fit_algebraic_rate(&traj.sup_diff_series(), (2.0, 30.0)).unwrap();
    assert!(
        fit.exponent <= -0.85,
        "fitted exponent {:.3} above -0.85",
        fit.exponent
    );
    assert!(fit.r_squared >= 0.95, "r^2 {:.4}", fit.r_squared);
    pass(
        "criterion 9 (algebraic decay rate)",
        &format!(
            "exponent {:.3} <= -0.85 with r^2 {:.4} >= 0.95 (curvature {:.3})",
            fit.exponent, fit.r_squared, fit.curvature
        ),
    );
}

#[test]
fn criterion_10_coefficient_bounds() {
    let (params, _, wf, _) = base_bump_run();
    let r0 = params.r0();
    let (beta_max, gamma_max) = admissible_beta_gamma(wf, params);
    for factor in [1.0, 0.5, 0.25, 0.1] {
        let beta = beta_max * factor;
        let gamma = gamma_max * factor;
        let report = coefficient_bounds(wf, params, beta, gamma);
        assert!(report.admissible, "beta {beta} should be admissible");
        assert!(report.a_beta_min_ok, "A bound fails at beta {beta}");
        assert!(report.b_beta_ok, "B bound fails at beta {beta}");
    }
    // Interior minimum of B at r = 2/beta against the closed form, for every
    // tested beta with the minimum inside the domain.
    for beta in [1.0, beta_max, 0.5] {
        let analytic = beta * (8.0 - beta * r0) / (8.0 * r0);
        let direct = b_beta(2.0 / beta, r0, beta);
        assert!(
            (direct - analytic).abs() <= 1e-12,
            "beta {beta}: {direct} vs {analytic}"
        );
        assert!(direct >= 3.0 * beta / (4.0 * r0));
    }
    assert!(
        (b_beta(2.0, 1.0, 1.0) - 7.0 / 8.0).abs() <= 1e-12,
        "reference minimum 7/8"
    );
    pass(
        "criterion 10 (coefficient bounds)",
        &format!(
            "pointwise A and B bounds hold to 1e-12 for four admissible betas; interior minimum matches beta(8 - beta r0)/(8 r0)"
        ),
    );
}

#[test]
fn criterion_11_zeroth_bound_stability() {
    let params = ProblemParams::new(4, 1.0, 1.0, 0.0, -1.0).unwrap();
    let fine = Arc::new(RadialGrid::geometric_from_first_spacing(1.0, 60.0, 1601, 2.2e-3).unwrap());
    let coarse = Arc::new(fine.coarsen().unwrap());
    let opts = StationarySolveOptions::default();
    let t_end = 10.0;
    let run = |grid: &Arc<RadialGrid>, amp: f64, dt: f64, snapshots: usize| -> f64 {
        let sw = solve_stationary(&params, grid, &opts).unwrap();
        let v0 = make_initial_data(&sw, &bump_spec(amp)).unwrap();
        let scheme = SchemeConfig {
            dt,
            theta: 0.5,
            snapshot_times: uniform_times(t_end, snapshots),
            ..Default::default()
        };
        let traj = evolve(&params, &sw, &v0, t_end, &scheme).unwrap();
        check_zeroth_order_bound(&traj).zeroth_bound_ratio
    };
    let r_coarse = run(&coarse, 1e-2, 8e-4, 50);
    let r_fine = run(&fine, 1e-2, 4e-4, 100);
    let r_half = run(&coarse, 5e-3, 8e-4, 50);
    let refine_shift = (r_coarse - r_fine).abs() / r_coarse.max(r_fine);
    let amp_shift = (r_coarse - r_half).abs() / r_coarse.max(r_half);
    assert!(refine_shift <= 0.10, "refinement shift {refine_shift:.3}");
    assert!(amp_shift <= 0.25, "amplitude shift {amp_shift:.3}");
    pass(
        "criterion 11 (zeroth-order bound stability)",
        &format!(
            "ratio {r_coarse:.4}: shifts {:.1}% under refinement (<= 10%), {:.1}% under amplitude halving (<= 25%)",
            100.0 * refine_shift,
            100.0 * amp_shift
        ),
    );
}

#[test]
fn criterion_12_verify_determinism() {
    let bin = env!("CARGO_BIN_EXE_exburg");
    let tmp = tempfile::tempdir().unwrap();
    let out1 = tmp.path().join("run1");
    let out2 = tmp.path().join("run2");
    let spawn = |out: &Path| {
        Command::new(bin)
            .args(["verify", "--out"])
            .arg(out)
            .stdout(std::process::Stdio::null())
            .spawn()
            .expect("spawn verify")
    };
    let mut child1 = spawn(&out1);
    let mut child2 = spawn(&out2);
    let status1 = child1.wait().unwrap();
    let status2 = child2.wait().unwrap();
    assert!(status1.success(), "first verify run failed");
    assert!(status2.success(), "second verify run failed");

    let mut names: Vec<String> = std::fs::read_dir(&out1)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in &names {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    pass(
        "criterion 12 (determinism)",
        &format!("verify run twice: {} files byte-identical", names.len()),
    );
}

/// Adaptive Simpson quadrature of the explicit constant-profile weight
/// integral; acceptance-side oracle, independent of the library integrators.
fn chi_constant_quadrature(r: f64, r0: f64, mu: f64, v_plus_abs: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let rate = v_plus_abs / mu;
    let span = 50.0 * mu / v_plus_abs;
    let f = move |s: f64| (2.0 / r0 - 1.0 / s) * (-rate * (s - r)).exp();
    let (a, b) = (r, r + span);
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(&f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), 1e-13, 48)
}
