//! Construction and verification of the energy-method weight function.
//!
//! The weight `chi` solves the linear equation
//!
//! ```text
//! chi' + (psi / mu) chi = f(r),
//! ```
//!
//! for a generator `f` that is negative at the inner boundary, strictly
//! decreasing, and has integrable derivative. Under those hypotheses the
//! weight is positive, bounded, and tends to `mu |f(inf)| / |v_plus|` at
//! infinity. Forward integration of the equation is unstable (perturbations
//! grow like `exp(|v_plus| r / mu)`), so the weight is constructed by
//! backward integration from the far-field limit, which damps the terminal
//! truncation error exponentially fast. The terminal value is imposed at the
//! stationary wave's far assessment radius, well past the grid, because the
//! limit is itself approached only at an `O(1/r)` rate.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fd;
use crate::grid::{Profile, RadialGrid};
use crate::ode::{self, Dopri5Options, OdeTrace};
use crate::problem::ProblemParams;
use crate::stationary::StationaryWave;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Generator `f` for the weight equation together with the cached quantities
/// the construction needs. Hypotheses: `f' < 0`, `f(r0) < 0`, and
/// `∫ |f'| < ∞`; they imply `lim |f| = |f(r0)| + ||f'||_L1` exists in (0, ∞).
#[derive(Clone)]
pub struct WeightGenerator {
    f: RealFn,
    f_prime: RealFn,
    f_at_r0: f64,
    l1_norm_fprime: f64,
    lim_abs_f: f64,
    label: String,
}

impl fmt::Debug for WeightGenerator {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.debug_struct("WeightGenerator")
            .field("label", &self.label)
            .field("f_at_r0", &self.f_at_r0)
            .field("l1_norm_fprime", &self.l1_norm_fprime)
            .field("lim_abs_f", &self.lim_abs_f)
            .finish()
    }
}

impl WeightGenerator {
    /// Wrap a caller-supplied generator. `l1_norm_fprime` and `lim_abs_f`
    /// must be the analytic values for the supplied functions; they are
    /// cross-checked against samples when a weight is built.
    pub fn new(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        r0: f64,
        l1_norm_fprime: f64,
        lim_abs_f: f64,
        label: impl Into<String>,
    ) -> Self {
        let f_at_r0 = f(r0);
        Self {
            f: Arc::new(f),
            f_prime: Arc::new(f_prime),
            f_at_r0,
            l1_norm_fprime,
            lim_abs_f,
            label: label.into(),
        }
    }

    pub fn f(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    pub fn f_prime(&self, r: f64) -> f64 {
        (self.f_prime)(r)
    }

    pub fn f_at_r0(&self) -> f64 {
        self.f_at_r0
    }

    pub fn l1_norm_fprime(&self) -> f64 {
        self.l1_norm_fprime
    }

    pub fn lim_abs_f(&self) -> f64 {
        self.lim_abs_f
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Sample the generator hypotheses on the grid: `f' < 0` everywhere,
    /// `f(r0) < 0`, finite derivative norm, and consistency of the cached
    /// limit with `|f(r0)| + ||f'||_L1`.
    pub fn verify_hypotheses(&self, grid: &RadialGrid) -> Result<()> {
        if !(self.f_at_r0 < 0.0) {
            return Err(Error::Precondition(format!(
                "generator must be negative at r0, got f(r0) = {}",
                self.f_at_r0
            )));
        }
        if !(self.l1_norm_fprime.is_finite() && self.l1_norm_fprime > 0.0) {
            return Err(Error::Precondition(
                "generator derivative must have a finite positive L1 norm".into(),
            ));
        }
        for &r in grid.nodes() {
            if !(self.f_prime(r) < 0.0) {
                return Err(Error::Precondition(format!(
                    "generator must be strictly decreasing, f'({r}) = {}",
                    self.f_prime(r)
                )));
            }
        }
        let expected_lim = self.f_at_r0.abs() + self.l1_norm_fprime;
        if (self.lim_abs_f - expected_lim).abs() > 1e-9 * expected_lim.max(1.0) {
            return Err(Error::Precondition(format!(
                "cached far-field limit {} inconsistent with |f(r0)| + ||f'||_L1 = {}",
                self.lim_abs_f, expected_lim
            )));
        }
        Ok(())
    }
}

/// The reference generator `f(r) = 1/r - 2/r0`, with `f' = -1/r^2`,
/// `f(r0) = -1/r0`, `||f'||_L1 = 1/r0`, and far-field limit `2/r0`.
pub fn default_generator(params: &ProblemParams) -> WeightGenerator {
    let r0 = params.r0();
    WeightGenerator::new(
        move |r| 1.0 / r - 2.0 / r0,
        |r| -1.0 / (r * r),
        r0,
        1.0 / r0,
        2.0 / r0,
        "reciprocal",
    )
}

/// The one-parameter family `f(r) = (r^{-2 eps} - r0^{-2 eps}) / (2 eps) - 1`
/// with `f'(r) = -r^{-2 eps - 1}`. Requires `eps > 0`; the family degenerates
/// as `eps -> 0`.
pub fn epsilon_generator(params: &ProblemParams, eps: f64) -> Result<WeightGenerator> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!(
            "epsilon generator requires eps > 0, got {eps}"
        )));
    }
    let r0 = params.r0();
    let r0_pow = r0.powf(-2.0 * eps);
    let l1 = r0_pow / (2.0 * eps);
    Ok(WeightGenerator::new(
        move |r| (r.powf(-2.0 * eps) - r0_pow) / (2.0 * eps) - 1.0,
        move |r| -r.powf(-2.0 * eps - 1.0),
        r0,
        l1,
        1.0 + l1,
        format!("power-law eps={eps}"),
    ))
}

/// Positive bounded weight on a grid, with measured bounds and residuals.
#[derive(Debug, Clone)]
pub struct WeightFunction {
    pub chi: Profile,
    /// Measured min of `chi` over the grid.
    pub c1: f64,
    /// Measured max of `chi` over the grid.
    pub c2: f64,
    /// Max grid residual of the weight equation.
    pub ode_residual_max: f64,
    /// Terminal value imposed at the build radius: `mu lim|f| / |v_plus|`.
    pub farfield_value: f64,
    /// Radius where the terminal value was imposed.
    pub build_radius: f64,
    generator: WeightGenerator,
    tail: OdeTrace,
}

impl WeightFunction {
    pub fn generator(&self) -> &WeightGenerator {
        &self.generator
    }

    /// Evaluate `chi` anywhere in `[r0, build_radius]`.
    pub fn chi_at(&self, r: f64) -> f64 {
        self.tail.eval(r)
    }
}

/// Build the weight for `gen` over the stationary wave's grid by backward
/// integration from the far-field limit.
pub fn build_weight(
    sw: &StationaryWave,
    gen: &WeightGenerator,
    grid: &Arc<RadialGrid>,
) -> Result<WeightFunction> {
    gen.verify_hypotheses(grid)?;
    if (grid.r0() - sw.psi.grid().r0()).abs() > 1e-12 {
        return Err(Error::Precondition(
            "weight grid must share the stationary wave's inner boundary".into(),
        ));
    }
    if grid.r_max() > sw.far_radius {
        return Err(Error::Precondition(
            "weight grid extends past the stationary wave's assessed range".into(),
        ));
    }
    let params = *sw.params();
    let mu = params.mu();
    let build_radius = sw.far_radius;
    let terminal = mu * gen.lim_abs_f() / params.v_plus().abs();

    // Backward pass: waypoints descend from the build radius through the grid.
    let mut waypoints: Vec<f64> = Vec::with_capacity(grid.len() + 1);
    if build_radius > grid.r_max() {
        waypoints.push(build_radius);
    }
    waypoints.extend(grid.nodes().iter().rev());
    let f = gen.clone();
    let rhs = move |r: f64, chi: f64| f.f(r) - sw.psi_at(r) / mu * chi;
    let opts = Dopri5Options {
        rtol: 1e-12,
        atol: 1e-13,
        max_step: 10.0,
        guard_abs: None,
    };
    let sol = ode::integrate(rhs, terminal, &waypoints, &opts)?;
    let skip = waypoints.len() - grid.len();
    let mut chi_values: Vec<f64> = sol.at_waypoints[skip..].to_vec();
    chi_values.reverse();

    let c1 = chi_values.iter().copied().fold(f64::INFINITY, f64::min);
    let c2 = chi_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(c1 > 0.0) {
        return Err(Error::Positivity { min_chi: c1 });
    }
    let chi = Profile::new(grid.clone(), chi_values)?;
    let mut wf = WeightFunction {
        chi,
        c1,
        c2,
        ode_residual_max: 0.0,
        farfield_value: terminal,
        build_radius,
        generator: gen.clone(),
        tail: sol.trace,
    };
    wf.ode_residual_max = verify_weight_properties(&wf, sw).ode_residual;
    Ok(wf)
}

/// Verification report for a constructed weight.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct WeightReport {
    /// Strict positivity of the sampled weight.
    pub positivity: bool,
    /// Max interior residual of `chi' + (psi/mu) chi - f`.
    pub ode_residual: f64,
    /// `|(chi' + (psi/mu) chi)(r0) - f(r0)|`.
    pub boundary_value_error: f64,
    /// Max interior residual of `(chi' + (psi/mu) chi)' - f'`, checked in
    /// this form to avoid second differences of `chi` itself.
    pub second_identity_residual: f64,
}

pub fn verify_weight_properties(wf: &WeightFunction, sw: &StationaryWave) -> WeightReport {
    let grid = wf.chi.grid();
    let chi = wf.chi.values();
    let psi = sw.psi.values();
    let mu = sw.params().mu();
    let gen = wf.generator();
    let n = grid.len();

    let dchi = fd::derivative(grid, chi, 1, 5);
    let g: Vec<f64> = (0..n).map(|i| dchi[i] + psi[i] / mu * chi[i]).collect();
    let ode_residual = (1..n - 1)
        .map(|i| (g[i] - gen.f(grid.nodes()[i])).abs())
        .fold(0.0, f64::max);
    let boundary_value_error = (g[0] - gen.f_at_r0()).abs();
    let dg = fd::derivative(grid, &g, 1, 5);
    let second_identity_residual = (1..n - 1)
        .map(|i| (dg[i] - gen.f_prime(grid.nodes()[i])).abs())
        .fold(0.0, f64::max);
    WeightReport {
        positivity: wf.chi.values().iter().all(|&c| c > 0.0),
        ode_residual,
        boundary_value_error,
        second_identity_residual,
    }
}

/// `||psi - v_plus||_L1` over `[r0, inf)`: trapezoid on the grid plus the
/// analytic tail estimate `C / r_max` from the measured quadratic-decay
/// coefficient.
pub fn psi_l1_gap(sw: &StationaryWave) -> f64 {
    let grid = sw.psi.grid();
    let vp = sw.params().v_plus();
    let gaps: Vec<f64> = sw.psi.values().iter().map(|&p| (p - vp).abs()).collect();
    let on_grid = fd::trapezoid(grid, &gaps);
    on_grid + sw.tail_coefficient / grid.r_max()
}

/// Max over the grid of the integrating factor
/// `A(r) = exp((1/mu) ∫_{r0}^r psi)`, together with its theoretical bound
/// `exp(||psi - v_plus||_L1 / mu)`. The construction is consistent only if
/// the measured max stays below the bound.
pub fn integrating_factor_bound(sw: &StationaryWave) -> (f64, f64) {
    let grid = sw.psi.grid();
    let mu = sw.params().mu();
    let cum = fd::cumtrapz(grid, sw.psi.values());
    let max_a = cum.iter().map(|&s| (s / mu).exp()).fold(0.0f64, f64::max);
    let bound = (psi_l1_gap(sw) / mu).exp();
    (max_a, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::{solve_stationary, StationarySolveOptions};
    use approx::assert_abs_diff_eq;

    fn solved(
        n: u32,
        v_minus: f64,
        v_plus: f64,
    ) -> (ProblemParams, Arc<RadialGrid>, StationaryWave) {
        let params = ProblemParams::new(n, 1.0, 1.0, v_minus, v_plus).unwrap();
        let grid = Arc::new(
            RadialGrid::geometric_from_first_spacing(1.0, 60.0, 2000, 4e-4).unwrap(),
        );
        let sw = solve_stationary(&params, &grid, &StationarySolveOptions::default()).unwrap();
        (params, grid, sw)
    }

    #[test]
    fn default_generator_formulas() {
        let params = ProblemParams::new(4, 1.0, 1.0, 0.0, -1.0).unwrap();
        let gen = default_generator(&params);
        assert_eq!(gen.f_at_r0(), -1.0);
        assert_eq!(gen.f_prime(2.0), -0.25);
        assert_eq!(gen.lim_abs_f(), 2.0);
        assert_eq!(gen.l1_norm_fprime(), 1.0);

        let params = ProblemParams::new(4, 1.0, 2.0, 0.0, -1.0).unwrap();
        let gen = default_generator(&params);
        assert_eq!(gen.f_at_r0(), -0.5);
    }

    #[test]
    fn epsilon_generator_matches_default_at_half() {
        // eps = 1/2 with r0 = 1 reduces to 1/r - 2.
        let params = ProblemParams::new(4, 1.0, 1.0, 0.0, -1.0).unwrap();
        let gen = epsilon_generator(&params, 0.5).unwrap();
        let base = default_generator(&params);
        for r in [1.0, 1.7, 3.0, 10.0, 50.0] {
            assert_abs_diff_eq!(gen.f(r), base.f(r), epsilon = 1e-12);
            assert_abs_diff_eq!(gen.f_prime(r), base.f_prime(r), epsilon = 1e-12);
        }
        assert_eq!(gen.lim_abs_f(), 2.0);
    }

    #[test]
    fn epsilon_zero_is_rejected() {
        let params = ProblemParams::new(4, 1.0, 1.0, 0.0, -1.0).unwrap();
        assert!(epsilon_generator(&params, 0.0).is_err());
        assert!(epsilon_generator(&params, -0.2).is_err());
    }

    #[test]
    fn epsilon_generator_limit_matches_quadrature() {
        // lim |f| should equal |f(r0)| + integral of |f'|.
        let params = ProblemParams::new(4, 1.0, 1.0, 0.0, -1.0).unwrap();
        let eps = 0.25;
        let gen = epsilon_generator(&params, eps).unwrap();
        // Composite Simpson for ∫_1^R r^{-1.5} dr plus the analytic remainder
        // beyond R (the integrand varies fastest near r = 1, so keep h small
        // and push the slow tail into the closed-form remainder).
        let big_r = 100.0;
        let m = 20000;
        let h = (big_r - 1.0) / m as f64;
        let f = |r: f64| r.powf(-2.0 * eps - 1.0);
        let mut s = f(1.0) + f(big_r);
        for i in 1..m {
            let r = 1.0 + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(r);
        }
        let integral = s * h / 3.0 + big_r.powf(-2.0 * eps) / (2.0 * eps);
        assert_abs_diff_eq!(gen.l1_norm_fprime(), integral, epsilon = 1e-6);
        assert_abs_diff_eq!(gen.lim_abs_f(), 1.0 + integral, epsilon = 1e-6);
    }

    #[test]
    fn weight_build_meets_tolerances() {
        let (params, grid, sw) = solved(4, 0.0, -1.0);
        let gen = default_generator(&params);
        let wf = build_weight(&sw, &gen, &grid).unwrap();

        assert_eq!(wf.farfield_value, 2.0);
        assert!(wf.c1 > 1e-3, "c1 = {}", wf.c1);
        assert!(wf.c2 < 10.0, "c2 = {}", wf.c2);

        let report = verify_weight_properties(&wf, &sw);
        assert!(report.positivity);
        assert!(report.ode_residual <= 1e-8, "residual {}", report.ode_residual);
        assert!(
            report.boundary_value_error <= 1e-6,
            "boundary {}",
            report.boundary_value_error
        );
        assert!(
            report.second_identity_residual <= 1e-6,
            "second identity {}",
            report.second_identity_residual
        );
    }

    #[test]
    fn residual_vanishes_under_refinement() {
        let params = ProblemParams::new(4, 1.0, 1.0, 0.0, -1.0).unwrap();
        let gen = default_generator(&params);
        let opts = StationarySolveOptions::default();
        let residual_at = |nodes: usize, h0: f64| {
            let grid = Arc::new(
                RadialGrid::geometric_from_first_spacing(1.0, 60.0, nodes, h0).unwrap(),
            );
            let sw = solve_stationary(&params, &grid, &opts).unwrap();
            build_weight(&sw, &gen, &grid).unwrap().ode_residual_max
        };
        let coarse = residual_at(1000, 8e-4);
        let fine = residual_at(2000, 4e-4);
        assert!(
            coarse >= 4.0 * fine,
            "weight residual did not refine: {coarse:.3e} -> {fine:.3e}"
        );
    }

    #[test]
    fn shifted_weight_fails_residual_check() {
        let (params, grid, sw) = solved(4, 0.0, -1.0);
        let gen = default_generator(&params);
        let mut wf = build_weight(&sw, &gen, &grid).unwrap();
        for v in wf.chi.values_mut() {
            *v += 1.0;
        }
        let report = verify_weight_properties(&wf, &sw);
        assert!(report.ode_residual > 0.1, "residual {}", report.ode_residual);
    }

    #[test]
    fn far_limit_is_approached_on_the_extended_domain() {
        let (params, grid, sw) = solved(4, 0.0, -1.0);
        let gen = default_generator(&params);
        let wf = build_weight(&sw, &gen, &grid).unwrap();
        // Imposed exactly at the build radius, emergent at half of it.
        assert_eq!(wf.chi_at(wf.build_radius), wf.farfield_value);
        let half = wf.chi_at(wf.build_radius / 2.0);
        assert!(
            (half - wf.farfield_value).abs() <= 1e-3,
            "gap at half radius: {}",
            (half - wf.farfield_value).abs()
        );
    }

    #[test]
    fn integrating_factor_stays_below_bound() {
        let (_, _grid, sw) = solved(5, -0.5, -1.0);
        let (max_a, bound) = integrating_factor_bound(&sw);
        assert!(
            max_a <= bound * (1.0 + 1e-9),
            "A max {max_a} exceeds bound {bound}"
        );
    }

    #[test]
    fn bad_generators_are_rejected_before_construction() {
        let (params, grid, sw) = solved(4, 0.0, -1.0);
        let inconsistent = WeightGenerator::new(
            |r| 1.0 / r - 2.0,
            |r| -1.0 / (r * r),
            params.r0(),
            1.0,
            5.0, // inconsistent with |f(r0)| + ||f'||
            "inconsistent",
        );
        assert!(matches!(
            build_weight(&sw, &inconsistent, &grid),
            Err(Error::Precondition(_))
        ));
        let increasing =
            WeightGenerator::new(|r| r, |_| 1.0, params.r0(), 1.0, 2.0, "increasing");
        assert!(matches!(
            build_weight(&sw, &increasing, &grid),
            Err(Error::Precondition(_))
        ));
    }
}
