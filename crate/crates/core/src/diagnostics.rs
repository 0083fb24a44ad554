//! Measurements that turn the stability and decay statements into numbers:
//! weighted Sobolev norms, the integrated energy identity, coefficient
//! bounds for the exponential-decay machinery, and decay-rate fits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::fd;
use crate::grid::Profile;
use crate::problem::ProblemParams;
use crate::stationary::least_squares_line;
use crate::weight::WeightFunction;

/// `<r> = sqrt(1 + r^2)`.
fn japanese_bracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

/// Weight applied to the squared integrand of a norm.
#[derive(Debug, Clone)]
pub enum NormWeight {
    Plain,
    /// Pointwise multiplication by a positive weight profile on the same grid.
    Chi(Profile),
    /// `<r>^alpha`, alpha >= 0.
    Algebraic { alpha: f64 },
    /// `exp(beta r)`, beta > 0.
    Exponential { beta: f64 },
}

#[derive(Debug, Clone)]
pub struct NormSpec {
    pub weight: NormWeight,
    /// Sobolev order: derivatives 0..=order enter the squared integrand.
    pub derivative_order: u8,
}

impl NormSpec {
    pub fn plain(order: u8) -> Self {
        Self {
            weight: NormWeight::Plain,
            derivative_order: order,
        }
    }

    pub fn algebraic(alpha: f64, order: u8) -> Self {
        Self {
            weight: NormWeight::Algebraic { alpha },
            derivative_order: order,
        }
    }

    pub fn exponential(beta: f64, order: u8) -> Self {
        Self {
            weight: NormWeight::Exponential { beta },
            derivative_order: order,
        }
    }
}

/// Weighted Sobolev norm by trapezoid quadrature:
/// `sqrt( Σ_{j<=k} ∫ weight(r) (∂^j p)^2 dr )`.
///
/// Derivatives are taken with centered stencils and one-sided closures at the
/// ends. The exponential weight is refused once `beta * r_max` exceeds 600
/// (the weight would overflow, which signals a mis-sized domain rather than a
/// meaningful norm).
pub fn weighted_norm(p: &Profile, spec: &NormSpec) -> Result<f64> {
    let grid = p.grid();
    match &spec.weight {
        NormWeight::Algebraic { alpha } => {
            if !(*alpha >= 0.0) {
                return Err(Error::InvalidParams("alpha must be nonnegative".into()));
            }
        }
        NormWeight::Exponential { beta } => {
            if !(*beta > 0.0) {
                return Err(Error::InvalidParams("beta must be positive".into()));
            }
            let product = beta * grid.r_max();
            if product > 600.0 {
                return Err(Error::OverflowGuard { product });
            }
        }
        NormWeight::Chi(chi) => {
            if chi.grid() != grid {
                return Err(Error::Precondition(
                    "weight profile must live on the norm's grid".into(),
                ));
            }
        }
        NormWeight::Plain => {}
    }
    let n = grid.len();
    let weight_at = |i: usize| -> f64 {
        let r = grid.nodes()[i];
        match &spec.weight {
            NormWeight::Plain => 1.0,
            NormWeight::Chi(chi) => chi.values()[i],
            NormWeight::Algebraic { alpha } => japanese_bracket(r).powf(*alpha),
            NormWeight::Exponential { beta } => (beta * r).exp(),
        }
    };
    let mut total = 0.0;
    let mut current: Vec<f64> = p.values().to_vec();
    for order in 0..=spec.derivative_order {
        if order > 0 {
            current = fd::derivative(grid, p.values(), order as usize, 5);
        }
        let integrand: Vec<f64> = (0..n).map(|i| weight_at(i) * current[i] * current[i]).collect();
        total += fd::trapezoid(grid, &integrand);
    }
    Ok(total.sqrt())
}

/// Measured constant in the sup-interpolation inequality
/// `sup|g| <= C ||g||^{1/2} ||g'||^{1/2}` for profiles vanishing at the far
/// end; the analytic constant is sqrt(2).
pub fn interpolation_ratio(g: &Profile) -> f64 {
    let grid = g.grid();
    let sup = g.max_abs();
    if sup == 0.0 {
        return 0.0;
    }
    let l2 = weighted_norm(g, &NormSpec::plain(0)).expect("plain norm");
    let dg = fd::derivative(grid, g.values(), 1, 5);
    let sq: Vec<f64> = dg.iter().map(|x| x * x).collect();
    let l2d = fd::trapezoid(grid, &sq).sqrt();
    sup / (l2.sqrt() * l2d.sqrt())
}

/// Energy accounting for a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    /// Max normalized residual of the integrated energy identity over
    /// snapshot intervals (None when no weight was supplied).
    pub identity_residual: Option<f64>,
    /// LHS of the zeroth-order bound over `||w0||^2`.
    pub zeroth_bound_ratio: f64,
    /// LHS of the full second-order a priori bound over `||w0||_{H^2}^2`.
    pub apriori_ratio: f64,
    /// `w(t, r0)^2` samples per snapshot.
    pub boundary_series: Vec<f64>,
    /// Set when the initial anti-derivative vanishes; ratios are reported as
    /// 0 by convention instead of 0/0.
    pub degenerate: bool,
}

/// Zeroth-order energy accounting:
/// `sup_t ||w||^2 + mu ∫ (||w/r||^2 + ||w_r||^2 + w(r0)^2 / r0) dtau` over
/// `||w0||^2`, with time integrals by trapezoid over snapshots. Also fills
/// the second-order variant (`apriori_ratio`) with full Sobolev norms.
pub fn check_zeroth_order_bound(traj: &Trajectory) -> EnergyReport {
    let mu = traj.params.mu();
    let r0 = traj.grid().r0();
    let boundary_series: Vec<f64> = traj.w_at_r0.iter().map(|w| w * w).collect();

    let w0_sq = traj.l2_w[0] * traj.l2_w[0];
    let degenerate = w0_sq == 0.0;

    let sup_w_sq = traj.l2_w.iter().map(|x| x * x).fold(0.0, f64::max);
    let integrand: Vec<f64> = (0..traj.times.len())
        .map(|k| {
            traj.l2_w_over_r[k] * traj.l2_w_over_r[k]
                + traj.l2_w_r[k] * traj.l2_w_r[k]
                + boundary_series[k] / r0
        })
        .collect();
    let time_integral = trapz_time(&traj.times, &integrand);
    let zeroth_bound_ratio = if degenerate {
        0.0
    } else {
        (sup_w_sq + mu * time_integral) / w0_sq
    };

    // Second-order variant with discrete H^2 norms.
    let h2 = |p: &Profile| weighted_norm(p, &NormSpec::plain(2)).expect("H2 norm");
    let h2_series: Vec<f64> = traj.snapshots.iter().map(|s| h2(&s.w)).collect();
    let w0_h2_sq = h2_series[0] * h2_series[0];
    let sup_h2_sq = h2_series.iter().map(|x| x * x).fold(0.0, f64::max);
    let wr_h2_sq: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| {
            let grid = s.w.grid();
            let wr = fd::derivative(grid, s.w.values(), 1, 5);
            let wr_profile = Profile::new(grid.clone(), wr).expect("finite derivative");
            let x = h2(&wr_profile);
            x * x
        })
        .collect();
    let integrand2: Vec<f64> = (0..traj.times.len())
        .map(|k| {
            traj.l2_w_over_r[k] * traj.l2_w_over_r[k] + wr_h2_sq[k] + boundary_series[k]
        })
        .collect();
    let apriori_ratio = if degenerate || w0_h2_sq == 0.0 {
        0.0
    } else {
        (sup_h2_sq + trapz_time(&traj.times, &integrand2)) / w0_h2_sq
    };

    EnergyReport {
        identity_residual: None,
        zeroth_bound_ratio,
        apriori_ratio,
        boundary_series,
        degenerate,
    }
}

fn trapz_time(times: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 1..times.len() {
        acc += 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
    }
    acc
}

/// Max over snapshot intervals of the normalized residual of the integrated
/// energy identity
///
/// ```text
/// d/dt (1/2 ∫ chi w^2) + mu/2 ∫ w^2/r^2 + mu ∫ chi w_r^2
///     + mu/(2 r0) w(t, r0)^2 = -1/2 ∫ chi w w_r^2,
/// ```
///
/// where the flux term has collapsed to the boundary contribution because
/// `w_r(t, r0) = 0`. Each interval compares the centered energy difference
/// against the trapezoid average of the remaining terms; the max interval
/// defect is normalized by the largest term magnitude seen over the run (a
/// per-interval scale would divide the late-time discretization floor by
/// terms that have already decayed to nothing).
pub fn energy_identity_residual(traj: &Trajectory, wf: &WeightFunction) -> Result<f64> {
    let k = traj.snapshots.len();
    if k < 2 {
        return Err(Error::Precondition("need at least two snapshots".into()));
    }
    let grid = traj.grid();
    if wf.chi.grid() != grid {
        return Err(Error::Precondition(
            "weight must live on the trajectory grid".into(),
        ));
    }
    let mu = traj.params.mu();
    let chi = wf.chi.values();
    let r0 = grid.r0();
    let nodes = grid.nodes();
    let n = grid.len();

    // Per-snapshot ingredients.
    let mut energy = Vec::with_capacity(k);
    let mut dissipation = Vec::with_capacity(k);
    let mut source = Vec::with_capacity(k);
    let mut boundary = Vec::with_capacity(k);
    for snap in &traj.snapshots {
        let w = snap.w.values();
        let wr = fd::derivative(grid, w, 1, 5);
        let e: Vec<f64> = (0..n).map(|i| 0.5 * chi[i] * w[i] * w[i]).collect();
        energy.push(fd::trapezoid(grid, &e));
        let d: Vec<f64> = (0..n)
            .map(|i| {
                let r = nodes[i];
                0.5 * w[i] * w[i] / (r * r) + chi[i] * wr[i] * wr[i]
            })
            .collect();
        dissipation.push(fd::trapezoid(grid, &d));
        let s: Vec<f64> = (0..n)
            .map(|i| -0.5 * chi[i] * w[i] * wr[i] * wr[i])
            .collect();
        source.push(fd::trapezoid(grid, &s));
        boundary.push(w[0] * w[0] / (2.0 * r0));
    }

    Ok(energy_balance_residual(
        &traj.times,
        &energy,
        &dissipation,
        &boundary,
        &source,
        mu,
    ))
}

fn energy_balance_residual(
    times: &[f64],
    energy: &[f64],
    dissipation: &[f64],
    boundary: &[f64],
    source: &[f64],
    mu: f64,
) -> f64 {
    let mut worst_defect = 0.0f64;
    let mut scale = 0.0f64;
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        let de = (energy[k] - energy[k - 1]) / dt;
        let avg = |xs: &[f64]| 0.5 * (xs[k] + xs[k - 1]);
        let diss = mu * avg(dissipation);
        let bnd = mu * avg(boundary);
        let src = avg(source);
        worst_defect = worst_defect.max((de + diss + bnd - src).abs());
        scale = scale.max(de.abs()).max(diss.abs()).max(bnd.abs()).max(src.abs());
    }
    if scale > 0.0 {
        worst_defect / scale
    } else {
        0.0
    }
}

/// Per-interval decay of the weighted energy with the cubic source dropped;
/// all entries should be nonpositive for small data.
pub fn weighted_energy_decrements(traj: &Trajectory, wf: &WeightFunction) -> Vec<f64> {
    let grid = traj.grid();
    let chi = wf.chi.values();
    let n = grid.len();
    let energies: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|snap| {
            let w = snap.w.values();
            let e: Vec<f64> = (0..n).map(|i| 0.5 * chi[i] * w[i] * w[i]).collect();
            fd::trapezoid(grid, &e)
        })
        .collect();
    energies.windows(2).map(|pair| pair[1] - pair[0]).collect()
}

/// Report for the coefficient bounds entering the exponential-decay estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoefficientBoundsReport {
    /// Whether `(beta, gamma)` satisfies the admissibility window computed
    /// with the measured (and 1% inflated) sup of the weight.
    pub admissible: bool,
    /// Pointwise `A_beta(r) >= beta / (2 <r0>)` over the grid.
    pub a_beta_min_ok: bool,
    /// Pointwise `B_beta(r) >= max(3 beta / (4 r0), beta^2 chi(r))`.
    pub b_beta_ok: bool,
    pub beta: f64,
    pub gamma: f64,
    /// Measured min over the grid of `B_beta`.
    pub min_b_beta: f64,
    /// Analytic interior minimum `beta (8 - beta r0) / (8 r0)` of `B_beta`.
    pub analytic_min_b_beta: f64,
}

/// `A_beta(r) = <r> / (2 r^2) + beta (r / <r>) (1/r0 - 1/(2r))`.
pub fn a_beta(r: f64, r0: f64, beta: f64) -> f64 {
    let br = japanese_bracket(r);
    br / (2.0 * r * r) + beta * (r / br) * (1.0 / r0 - 1.0 / (2.0 * r))
}

/// `B_beta(r) = 1 / (2 r^2) + beta (1/r0 - 1/(2r))`.
pub fn b_beta(r: f64, r0: f64, beta: f64) -> f64 {
    1.0 / (2.0 * r * r) + beta * (1.0 / r0 - 1.0 / (2.0 * r))
}

/// Largest admissible `(beta, gamma)` for a measured weight sup, with the 1%
/// safety inflation applied to the grid max:
/// `beta <= min(2/r0, 8 / ((8 c2 + 1) r0))` and
/// `gamma <= 3 mu beta / (8 r0 c2)`.
pub fn admissible_beta_gamma(wf: &WeightFunction, params: &ProblemParams) -> (f64, f64) {
    let c2 = wf.c2 * 1.01;
    let r0 = params.r0();
    let beta = (2.0 / r0).min(8.0 / ((8.0 * c2 + 1.0) * r0));
    let gamma = 3.0 * params.mu() * beta / (8.0 * r0 * c2);
    (beta, gamma)
}

const POINTWISE_TOL: f64 = 1e-12;

/// Check the admissibility window and the two pointwise coefficient bounds
/// for a given `(beta, gamma)`.
pub fn coefficient_bounds(
    wf: &WeightFunction,
    params: &ProblemParams,
    beta: f64,
    gamma: f64,
) -> CoefficientBoundsReport {
    let r0 = params.r0();
    let (beta_max, _) = admissible_beta_gamma(wf, params);
    let gamma_max = 3.0 * params.mu() * beta / (8.0 * r0 * wf.c2 * 1.01);
    let admissible = beta > 0.0 && beta <= beta_max && gamma > 0.0 && gamma <= gamma_max;

    let grid = wf.chi.grid();
    let mut a_ok = true;
    let mut b_ok = true;
    let mut min_b = f64::INFINITY;
    let a_floor = beta / (2.0 * japanese_bracket(r0));
    for (i, &r) in grid.nodes().iter().enumerate() {
        let a = a_beta(r, r0, beta);
        if a < a_floor - POINTWISE_TOL {
            a_ok = false;
        }
        let b = b_beta(r, r0, beta);
        min_b = min_b.min(b);
        let floor = (3.0 * beta / (4.0 * r0)).max(beta * beta * wf.chi.values()[i]);
        if b < floor - POINTWISE_TOL {
            b_ok = false;
        }
    }
    CoefficientBoundsReport {
        admissible,
        a_beta_min_ok: a_ok,
        b_beta_ok: b_ok,
        beta,
        gamma,
        min_b_beta: min_b,
        analytic_min_b_beta: beta * (8.0 - beta * r0) / (8.0 * r0),
    }
}

/// Kind of decay law fitted to a time series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RateKind {
    Algebraic,
    Exponential,
}

/// Result of a decay-rate fit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    /// Algebraic: slope of `log y` vs `log(1+t)` (negative for decay).
    /// Exponential: fitted rate `gamma` (positive for decay).
    pub exponent: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub kind: RateKind,
    /// Max deviation (in log units) of the quadratic term of a log-log
    /// parabola fit; large values mean the series is not a power law.
    pub curvature: f64,
    /// Set when the fitted decay rate is indistinguishable from zero.
    pub non_decaying: bool,
    pub samples: usize,
}

const MIN_SAMPLES: usize = 8;
const CURVATURE_THRESHOLD: f64 = 0.5;

fn window_samples(series: &[(f64, f64)], window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (t_lo, t_hi) = window;
    if !(t_lo < t_hi) {
        return Err(Error::InvalidParams("window must have t_lo < t_hi".into()));
    }
    let samples: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, y)| t >= t_lo && t <= t_hi && y > 0.0 && y.is_finite())
        .collect();
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientWindow {
            found: samples.len(),
            need: MIN_SAMPLES,
            t_lo,
            t_hi,
        });
    }
    Ok(samples)
}

/// Max deviation contributed by the quadratic term of a least-squares
/// parabola through `(x, y)`, over the x-range (in y units).
fn quadratic_deviation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let xc: Vec<f64> = xs.iter().map(|x| x - mean_x).collect();
    // Normal equations for y = a + b xc + c xc^2.
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    let (mut sy, mut sxy, mut sx2y) = (0.0, 0.0, 0.0);
    for (x, y) in xc.iter().zip(ys) {
        let x2 = x * x;
        s1 += x;
        s2 += x2;
        s3 += x2 * x;
        s4 += x2 * x2;
        sy += y;
        sxy += x * y;
        sx2y += x2 * y;
    }
    // Solve the symmetric 3x3 system by elimination.
    let m = [[n, s1, s2], [s1, s2, s3], [s2, s3, s4]];
    let rhs = [sy, sxy, sx2y];
    let det = |m: &[[f64; 3]; 3]| -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d.abs() < 1e-300 {
        return 0.0;
    }
    let mut mc = m;
    for row in 0..3 {
        mc[row][2] = rhs[row];
    }
    let c = det(&mc) / d;
    let half_span = 0.5 * (xc.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
        - xc.iter().fold(f64::INFINITY, |m, &x| m.min(x)));
    (c * half_span * half_span).abs()
}

/// Fit `y ~ C (1+t)^exponent` on the window by least squares in log-log
/// coordinates. Rejects windows with fewer than 8 positive samples and
/// series with visible log-log curvature (those call for an exponential fit).
pub fn fit_algebraic_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let samples = window_samples(series, window)?;
    let xs: Vec<f64> = samples.iter().map(|(t, _)| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, y)| y.ln()).collect();
    let curvature = quadratic_deviation(&xs, &ys);
    if curvature > CURVATURE_THRESHOLD {
        return Err(Error::CurvatureReject {
            statistic: curvature,
            threshold: CURVATURE_THRESHOLD,
        });
    }
    let pts: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
    let (slope, _, r2) = least_squares_line(&pts);
    Ok(RateFit {
        exponent: slope,
        window,
        r_squared: r2,
        kind: RateKind::Algebraic,
        curvature,
        non_decaying: slope >= -1e-10,
        samples: pts.len(),
    })
}

/// Fit `y ~ C exp(-gamma t)` on the window by least squares of `log y`
/// against `t`; the returned exponent is the decay rate `gamma`.
pub fn fit_exponential_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let samples = window_samples(series, window)?;
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(t, y)| (t, y.ln())).collect();
    let xs: Vec<f64> = pts.iter().map(|(x, _)| *x).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, y)| *y).collect();
    let curvature = quadratic_deviation(&xs, &ys);
    let (slope, _, r2) = least_squares_line(&pts);
    let gamma = -slope;
    Ok(RateFit {
        exponent: gamma,
        window,
        r_squared: r2,
        kind: RateKind::Exponential,
        curvature,
        non_decaying: gamma <= 1e-10,
        samples: pts.len(),
    })
}
