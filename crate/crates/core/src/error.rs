//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Boundary data outside the stationary-wave regime. Admissibility
    /// requires v_plus < 0 together with V_minus <= |v_plus|, where
    /// V_minus = v_minus - mu (n - 1) / r0.
    #[error(
        "inadmissible boundary data: admissibility requires v_plus < 0 and \
         V_minus <= |v_plus|, got v_plus = {v_plus}, V_minus = {v_minus_eff}"
    )]
    Inadmissible { v_plus: f64, v_minus_eff: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// The trajectory escaped the stable basin during integration.
    #[error("integration diverged at r = {r:.6}: |value| = {value:.3e} exceeds bound {bound:.3e}")]
    Divergence { r: f64, value: f64, bound: f64 },

    /// The solution has not settled onto the far-field state within the
    /// assessment radius; the domain is too small for the requested tolerance.
    #[error(
        "far-field gap {gap:.3e} exceeds tolerance {tol:.3e} at assessment radius {radius:.1}; \
         increase the domain"
    )]
    FarField { gap: f64, tol: f64, radius: f64 },

    /// Tail magnitude below the floor on the fit window; a decay fit would be
    /// meaningless (for example the identically-constant solution).
    #[error("degenerate tail: |psi - v_plus| stays below {floor:.1e} on the fit window")]
    DegenerateTail { floor: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The constructed weight lost positivity, which signals a truncation or
    /// terminal-value failure rather than a property of the true weight.
    #[error("weight positivity violated: min chi = {min_chi:.3e}")]
    Positivity { min_chi: f64 },

    /// exp(beta * r) is not representable over the grid.
    #[error("exponential weight overflow: beta * r_max = {product:.1} exceeds 600")]
    OverflowGuard { product: f64 },

    #[error("insufficient window: {found} samples in [{t_lo}, {t_hi}], need at least {need}")]
    InsufficientWindow {
        found: usize,
        need: usize,
        t_lo: f64,
        t_hi: f64,
    },

    /// The series is visibly curved in log-log coordinates; an algebraic fit
    /// does not apply and an exponential fit should be tried instead.
    #[error("log-log curvature {statistic:.3} exceeds {threshold}; series is not a power law")]
    CurvatureReject { statistic: f64, threshold: f64 },

    #[error("ODE step size underflow at r = {r:.6e}")]
    StepSizeUnderflow { r: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
