//! Problem parameters, derived constants, and regime classification.
//!
//! The boundary data of the radial problem is summarized by the pair
//! `(V_minus, v_plus)` where `V_minus = v_minus - mu (n - 1) / r0` is the
//! value the shifted profile takes at the inner boundary. The sign pattern of
//! this pair decides which large-time behavior applies; only the
//! stationary-wave regime is simulated here.

use serde::Serialize;

use crate::error::{Error, Result};

/// Physical and geometric parameters of the exterior problem.
///
/// Derived quantities are recomputed from the stored primitives on every
/// access so they can never drift from their defining formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    n: u32,
    mu: f64,
    r0: f64,
    v_minus: f64,
    v_plus: f64,
}

impl ProblemParams {
    pub fn new(n: u32, mu: f64, r0: f64, v_minus: f64, v_plus: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParams(format!("dimension n = {n} must be >= 3")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParams(format!("viscosity mu = {mu} must be positive")));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidParams(format!("ball radius r0 = {r0} must be positive")));
        }
        if !(v_minus.is_finite() && v_plus.is_finite()) {
            return Err(Error::InvalidParams("boundary states must be finite".into()));
        }
        Ok(Self {
            n,
            mu,
            r0,
            v_minus,
            v_plus,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn v_minus(&self) -> f64 {
        self.v_minus
    }

    pub fn v_plus(&self) -> f64 {
        self.v_plus
    }

    /// Boundary value of the shifted profile: `V_minus = v_minus - mu (n-1) / r0`.
    pub fn v_minus_eff(&self) -> f64 {
        self.v_minus - self.mu * (self.n - 1) as f64 / self.r0
    }

    /// Coefficient of the `1/r^2` term in the shifted stationary equation:
    /// `c0 = mu (n-1) (n-3) / 2`. Vanishes for n = 3.
    pub fn c0(&self) -> f64 {
        self.mu * ((self.n - 1) * (self.n - 3)) as f64 / 2.0
    }
}

/// Large-time behavior implied by the boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeTag {
    /// `v_plus < 0` and `V_minus <= |v_plus|`: a stationary wave connects the
    /// boundary to the far field. The only regime simulated here.
    StationaryWave,
    /// `V_minus <= 0 <= v_plus`: superposition of a stationary wave and a
    /// rarefaction.
    SuperpositionSwRarefaction,
    /// `0 < V_minus < v_plus`: open case.
    UnsolvedIncreasing,
    /// `V_minus > v_plus` with `V_minus + v_plus > 0`: open case.
    UnsolvedShock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// True exactly when `tag == StationaryWave`.
    pub admissible: bool,
    /// For the superposition regime only: whether `v_minus` lies in the
    /// sufficient-condition window `0 < v_minus < 2 mu / (r0 (1 + sqrt((n-3)/(n-1))))`.
    /// Informational; that regime is not simulated.
    pub superposition_sufficient: Option<bool>,
}

/// Stationary-wave admissibility: `v_plus < 0` and `V_minus <= |v_plus|`.
pub fn validate_admissible(params: &ProblemParams) -> bool {
    params.v_plus() < 0.0 && params.v_minus_eff() <= -params.v_plus()
}

/// Classify the boundary data. Boundary ties: `V_minus = v_plus < 0` counts
/// as a stationary wave (the admissibility inequality is non-strict), and
/// `V_minus = 0` with `v_plus >= 0` goes to the superposition row.
pub fn classify_regime(params: &ProblemParams) -> Regime {
    let vm = params.v_minus_eff();
    let vp = params.v_plus();
    let tag = if validate_admissible(params) {
        RegimeTag::StationaryWave
    } else if vm <= 0.0 && vp >= 0.0 {
        RegimeTag::SuperpositionSwRarefaction
    } else if 0.0 < vm && vm < vp {
        RegimeTag::UnsolvedIncreasing
    } else {
        RegimeTag::UnsolvedShock
    };
    let superposition_sufficient = (tag == RegimeTag::SuperpositionSwRarefaction).then(|| {
        let n = params.n() as f64;
        let window =
            2.0 * params.mu() / (params.r0() * (1.0 + ((n - 3.0) / (n - 1.0)).sqrt()));
        0.0 < params.v_minus() && params.v_minus() < window
    });
    Regime {
        tag,
        admissible: tag == RegimeTag::StationaryWave,
        superposition_sufficient,
    }
}

/// Stricter subcase with both prescribed states negative: `v_minus < 0`,
/// `v_plus < 0`, and `V_minus <= v_plus`. The sign and monotonicity bounds on
/// the stationary wave are only claimed here.
pub fn both_negative_subcase(params: &ProblemParams) -> bool {
    params.v_minus() < 0.0 && params.v_plus() < 0.0 && params.v_minus_eff() <= params.v_plus()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(n: u32, mu: f64, r0: f64, vm: f64, vp: f64) -> ProblemParams {
        ProblemParams::new(n, mu, r0, vm, vp).unwrap()
    }

    #[test]
    fn derived_constants_match_formulas() {
        let params = p(4, 1.0, 1.0, 0.0, -1.0);
        assert_eq!(params.v_minus_eff(), -3.0);
        assert_eq!(params.c0(), 1.5);
        let params = p(3, 2.0, 0.5, 1.0, -1.0);
        assert_eq!(params.v_minus_eff(), 1.0 - 2.0 * 2.0 / 0.5);
        assert_eq!(params.c0(), 0.0);
    }

    #[test]
    fn admissibility_examples() {
        // V_minus = -3 <= 1
        assert!(validate_admissible(&p(4, 1.0, 1.0, 0.0, -1.0)));
        // v_plus >= 0
        assert!(!validate_admissible(&p(4, 1.0, 1.0, 0.0, 0.5)));
        // V_minus = 1.5 > 1
        assert!(!validate_admissible(&p(4, 1.0, 1.0, 4.5, -1.0)));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify_regime(&p(4, 1.0, 1.0, 0.0, -1.0)).tag,
            RegimeTag::StationaryWave
        );
        // V_minus = v_plus boundary of the first row
        assert_eq!(
            classify_regime(&p(4, 1.0, 1.0, 2.0, -1.0)).tag,
            RegimeTag::StationaryWave
        );
        // V_minus = 0 with v_plus > 0 resolves to the superposition row
        let regime = classify_regime(&p(4, 1.0, 1.0, 3.0, 1.0));
        assert_eq!(regime.tag, RegimeTag::SuperpositionSwRarefaction);
        assert!(regime.superposition_sufficient.is_some());
        assert_eq!(
            classify_regime(&p(4, 1.0, 1.0, 3.5, 1.0)).tag,
            RegimeTag::UnsolvedIncreasing
        );
        assert_eq!(
            classify_regime(&p(4, 1.0, 1.0, 5.0, -1.0)).tag,
            RegimeTag::UnsolvedShock
        );
    }

    #[test]
    fn both_negative_subcase_examples() {
        assert!(both_negative_subcase(&p(4, 1.0, 1.0, -0.5, -1.0)));
        assert!(!both_negative_subcase(&p(4, 1.0, 1.0, 0.0, -1.0)));
        assert!(both_negative_subcase(&p(4, 1.0, 1.0, -0.1, -3.0)));
    }

    #[test]
    fn rejects_malformed_params() {
        assert!(ProblemParams::new(2, 1.0, 1.0, 0.0, -1.0).is_err());
        assert!(ProblemParams::new(4, 0.0, 1.0, 0.0, -1.0).is_err());
        assert!(ProblemParams::new(4, 1.0, -1.0, 0.0, -1.0).is_err());
        assert!(ProblemParams::new(4, 1.0, 1.0, f64::NAN, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn admissible_iff_stationary_tag(
            n in 3u32..8,
            mu in 0.1f64..4.0,
            r0 in 0.2f64..3.0,
            vm in -6.0f64..6.0,
            vp in -4.0f64..4.0,
        ) {
            let params = p(n, mu, r0, vm, vp);
            let regime = classify_regime(&params);
            prop_assert_eq!(validate_admissible(&params), regime.tag == RegimeTag::StationaryWave);
            prop_assert_eq!(regime.admissible, regime.tag == RegimeTag::StationaryWave);
        }

        #[test]
        fn subcase_implies_admissible(
            n in 3u32..8,
            mu in 0.1f64..4.0,
            r0 in 0.2f64..3.0,
            vm in -6.0f64..6.0,
            vp in -4.0f64..4.0,
        ) {
            let params = p(n, mu, r0, vm, vp);
            if both_negative_subcase(&params) {
                prop_assert!(validate_admissible(&params));
            }
        }
    }
}
