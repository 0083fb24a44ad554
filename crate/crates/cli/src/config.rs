//! Run configuration: a single versioned JSON document per run.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use exburg_core::evolve::{FluxScheme, InitialDataFamily, InitialDataSpec, SchemeConfig};
use exburg_core::grid::RadialGrid;
use exburg_core::problem::ProblemParams;
use exburg_core::stationary::StationarySolveOptions;

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec_version: u32,
    pub params: ParamsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub stationary: StationaryConfig,
    #[serde(default)]
    pub weight: WeightConfig,
    #[serde(default)]
    pub evolve: Option<EvolveConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub seed: u64,
    /// Fault injection for exercising failure paths; absent in normal runs.
    #[serde(default)]
    pub fault: Option<FaultInjection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub n: u32,
    pub mu: f64,
    pub r0: f64,
    pub v_minus: f64,
    pub v_plus: f64,
}

impl ParamsConfig {
    pub fn build(&self) -> Result<ProblemParams> {
        ProblemParams::new(self.n, self.mu, self.r0, self.v_minus, self.v_plus)
            .context("invalid problem parameters")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_max: f64,
    pub nodes: usize,
    /// "uniform" or "geometric".
    pub grading: Grading,
    /// First spacing for geometric grading; ignored for uniform.
    pub first_spacing: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    Uniform,
    Geometric,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            r_max: 60.0,
            nodes: 2000,
            grading: Grading::Geometric,
            first_spacing: Some(4e-4),
        }
    }
}

impl GridConfig {
    pub fn build(&self, r0: f64) -> Result<Arc<RadialGrid>> {
        let grid = match self.grading {
            Grading::Uniform => RadialGrid::uniform(r0, self.r_max, self.nodes),
            Grading::Geometric => {
                let h0 = self.first_spacing.unwrap_or((self.r_max - r0) / 1e5);
                RadialGrid::geometric_from_first_spacing(r0, self.r_max, self.nodes, h0)
            }
        };
        Ok(Arc::new(grid.context("invalid grid")?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    pub tol: f64,
    pub far_field_factor: f64,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            far_field_factor: 100.0,
        }
    }
}

impl StationaryConfig {
    pub fn build(&self) -> StationarySolveOptions {
        StationarySolveOptions {
            tol: self.tol,
            far_field_factor: self.far_field_factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum WeightConfig {
    /// f(r) = 1/r - 2/r0.
    Default,
    /// The one-parameter power-law family.
    Epsilon { eps: f64 },
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self::Default
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_cfl")]
    pub cfl_target: f64,
    #[serde(default = "default_flux")]
    pub flux: FluxConfig,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Number of uniformly spaced snapshots over (0, t_end].
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    pub initial_data: InitialDataConfig,
}

fn default_cfl() -> f64 {
    0.4
}

fn default_theta() -> f64 {
    0.5
}

fn default_snapshots() -> usize {
    200
}

fn default_flux() -> FluxConfig {
    FluxConfig::Upwind
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxConfig {
    Upwind,
    LocalLaxFriedrichs,
}

impl From<FluxConfig> for FluxScheme {
    fn from(f: FluxConfig) -> Self {
        match f {
            FluxConfig::Upwind => FluxScheme::Upwind,
            FluxConfig::LocalLaxFriedrichs => FluxScheme::LocalLaxFriedrichs,
        }
    }
}

impl EvolveConfig {
    pub fn scheme(&self) -> SchemeConfig {
        let times = (1..=self.snapshots)
            .map(|k| self.t_end * k as f64 / self.snapshots as f64)
            .collect();
        SchemeConfig {
            dt: self.dt,
            cfl_target: self.cfl_target,
            flux: self.flux.into(),
            theta: self.theta,
            snapshot_times: times,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialDataConfig {
    ExactStationary,
    CompactBump {
        amplitude: f64,
        center: f64,
        width: f64,
        /// Uniform jitter half-width applied to the center, drawn from the
        /// run seed.
        #[serde(default)]
        center_jitter: f64,
    },
    AlgebraicTail {
        amplitude: f64,
        p: f64,
        #[serde(default)]
        alpha: Option<f64>,
    },
    ExponentialTail {
        amplitude: f64,
        q: f64,
    },
}

impl InitialDataConfig {
    /// Resolve to a concrete spec; bump jitter consumes the seeded RNG.
    pub fn build(&self, rng: &mut impl rand::Rng) -> InitialDataSpec {
        match *self {
            InitialDataConfig::ExactStationary => InitialDataSpec {
                family: InitialDataFamily::ExactStationary,
                amplitude: 0.0,
            },
            InitialDataConfig::CompactBump {
                amplitude,
                center,
                width,
                center_jitter,
            } => {
                let center = if center_jitter > 0.0 {
                    center + center_jitter * rng.gen_range(-1.0..=1.0)
                } else {
                    center
                };
                InitialDataSpec {
                    family: InitialDataFamily::CompactBump { center, width },
                    amplitude,
                }
            }
            InitialDataConfig::AlgebraicTail { amplitude, p, alpha } => InitialDataSpec {
                family: InitialDataFamily::AlgebraicTail { p, alpha },
                amplitude,
            },
            InitialDataConfig::ExponentialTail { amplitude, q } => InitialDataSpec {
                family: InitialDataFamily::ExponentialTail { q },
                amplitude,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Decay-law fit applied to the sup-difference series.
    pub fit: FitKindConfig,
    /// Fit window; when absent it is derived from the contamination bound
    /// and the late-time floor of the series.
    pub window: Option<(f64, f64)>,
    /// Exponential weight/rate pair for coefficient-bound checks; when absent
    /// the largest admissible pair for the measured weight is used.
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKindConfig {
    None,
    Algebraic,
    Exponential,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            fit: FitKindConfig::Exponential,
            window: None,
            beta: None,
            gamma: None,
        }
    }
}

/// Pass/fail thresholds applied by the commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    pub residual_max: f64,
    pub slope_range: (f64, f64),
    pub weight_ode_residual_max: f64,
    pub weight_boundary_error_max: f64,
    pub weight_second_identity_max: f64,
    pub fit_r_squared_min: f64,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            residual_max: 1e-8,
            slope_range: (-2.2, -1.8),
            weight_ode_residual_max: 1e-8,
            weight_boundary_error_max: 1e-6,
            weight_second_identity_max: 1e-6,
            fit_r_squared_min: 0.95,
        }
    }
}

/// Desk-scale sizes for the verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub stationary_nodes: usize,
    pub evolve_nodes: usize,
    pub t_end: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            stationary_nodes: 2000,
            evolve_nodes: 1601,
            t_end: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultInjection {
    /// Shift the constructed weight by +1 before verification.
    ShiftChi,
    /// Poison one initial-data value with NaN before evolving.
    InjectNan,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.spec_version != SPEC_VERSION {
            bail!(
                "unsupported spec_version {} (expected {SPEC_VERSION})",
                self.spec_version
            );
        }
        Ok(())
    }
}

/// Cartesian parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub spec_version: u32,
    pub sweep: SweepGrid,
    #[serde(default)]
    pub cell: SweepCellConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub n: Vec<u32>,
    pub mu: Vec<f64>,
    pub r0: Vec<f64>,
    pub v_minus: Vec<f64>,
    pub v_plus: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCellConfig {
    pub r_max: f64,
    pub nodes: usize,
    pub first_spacing: f64,
    pub t_end: f64,
    pub dt: f64,
    pub amplitude: f64,
    pub snapshots: usize,
}

impl Default for SweepCellConfig {
    fn default() -> Self {
        Self {
            r_max: 60.0,
            nodes: 1001,
            first_spacing: 2e-3,
            t_end: 20.0,
            dt: 4e-4,
            amplitude: 1e-2,
            snapshots: 80,
        }
    }
}

impl SweepConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: SweepConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        if config.spec_version != SPEC_VERSION {
            bail!(
                "unsupported spec_version {} (expected {SPEC_VERSION})",
                config.spec_version
            );
        }
        if config.sweep.n.is_empty()
            || config.sweep.mu.is_empty()
            || config.sweep.r0.is_empty()
            || config.sweep.v_minus.is_empty()
            || config.sweep.v_plus.is_empty()
        {
            bail!("sweep axes must all be non-empty");
        }
        Ok(config)
    }

    pub fn cells(&self) -> Vec<ParamsConfig> {
        let mut cells = Vec::new();
        for &n in &self.sweep.n {
            for &mu in &self.sweep.mu {
                for &r0 in &self.sweep.r0 {
                    for &v_minus in &self.sweep.v_minus {
                        for &v_plus in &self.sweep.v_plus {
                            cells.push(ParamsConfig {
                                n,
                                mu,
                                r0,
                                v_minus,
                                v_plus,
                            });
                        }
                    }
                }
            }
        }
        cells
    }
}
