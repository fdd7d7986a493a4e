//! Run configuration: one TOML document per experiment.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use glperiod_core::forcing::{realize_forcing, ForcingSpec, PerturbationSpec, RealizedForcing, SpatialProfile, TemporalProfile};
use glperiod_core::operators::{auto_cutoffs, make_cutoffs, CutoffSpec, LinearOperator};
use glperiod_core::solver::SolveOptions;
use glperiod_core::spectral::{make_grid, Grid, GridConfig};
use glperiod_core::stability::StabilityRunConfig;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Explicit cutoff radii; leaving both out selects the automatic choice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffOverrides {
    pub r1: Option<f64>,
    pub r_inf: Option<f64>,
}

/// Forcing `g = amplitude * temporal(t) * spatial(x)`; the period is the
/// run's period.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    pub amplitude: f64,
    #[serde(default = "default_temporal")]
    pub temporal: TemporalProfile,
    pub spatial: SpatialProfile,
}

fn default_temporal() -> TemporalProfile {
    TemporalProfile::SinFundamental
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub perturbation: PerturbationSpec,
    #[serde(flatten)]
    pub run: StabilityRunConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub samples: usize,
    /// Time nodes of the trajectory used by the energy and nonlinear checks.
    pub m_t: usize,
    /// Grid for the batteries; defaults to the run grid.
    pub grid: Option<GridConfig>,
    /// Forcing width for the trajectory when `grid` is set; defaults to the
    /// run forcing.
    pub forcing_sigma: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            m_t: 16,
            grid: None,
            forcing_sigma: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilon: Vec<f64>,
    pub m_t: Vec<usize>,
    pub n: Vec<usize>,
    /// Stopping tolerance on the epsilon axis, small enough that every row
    /// has a contraction estimate.
    pub contraction_z_tolerance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            epsilon: vec![1e-3, 3e-3, 1e-2],
            m_t: vec![32, 64, 128],
            n: vec![16, 32],
            contraction_z_tolerance: 1e-40,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Write the periodic solution as one binary snapshot per time node.
    pub snapshots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { snapshots: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub period: f64,
    pub grid: GridConfig,
    #[serde(default)]
    pub cutoffs: CutoffOverrides,
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub solve: SolveOptions,
    #[serde(default)]
    pub stability: Option<StabilityConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/default")
}

/// Grid, operator, cutoffs and sampled forcing built from a config.
pub struct Setup {
    pub grid: Arc<Grid>,
    pub op: LinearOperator,
    pub cutoffs: CutoffSpec,
    pub forcing: RealizedForcing,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| Failure::Config(e.to_string()).into())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(|e| Failure::Config(format!("{e:#}")))?;
        Self::from_toml(&text)
    }

    pub fn forcing_spec(&self) -> ForcingSpec {
        ForcingSpec {
            amplitude: self.forcing.amplitude,
            temporal: self.forcing.temporal,
            spatial: self.forcing.spatial.clone(),
            period: self.period,
        }
    }

    /// Cutoffs on `grid`: the overrides when both radii are given, otherwise
    /// the automatic choice. Either way `T r_inf^2 <= 1` is enforced.
    pub fn cutoffs_on(&self, grid: &Grid) -> anyhow::Result<CutoffSpec> {
        let cut = match (self.cutoffs.r1, self.cutoffs.r_inf) {
            (Some(r1), Some(r_inf)) => make_cutoffs(r1, r_inf, grid),
            (None, None) => auto_cutoffs(grid, self.period),
            _ => {
                return Err(Failure::Config("cutoffs: give both r1 and r_inf, or neither".into()).into());
            }
        }
        .map_err(|e| Failure::Config(format!("cutoffs: {e}")))?;
        cut.validate_for_period(self.period)
            .map_err(|e| Failure::Config(format!("cutoffs: {e}")))?;
        Ok(cut)
    }

    /// Checks every invariant that does not need a numerical run.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.setup().map(|_| ())
    }

    /// Builds the grid, operator, cutoffs and forcing, mapping every
    /// violation to a configuration failure.
    pub fn setup(&self) -> anyhow::Result<Setup> {
        let config = |what: &str, e: glperiod_core::Error| Failure::Config(format!("{what}: {e}"));
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Failure::Config(format!("period must be positive (got {})", self.period)).into());
        }
        let grid = make_grid(self.grid).map_err(|e| config("grid", e))?;
        let op = LinearOperator::new(&grid, self.period).map_err(|e| config("operator", e))?;
        let cutoffs = self.cutoffs_on(&grid)?;
        self.solve.validate().map_err(|e| config("solve", e))?;
        let forcing = realize_forcing(&self.forcing_spec(), &grid, self.solve.m_t).map_err(|e| config("forcing", e))?;
        if let Some(st) = &self.stability {
            if !(st.run.t_max > 0.0) || st.run.record_stride == 0 {
                return Err(Failure::Config("stability: t_max must be positive and record_stride at least 1".into()).into());
            }
            if let Some(h) = st.run.h {
                if !(h > 0.0) {
                    return Err(Failure::Config(format!("stability: step h must be positive (got {h})")).into());
                }
            }
        }
        if self.verify.samples == 0 {
            return Err(Failure::Config("verify: samples must be at least 1".into()).into());
        }
        Ok(Setup {
            grid,
            op,
            cutoffs,
            forcing,
        })
    }
}
