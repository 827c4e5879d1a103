//! TOML run configuration.
//!
//! Every section is optional; a subcommand fails with a config error when
//! the section it needs is missing. Numerical defaults come from the core
//! crate's constants.

use std::path::Path;

use serde::Deserialize;
use velojump::hj::{Boundary, LATTICE_STEP};
use velojump::measure::DEFAULT_QUADRATURE_ORDER;
use velojump::pdmp::DEFAULT_RECORD_LIMIT;
use velojump::{Atom, InitialProfile, MeasureKind, VelocityMeasure};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads; 0 means all available cores.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub seed: u64,
    pub measure: Option<MeasureConfig>,
    pub hamiltonian: Option<HamiltonianConfig>,
    pub sing_boundary: Option<DirectionsConfig>,
    pub eigen: Option<PointsConfig>,
    pub legendre: Option<PointsConfig>,
    pub hj: Option<HjConfig>,
    pub kinetic: Option<KineticConfig>,
    pub converge: Option<ConvergeConfig>,
    pub simulate: Option<SimulateConfig>,
    pub figure1: Option<Figure1Config>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    UniformBall,
    UniformInterval,
    Atomic,
    TabulatedRadial,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub velocity: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub kind: KindName,
    pub dimension: Option<usize>,
    pub radius: Option<f64>,
    /// `[lower, upper]` for `uniform_interval`.
    pub endpoints: Option<[f64; 2]>,
    pub atoms: Option<Vec<AtomConfig>>,
    pub shell_density: Option<Vec<f64>>,
    #[serde(default = "default_quadrature_order")]
    pub quadrature_order: usize,
}

fn default_quadrature_order() -> usize {
    DEFAULT_QUADRATURE_ORDER
}

/// Radial momentum grid `ρ·direction`, `ρ` uniform on `[p_min, p_max]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    pub direction: Vec<f64>,
    #[serde(default)]
    pub p_min: f64,
    pub p_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionsConfig {
    pub directions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsConfig {
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HjMethod {
    LaxFriedrichs,
    HopfLax,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjConfig {
    #[serde(default = "default_method")]
    pub method: HjMethod,
    pub x: AxisConfig,
    pub y: Option<AxisConfig>,
    pub initial: InitialProfile<f64>,
    pub final_time: f64,
    #[serde(default)]
    pub output_times: Vec<f64>,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub dt: Option<f64>,
    /// Relative lattice step of the Hopf-Lax minimization.
    #[serde(default = "default_lattice_step")]
    pub lattice_step: f64,
}

fn default_method() -> HjMethod {
    HjMethod::LaxFriedrichs
}

fn default_boundary() -> Boundary {
    velojump::LaxFriedrichsOptions::<f64>::default().boundary
}

fn default_cfl() -> f64 {
    velojump::LaxFriedrichsOptions::<f64>::default().cfl
}

fn default_kinetic_cfl() -> f64 {
    velojump::KineticOptions::<f64>::default().cfl
}

fn default_lattice_step() -> f64 {
    LATTICE_STEP
}

/// Periodic grid `[lower, upper)` for the kinetic solvers.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticConfig {
    pub epsilon: f64,
    pub x: AxisConfig,
    pub initial: InitialProfile<f64>,
    pub final_time: f64,
    #[serde(default)]
    pub output_times: Vec<f64>,
    #[serde(default = "default_kinetic_cfl")]
    pub cfl: f64,
    pub dt: Option<f64>,
    /// Also write every `φ^ε(t, x, v)` value (large).
    #[serde(default)]
    pub full_field: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub epsilons: Vec<f64>,
    pub x: AxisConfig,
    pub initial: InitialProfile<f64>,
    pub final_time: f64,
    #[serde(default = "default_kinetic_cfl")]
    pub cfl: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub count: usize,
    pub horizon: f64,
    #[serde(default = "default_record_limit")]
    pub record_limit: usize,
}

fn default_record_limit() -> usize {
    DEFAULT_RECORD_LIMIT
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure1Config {
    #[serde(default = "default_figure_p_max")]
    pub p_max: f64,
    #[serde(default = "default_figure_points")]
    pub points: usize,
}

impl Default for Figure1Config {
    fn default() -> Self {
        Figure1Config { p_max: default_figure_p_max(), points: default_figure_points() }
    }
}

fn default_figure_p_max() -> f64 {
    4.0
}

fn default_figure_points() -> usize {
    4001
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn section<'a, S>(&'a self, name: &str, s: &'a Option<S>) -> Result<&'a S, CliError> {
        s.as_ref().ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
    }

    pub fn measure_config(&self) -> Result<&MeasureConfig, CliError> {
        self.section("measure", &self.measure)
    }
}

fn need<T: Copy>(v: Option<T>, field: &str, kind: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("measure.{field} is required for kind {kind}")))
}

impl MeasureConfig {
    /// The described law, without the interior-hull requirement.
    pub fn kind(&self) -> Result<MeasureKind<f64>, CliError> {
        let unused = |field: &str, present: bool| {
            if present {
                Err(CliError::Config(format!("measure.{field} does not apply to this kind")))
            } else {
                Ok(())
            }
        };
        Ok(match self.kind {
            KindName::UniformBall => {
                unused("endpoints", self.endpoints.is_some())?;
                unused("atoms", self.atoms.is_some())?;
                unused("shell_density", self.shell_density.is_some())?;
                MeasureKind::UniformBall {
                    dimension: need(self.dimension, "dimension", "uniform_ball")?,
                    radius: self.radius.unwrap_or(1.0),
                }
            }
            KindName::UniformInterval => {
                unused("radius", self.radius.is_some())?;
                unused("atoms", self.atoms.is_some())?;
                unused("shell_density", self.shell_density.is_some())?;
                if self.dimension.is_some_and(|d| d != 1) {
                    return Err(CliError::Config("measure.dimension must be 1 for uniform_interval".into()));
                }
                let [lower, upper] = self.endpoints.unwrap_or([-1.0, 1.0]);
                MeasureKind::UniformInterval { lower, upper }
            }
            KindName::Atomic => {
                unused("radius", self.radius.is_some())?;
                unused("endpoints", self.endpoints.is_some())?;
                unused("shell_density", self.shell_density.is_some())?;
                let atoms = self
                    .atoms
                    .as_ref()
                    .ok_or_else(|| CliError::Config("measure.atoms is required for kind atomic".into()))?;
                if let Some(d) = self.dimension {
                    if let Some(i) = atoms.iter().position(|a| a.velocity.len() != d) {
                        return Err(CliError::Config(format!("measure.atoms[{i}] does not have dimension {d}")));
                    }
                }
                MeasureKind::Atomic {
                    atoms: atoms.iter().map(|a| Atom::new(a.velocity.clone(), a.weight)).collect(),
                }
            }
            KindName::TabulatedRadial => {
                unused("endpoints", self.endpoints.is_some())?;
                unused("atoms", self.atoms.is_some())?;
                MeasureKind::TabulatedRadial {
                    dimension: need(self.dimension, "dimension", "tabulated_radial")?,
                    radius: self.radius.unwrap_or(1.0),
                    shell_density: self.shell_density.clone().ok_or_else(|| {
                        CliError::Config("measure.shell_density is required for kind tabulated_radial".into())
                    })?,
                }
            }
        })
    }

    pub fn build(&self) -> Result<VelocityMeasure<f64>, CliError> {
        let m = match self.kind()? {
            MeasureKind::UniformBall { dimension, radius } => VelocityMeasure::uniform_ball(dimension, radius),
            MeasureKind::UniformInterval { lower, upper } => VelocityMeasure::uniform_interval(lower, upper),
            MeasureKind::Atomic { atoms } => VelocityMeasure::atomic(atoms),
            MeasureKind::TabulatedRadial { dimension, radius, shell_density } => {
                VelocityMeasure::tabulated_radial(dimension, radius, shell_density)
            }
        };
        m.and_then(|m| m.with_quadrature_order(self.quadrature_order))
            .map_err(|e| CliError::Config(format!("measure: {e}")))
    }
}

impl AxisConfig {
    pub fn axis(&self, name: &str, periodic: bool) -> Result<Vec<f64>, CliError> {
        velojump::field::uniform_axis(self.lower, self.upper, self.points, periodic)
            .map_err(|e| CliError::Config(format!("{name}: {e}")))
    }
}

/// Checks `0 < t₁ < … < T` for output times.
pub fn check_times(section: &str, final_time: f64, output_times: &[f64]) -> Result<(), CliError> {
    if !(final_time > 0.0 && final_time.is_finite()) {
        return Err(CliError::Config(format!("{section}.final_time must be positive")));
    }
    let mut prev = 0.0;
    for &t in output_times {
        if !(t > prev && t <= final_time) {
            return Err(CliError::Config(format!(
                "{section}.output_times must increase within (0, final_time]"
            )));
        }
        prev = t;
    }
    Ok(())
}
