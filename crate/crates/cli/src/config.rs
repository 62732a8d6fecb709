//! Scenario configuration: a JSON document describing the lattice, the
//! emitters, the integration grid and the analysis parameters of a run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use skinbath::evolution::uniform_grid;
use skinbath::{
    Boundary, CouplingPoint, EmitterSpec, IntegratorConfig, LatticeSpec, Method, SystemSpec,
};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub emitters: Vec<EmitterConfig>,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(rename = "M")]
    pub m: usize,
    pub nu: f64,
    pub gamma: f64,
    #[serde(default)]
    pub loss: f64,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_boundary() -> Boundary {
    Boundary::Open
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub label: String,
    #[serde(default)]
    pub detuning: f64,
    pub couplings: Vec<CouplingConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub site: i64,
    pub strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Label of the initially excited emitter; the first emitter by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub record_fields: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescale_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

fn default_t_max() -> f64 {
    40.0
}

fn default_samples() -> usize {
    401
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            t_max: default_t_max(),
            samples: default_samples(),
            initial: None,
            integrator: IntegratorSpec::default(),
            record_fields: false,
            rescale_threshold: None,
            max_steps: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    /// Adaptive Dormand-Prince 5(4).
    Dopri5,
    /// Fixed-step classical Runge-Kutta.
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub method: MethodName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self { method: MethodName::Dopri5, dt: None, rtol: None, atol: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self { directory: None, formats: default_formats() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub selfenergy: SelfEnergyConfig,
    #[serde(default)]
    pub boundstate: BoundStateConfig,
    #[serde(default)]
    pub hyperbolic: HyperbolicConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "default_k_count")]
    pub k_count: usize,
}

fn default_k_count() -> usize {
    512
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { k_count: default_k_count() }
    }
}

/// Detuning grid for self-energy tables. Missing bounds default to
/// `±3 sqrt(t_R t_L)`, one and a half times the band half-width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfEnergyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_max: Option<f64>,
    #[serde(default = "default_delta_count")]
    pub count: usize,
    /// Imaginary part added to every detuning; `0` selects the retarded limit.
    #[serde(default)]
    pub epsilon: f64,
}

fn default_delta_count() -> usize {
    201
}

impl Default for SelfEnergyConfig {
    fn default() -> Self {
        Self { delta_min: None, delta_max: None, count: default_delta_count(), epsilon: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundStateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default = "default_bound_tol")]
    pub tol: f64,
    #[serde(default = "default_bound_iter")]
    pub max_iter: usize,
}

fn default_bound_tol() -> f64 {
    1e-10
}

fn default_bound_iter() -> usize {
    200
}

impl Default for BoundStateConfig {
    fn default() -> Self {
        Self { target: None, tol: default_bound_tol(), max_iter: default_bound_iter() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperbolicConfig {
    #[serde(default = "default_x0")]
    pub x0: f64,
    /// Curvature; derived from the lattice as `4 ln²β` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default = "default_r_count")]
    pub r_count: usize,
    #[serde(default = "default_theta_count")]
    pub theta_count: usize,
}

fn default_x0() -> f64 {
    1.0
}

fn default_r_count() -> usize {
    32
}

fn default_theta_count() -> usize {
    48
}

impl Default for HyperbolicConfig {
    fn default() -> Self {
        Self { x0: default_x0(), kappa: None, r_count: default_r_count(), theta_count: default_theta_count() }
    }
}

impl ScenarioConfig {
    /// Parses a config document. A run manifest is accepted too, in which case
    /// its `resolved_config` is used.
    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        if text.trim().is_empty() {
            return Err(CliError::Config("config document is empty".into()));
        }
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed JSON: {e}")))?;
        let value = match value {
            serde_json::Value::Object(mut map) if map.contains_key("resolved_config") => {
                map.remove("resolved_config").unwrap_or_default()
            }
            other => other,
        };
        Self::from_value(value)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, CliError> {
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn lattice_spec(&self) -> LatticeSpec {
        let l = &self.lattice;
        LatticeSpec::open(l.m, l.nu, l.gamma).with_loss(l.loss).with_boundary(l.boundary)
    }

    pub fn system_spec(&self) -> SystemSpec {
        let emitters = self
            .emitters
            .iter()
            .map(|e| {
                EmitterSpec::new(
                    e.label.clone(),
                    e.couplings.iter().map(|c| CouplingPoint::new(c.site, c.strength)).collect(),
                )
                .with_detuning(e.detuning)
            })
            .collect();
        SystemSpec::new(self.lattice_spec(), emitters)
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig, CliError> {
        let sim = &self.simulation;
        if !(sim.t_max > 0.0 && sim.t_max.is_finite()) {
            return Err(CliError::Config("simulation.t_max: must be positive".into()));
        }
        if sim.samples < 2 {
            return Err(CliError::Config("simulation.samples: at least 2 samples required".into()));
        }
        let spec = sim.integrator;
        let method = match spec.method {
            MethodName::Rk4 => {
                let dt = spec
                    .dt
                    .ok_or_else(|| CliError::Config("simulation.integrator.dt: required for rk4".into()))?;
                if spec.rtol.is_some() || spec.atol.is_some() {
                    return Err(CliError::Config("simulation.integrator: rtol/atol apply to dopri5 only".into()));
                }
                Method::Rk4 { dt }
            }
            MethodName::Dopri5 => {
                if spec.dt.is_some() {
                    return Err(CliError::Config("simulation.integrator.dt: applies to rk4 only".into()));
                }
                Method::Dopri5 {
                    rtol: spec.rtol.unwrap_or(Method::DEFAULT_RTOL),
                    atol: spec.atol.unwrap_or(Method::DEFAULT_ATOL),
                }
            }
        };
        let mut cfg = IntegratorConfig::new(method, uniform_grid(sim.t_max, sim.samples)).with_fields(sim.record_fields);
        if let Some(r) = sim.rescale_threshold {
            cfg = cfg.with_rescale_threshold(r);
        }
        if let Some(m) = sim.max_steps {
            cfg.max_steps = m;
        }
        cfg.validate().map_err(|e| CliError::Config(format!("simulation.integrator: {e}")))?;
        Ok(cfg)
    }

    /// Label of the initially excited emitter.
    pub fn initial_label(&self) -> Result<String, CliError> {
        match &self.simulation.initial {
            Some(l) if self.emitters.iter().any(|e| &e.label == l) => Ok(l.clone()),
            Some(l) => Err(CliError::Config(format!("simulation.initial: no emitter labelled {l:?}"))),
            None => self
                .emitters
                .first()
                .map(|e| e.label.clone())
                .ok_or_else(|| CliError::Config("emitters: at least one emitter required".into())),
        }
    }

    /// Structural validation of the system, reported with config paths.
    pub fn validate(&self) -> Result<(), CliError> {
        let violations = skinbath::validate_spec(&self.system_spec());
        if violations.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(
                violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
            ))
        }
    }

    pub fn formats(&self, override_format: Option<Format>) -> Vec<Format> {
        match override_format {
            Some(f) => vec![f],
            None if self.outputs.formats.is_empty() => default_formats(),
            None => self.outputs.formats.clone(),
        }
    }
}
