//! TOML problem descriptions.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::abstraction::{build_grid, AbstractionError, CellLayout, InputSet};
use crate::coarsening::CoarsenMode;
use crate::graph::WeightMode;
use crate::interval::{Interval, IntervalBox};
use crate::system::{BoxReachSpec, ContinuousSystem, Dynamics, FiniteReachSpec, FiniteSystem, ModelError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Abstraction(#[from] AbstractionError),
    #[error("config section [{section}]: {msg}")]
    Section { section: &'static str, msg: String },
}

fn section(section: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Section { section, msg: msg.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "yes")]
    pub lower_closed: bool,
    #[serde(default = "yes")]
    pub upper_closed: bool,
}

fn yes() -> bool {
    true
}

impl BoxConfig {
    pub fn to_box(&self) -> Result<IntervalBox, ConfigError> {
        if self.lower.len() != self.upper.len() || self.lower.is_empty() {
            return Err(section("spec", "box bounds must be non-empty and of equal length"));
        }
        Ok(IntervalBox(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(&lo, &hi)| Interval { lo, hi, lo_closed: self.lower_closed, hi_closed: self.upper_closed })
                .collect(),
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemConfig {
    Finite {
        states: Vec<String>,
        inputs: Vec<String>,
        /// `[from, input, to]` triples.
        transitions: Vec<[String; 3]>,
    },
    Continuous {
        #[serde(flatten)]
        dynamics: Dynamics,
        /// Defaults to the safe set.
        #[serde(default)]
        domain: Option<Vec<BoxConfig>>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub safe_states: Option<Vec<String>>,
    pub target_states: Option<Vec<String>>,
    pub safe: Option<Vec<BoxConfig>>,
    pub target: Option<Vec<BoxConfig>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridConfig {
    Uniform { lower: Vec<f64>, upper: Vec<f64>, eta: Vec<f64> },
    Explicit { cells: Vec<BoxConfig> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum InputsConfig {
    Explicit { values: Vec<Vec<f64>> },
    Grid { lower: Vec<f64>, upper: Vec<f64>, eta: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    #[serde(default = "default_weight_mode")]
    pub weight_mode: WeightMode,
    #[serde(default = "default_coarsen")]
    pub coarsen: String,
    #[serde(default = "default_max_paths")]
    pub max_paths: usize,
}

fn default_weight_mode() -> WeightMode {
    WeightMode::IncludeTarget
}

fn default_coarsen() -> String {
    "input".into()
}

fn default_max_paths() -> usize {
    100_000
}

impl Default for EntropyConfig {
    fn default() -> Self {
        EntropyConfig { weight_mode: default_weight_mode(), coarsen: default_coarsen(), max_paths: default_max_paths() }
    }
}

impl EntropyConfig {
    pub fn coarsen_mode(&self) -> Result<CoarsenMode, ConfigError> {
        self.coarsen.parse().map_err(|e: crate::coarsening::CoarsenError| section("entropy", e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Point(Vec<f64>),
    State(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub x0: Option<InitialState>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    /// `lowest` or `seeded`
    #[serde(default = "default_tie_break")]
    pub tie_break: String,
}

fn default_steps() -> usize {
    100
}

fn default_tie_break() -> String {
    "lowest".into()
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { x0: None, steps: default_steps(), seed: 0, tie_break: default_tie_break() }
    }
}

/// Published figures to compare against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub domain_size: Option<usize>,
    pub group_count: Option<usize>,
    pub n_r: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemConfig,
    pub spec: SpecConfig,
    pub grid: Option<GridConfig>,
    pub inputs: Option<InputsConfig>,
    #[serde(default)]
    pub entropy: EntropyConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    pub reference: Option<ReferenceConfig>,
}

/// A configured problem ready for the pipeline.
#[derive(Clone, Debug)]
pub enum Problem {
    Finite { sys: FiniteSystem, spec: FiniteReachSpec },
    Continuous { sys: ContinuousSystem, spec: BoxReachSpec, layout: CellLayout, inputs: InputSet },
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    /// sha256 of the canonical JSON form; comments and layout do not matter.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn problem(&self) -> Result<Problem, ConfigError> {
        match &self.system {
            SystemConfig::Finite { states, inputs, transitions } => {
                let mut sys = FiniteSystem::new(states.clone(), inputs.clone())?;
                for [x, u, y] in transitions {
                    let (x, u, y) = (sys.state_id(x)?, sys.input_id(u)?, sys.state_id(y)?);
                    sys.add_transition(x, u, y)?;
                }
                let names = |v: &Option<Vec<String>>, key: &str| {
                    v.clone().ok_or_else(|| section("spec", format!("finite systems need `{key}`")))
                };
                let safe = names(&self.spec.safe_states, "safe_states")?;
                let target = names(&self.spec.target_states, "target_states")?;
                let ids = |v: &[String]| v.iter().map(|s| sys.state_id(s)).collect::<Result<_, _>>();
                let spec = FiniteReachSpec::new(ids(&safe)?, ids(&target)?)?;
                Ok(Problem::Finite { sys, spec })
            }
            SystemConfig::Continuous { dynamics, domain } => {
                let boxes = |v: &Option<Vec<BoxConfig>>, key: &str| -> Result<Vec<IntervalBox>, ConfigError> {
                    v.as_ref()
                        .ok_or_else(|| section("spec", format!("continuous systems need `{key}`")))?
                        .iter()
                        .map(BoxConfig::to_box)
                        .collect()
                };
                let safe = boxes(&self.spec.safe, "safe")?;
                let target = boxes(&self.spec.target, "target")?;
                let domain = match domain {
                    Some(d) => d.iter().map(BoxConfig::to_box).collect::<Result<_, _>>()?,
                    None => safe.clone(),
                };
                let inputs = match self.inputs.as_ref().ok_or_else(|| section("inputs", "missing"))? {
                    InputsConfig::Explicit { values } => InputSet::explicit(values.clone()),
                    InputsConfig::Grid { lower, upper, eta } => InputSet::grid_centres(lower, upper, eta)?,
                };
                let input_dim = inputs.values.first().map_or(0, Vec::len);
                let sys = ContinuousSystem::new(dynamics.clone(), input_dim, domain)?;
                let spec = BoxReachSpec::new(safe, target)?;
                let layout = match self.grid.as_ref().ok_or_else(|| section("grid", "missing"))? {
                    GridConfig::Uniform { lower, upper, eta } => {
                        CellLayout::Uniform(build_grid(&IntervalBox::closed(lower, upper), eta)?)
                    }
                    GridConfig::Explicit { cells } => {
                        CellLayout::Explicit(cells.iter().map(BoxConfig::to_box).collect::<Result<_, _>>()?)
                    }
                };
                Ok(Problem::Continuous { sys, spec, layout, inputs })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FINITE: &str = r#"
[system]
kind = "finite"
states = ["0", "1", "2", "3"]
inputs = ["a", "b"]
transitions = [["0", "a", "1"], ["0", "b", "3"], ["2", "b", "1"], ["2", "a", "3"]]

[spec]
safe_states = ["0", "1", "2"]
target_states = ["1"]
"#;

    const SCALAR: &str = r#"
[system]
kind = "continuous"
model = "scalar_linear"

[spec]
safe = [{ lower = [0.0], upper = [1.4] }, { lower = [2.0], upper = [6.0] }]
target = [{ lower = [0.0], upper = [1.4] }]

[grid]
cells = [
  { lower = [3.75], upper = [6.0], lower_closed = false },
  { lower = [2.0], upper = [3.75] },
  { lower = [0.0], upper = [1.4] },
]

[inputs]
values = [[-0.5], [0.75]]
"#;

    #[test]
    fn finite_config() {
        let c = Config::from_toml(FINITE).unwrap();
        let Problem::Finite { sys, spec } = c.problem().unwrap() else { panic!() };
        let (m_sys, m_spec) = crate::system::models::example1();
        assert_eq!(sys, m_sys);
        assert_eq!(spec, m_spec);
        assert_eq!(c.entropy.weight_mode, WeightMode::IncludeTarget);
        assert_eq!(c.entropy.coarsen_mode().unwrap(), CoarsenMode::ByInput);
    }

    #[test]
    fn continuous_config() {
        let c = Config::from_toml(SCALAR).unwrap();
        let Problem::Continuous { sys, layout, inputs, .. } = c.problem().unwrap() else { panic!() };
        assert_eq!(sys.dynamics, Dynamics::ScalarLinear);
        assert_eq!(layout.cell_count(), 3);
        assert!(!layout.cell_box(0).contains(&[3.75]));
        assert_eq!(inputs.len(), 2);
    }

    #[test]
    fn room_config() {
        let text = r#"
[system]
kind = "continuous"
model = "room_temperature"
params = { alpha = 0.45, beta = 0.045, gamma = 0.09, t_outside = -1.0, t_heater = 50.0 }
[spec]
safe = [{ lower = [17.4, 17.4, 17.4], upper = [24.0, 24.0, 24.0] }]
target = [{ lower = [22.0, 22.0, 22.0], upper = [24.0, 24.0, 24.0] }]
[grid]
lower = [17.4, 17.4, 17.4]
upper = [24.0, 24.0, 24.0]
eta = [1.2, 1.2, 1.2]
[inputs]
lower = [0.0, 0.0, 0.0]
upper = [0.6, 0.6, 0.6]
eta = [0.2, 0.2, 0.2]
"#;
        let c = Config::from_toml(text).unwrap();
        let Problem::Continuous { sys, inputs, layout, .. } = c.problem().unwrap() else { panic!() };
        assert_eq!(sys.dimension, 3);
        assert_eq!(inputs.len(), 27);
        assert_eq!(layout.cell_count(), 216);
    }

    #[test]
    fn hash_ignores_comments() {
        let a = Config::from_toml(FINITE).unwrap();
        let b = Config::from_toml(&format!("# note\n{FINITE}")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn errors_name_the_section() {
        let bad = FINITE.replace("safe_states", "safe_statez");
        assert!(Config::from_toml(&bad).is_err());
        let c = Config::from_toml(&FINITE.replace("safe_states = [\"0\", \"1\", \"2\"]\n", "")).unwrap();
        assert!(c.problem().unwrap_err().to_string().contains("[spec]"));
    }
}
