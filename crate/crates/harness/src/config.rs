//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [instance]
//! application = "top-k"          # best-arm | top-k | osa | water
//! theta = [0.9, 0.7, 0.3, 0.1]   # true parameters
//! k = 2                          # top-k size, or the OSA sample budget
//! # n = [1, 1, 3]                # OSA group sizes
//! # threshold = 1.8              # water: required total
//! # caps = [1.0, 1.0]            # water: per-source capacities
//! # grid_step = 0.1              # water: decision grid
//! # costs = [{ coef = 1.0, exponent = 2.0 }, { coef = 1.0, exponent = 2.0 }]
//! # estimator = "mean"           # mean | variance (OSA defaults to variance)
//! # arms = [{ kind = "bernoulli", p = 0.9 }, ...]  # default: Bernoulli arms
//!
//! [run]
//! delta = 0.05
//! strategy = "bi-monotone"       # bi-monotone | corner-enumeration | grid-scan[:points]
//! mode = "both"                  # coci | uniform | both
//! trials = 200
//! master_seed = 1
//! # max_rounds = 100000
//! # workers = 4
//! # bound = true                 # compute the hardness-based sample bound
//! # epsilon = 0.01               # lattice step of the hardness search
//! # variance_cap = false
//!
//! [output]
//! path = "results"               # directory
//! format = "csv"                 # csv | json-lines
//! # trace = false                # per-round traces as JSON lines
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use cpecs::hardness::DEFAULT_EPSILON;
use cpecs::sim::{arm_for_variance, ArmModel};
use cpecs::{
    ConditionStrategy, CostFn, EstimatorKind, Oracle, OsaSpec, ParameterVector, ProblemInstance, TopK,
    WaterSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Application {
    BestArm,
    TopK,
    Osa,
    Water,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Coci,
    Uniform,
    Both,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Coci => "coci",
            Mode::Uniform => "uniform",
            Mode::Both => "both",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "coci" => Ok(Mode::Coci),
            "uniform" => Ok(Mode::Uniform),
            "both" => Ok(Mode::Both),
            other => Err(format!("unknown mode '{other}' (expected coci, uniform or both)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    JsonLines,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json-lines" | "jsonl" => Ok(Format::JsonLines),
            other => Err(format!("unknown format '{other}' (expected csv or json-lines)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub application: Application,
    pub theta: Vec<f64>,
    #[serde(default)]
    pub k: Option<u64>,
    #[serde(default)]
    pub n: Option<Vec<u64>>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub caps: Option<Vec<f64>>,
    #[serde(default)]
    pub grid_step: Option<f64>,
    #[serde(default)]
    pub costs: Option<Vec<CostFn>>,
    #[serde(default)]
    pub estimator: Option<EstimatorKind>,
    #[serde(default)]
    pub arms: Option<Vec<ArmModel>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub delta: f64,
    #[serde(default)]
    pub strategy: Option<String>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub max_rounds: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_true")]
    pub bound: bool,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub variance_cap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_output_path")]
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: Format,
    #[serde(default)]
    pub trace: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            path: default_output_path(),
            format: default_format(),
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_mode() -> Mode {
    Mode::Coci
}

fn default_trials() -> u64 {
    1
}

fn default_true() -> bool {
    true
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_output_path() -> PathBuf {
    PathBuf::from("results")
}

fn default_format() -> Format {
    Format::Csv
}

fn required<T: Clone>(value: &Option<T>, field: &str, app: Application) -> Result<T> {
    value.clone().ok_or_else(|| {
        HarnessError::config(
            format!("instance.{field}"),
            format!("required for application {}", serde_json::to_string(&app).unwrap_or_default()),
        )
    })
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::config("<config>", e.message()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config(path.display().to_string(), e))?;
        let config: Self = toml::from_str(&text).map_err(|e| {
            let location = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!(" (line {line})")
                })
                .unwrap_or_default();
            HarnessError::config(path.display().to_string(), format!("{}{location}", e.message()))
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Checks the run section; the instance section is checked by
    /// [`ExperimentConfig::build_instance`].
    pub fn validate(&self) -> Result<()> {
        let run = &self.run;
        if !(run.delta > 0.0 && run.delta < 1.0) {
            return Err(HarnessError::config("run.delta", format!("{} is not in (0,1)", run.delta)));
        }
        if run.trials == 0 {
            return Err(HarnessError::config("run.trials", "must be at least 1"));
        }
        if run.workers == Some(0) {
            return Err(HarnessError::config("run.workers", "must be at least 1"));
        }
        if !(run.epsilon > 0.0 && run.epsilon <= 1.0) {
            return Err(HarnessError::config("run.epsilon", format!("{} is not in (0,1]", run.epsilon)));
        }
        if let Some(s) = &run.strategy {
            s.parse::<ConditionStrategy>().map_err(|e| HarnessError::config("run.strategy", e))?;
        }
        Ok(())
    }

    pub fn build_oracle(&self) -> Result<Arc<dyn Oracle>> {
        let inst = &self.instance;
        let app = inst.application;
        let m = inst.theta.len();
        let oracle: Arc<dyn Oracle> = match app {
            Application::BestArm => Arc::new(TopK::best_arm(m).map_err(|e| HarnessError::config("instance.theta", e))?),
            Application::TopK => {
                let k = required(&inst.k, "k", app)? as usize;
                Arc::new(TopK::new(m, k).map_err(|e| HarnessError::config("instance.k", e))?)
            }
            Application::Osa => {
                let n = required(&inst.n, "n", app)?;
                let k = required(&inst.k, "k", app)?;
                if n.len() != m {
                    return Err(HarnessError::config(
                        "instance.n",
                        format!("{} group sizes for {m} parameters", n.len()),
                    ));
                }
                Arc::new(OsaSpec::new(n, k).map_err(|e| HarnessError::config("instance.k", e))?)
            }
            Application::Water => {
                let threshold = required(&inst.threshold, "threshold", app)?;
                let caps = required(&inst.caps, "caps", app)?;
                let step = required(&inst.grid_step, "grid_step", app)?;
                let costs = inst.costs.clone().unwrap_or_else(|| vec![CostFn::zero(); caps.len()]);
                if caps.len() != m || costs.len() != m {
                    return Err(HarnessError::config(
                        "instance.caps",
                        format!("caps and costs need {m} entries, one per parameter"),
                    ));
                }
                Arc::new(WaterSpec::new(threshold, caps, costs, step).map_err(|e| HarnessError::config("instance", e))?)
            }
        };
        Ok(oracle)
    }

    pub fn estimator(&self) -> EstimatorKind {
        self.instance.estimator.unwrap_or(match self.instance.application {
            Application::Osa => EstimatorKind::Variance,
            _ => EstimatorKind::Mean,
        })
    }

    pub fn build_instance(&self) -> Result<ProblemInstance> {
        let oracle = self.build_oracle()?;
        let theta = ParameterVector::new(self.instance.theta.clone())
            .map_err(|e| HarnessError::config("instance.theta", e))?;
        let estimator = self.estimator();
        let arms = match &self.instance.arms {
            Some(arms) => arms.clone(),
            None => theta
                .as_slice()
                .iter()
                .map(|t| match estimator {
                    EstimatorKind::Mean => Ok(ArmModel::Bernoulli { p: *t }),
                    EstimatorKind::Variance => arm_for_variance(*t),
                })
                .collect::<cpecs::Result<Vec<_>>>()
                .map_err(|e| HarnessError::config("instance.theta", e))?,
        };
        ProblemInstance::new(oracle, theta, estimator, arms).map_err(|e| HarnessError::config("instance", e))
    }

    /// Configured strategy, or the oracle's default.
    pub fn strategy(&self, oracle: &dyn Oracle) -> Result<ConditionStrategy> {
        let strategy = match &self.run.strategy {
            Some(s) => s.parse().map_err(|e| HarnessError::config("run.strategy", e))?,
            None => ConditionStrategy::default_for(oracle),
        };
        strategy
            .validate(oracle)
            .map_err(|e| HarnessError::config("run.strategy", e))?;
        Ok(strategy)
    }
}
