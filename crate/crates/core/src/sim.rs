//! Seeded arm models on `[0,1]` and builders for ready-to-run instances.

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::instance::ProblemInstance;
use crate::oracles::{TopK, WaterSpec};
use crate::osa::OsaSpec;
use crate::types::{Oracle, ParameterVector};

const PROBABILITY_SLACK: f64 = 1e-12;

/// A sampling distribution supported on `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArmModel {
    Bernoulli { p: f64 },
    PointMass { value: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    ScaledBeta { a: f64, b: f64 },
}

impl ArmModel {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        match self {
            ArmModel::Bernoulli { p } if !unit(*p) => {
                Err(Error::Domain(format!("Bernoulli p = {p} outside [0,1]")))
            }
            ArmModel::PointMass { value } if !unit(*value) => {
                Err(Error::Domain(format!("point mass {value} outside [0,1]")))
            }
            ArmModel::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::Domain(
                        "discrete model needs matching non-empty values and probs".into(),
                    ));
                }
                if values.iter().any(|v| !unit(*v)) || probs.iter().any(|p| !unit(*p)) {
                    return Err(Error::Domain("discrete support and probabilities must lie in [0,1]".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROBABILITY_SLACK {
                    return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
                }
                Ok(())
            }
            ArmModel::ScaledBeta { a, b } if !(*a > 0.0 && *b > 0.0) => {
                Err(Error::Domain(format!("beta shape ({a}, {b}) must be positive")))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ArmModel::Bernoulli { p } => *p,
            ArmModel::PointMass { value } => *value,
            ArmModel::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
            ArmModel::ScaledBeta { a, b } => a / (a + b),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ArmModel::Bernoulli { p } => p * (1.0 - p),
            ArmModel::PointMass { .. } => 0.0,
            ArmModel::Discrete { values, probs } => {
                let mu = self.mean();
                values
                    .iter()
                    .zip(probs)
                    .map(|(v, p)| p * (v - mu) * (v - mu))
                    .sum()
            }
            ArmModel::ScaledBeta { a, b } => {
                let s = a + b;
                a * b / (s * s * (s + 1.0))
            }
        }
    }

    pub fn parameter(&self, kind: EstimatorKind) -> f64 {
        match kind {
            EstimatorKind::Mean => self.mean(),
            EstimatorKind::Variance => self.variance(),
        }
    }

    /// One draw; the model must be valid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ArmModel::Bernoulli { p } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            ArmModel::PointMass { value } => *value,
            ArmModel::Discrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated non-empty")
            }
            ArmModel::ScaledBeta { a, b } => Beta::new(*a, *b)
                .expect("validated shape")
                .sample(rng)
                .clamp(0.0, 1.0),
        }
    }
}

/// Bernoulli arm with variance `target_var`, using the root `p <= 1/2`.
pub fn arm_for_variance(target_var: f64) -> Result<ArmModel> {
    if !(0.0..=0.25).contains(&target_var) {
        return Err(Error::Domain(format!(
            "variance {target_var} is not attainable by a [0,1] Bernoulli arm"
        )));
    }
    let p = (1.0 - (1.0 - 4.0 * target_var).sqrt()) / 2.0;
    Ok(ArmModel::Bernoulli { p })
}

/// Independent per-arm sample streams derived from one seed, so the samples an
/// arm yields do not depend on when it is pulled.
#[derive(Debug, Clone)]
pub struct ArmStreams {
    streams: Vec<ChaCha8Rng>,
}

impl ArmStreams {
    pub fn new(seed: u64, arms: usize) -> Self {
        let streams = (0..arms)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                rng
            })
            .collect();
        Self { streams }
    }

    pub fn draw(&mut self, arm: usize, model: &ArmModel) -> f64 {
        model.sample(&mut self.streams[arm])
    }
}

/// Seed for item `index` of a family keyed by `master` (stream `index` of a
/// ChaCha8 generator seeded with `master`, first word). Growing the family
/// never changes earlier seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Best-arm identification over Bernoulli arms with the given means.
pub fn best_arm_instance(means: &[f64]) -> Result<ProblemInstance> {
    top_k_instance(means, 1)
}

/// Top-k identification over Bernoulli arms with the given means.
pub fn top_k_instance(means: &[f64], k: usize) -> Result<ProblemInstance> {
    let oracle = TopK::new(means.len(), k)?;
    bernoulli_mean_instance(Arc::new(oracle), means)
}

/// Water planning with Bernoulli quality-response observations.
pub fn water_instance(spec: WaterSpec, means: &[f64]) -> Result<ProblemInstance> {
    bernoulli_mean_instance(Arc::new(spec), means)
}

/// Partitioned opinion sampling: Bernoulli groups with the given within-group
/// variances, estimated with the variance estimator.
pub fn osa_instance(n: Vec<u64>, k: u64, variances: &[f64]) -> Result<ProblemInstance> {
    let spec = OsaSpec::new(n, k)?;
    let arms = variances
        .iter()
        .map(|v| arm_for_variance(*v))
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(
        Arc::new(spec),
        ParameterVector::new(variances.to_vec())?,
        EstimatorKind::Variance,
        arms,
    )
}

/// Deterministic arms sitting exactly at `theta` (mean estimation).
pub fn point_mass_instance(oracle: Arc<dyn Oracle>, theta: &[f64]) -> Result<ProblemInstance> {
    let arms = theta.iter().map(|v| ArmModel::PointMass { value: *v }).collect();
    ProblemInstance::new(oracle, ParameterVector::new(theta.to_vec())?, EstimatorKind::Mean, arms)
}

fn bernoulli_mean_instance(oracle: Arc<dyn Oracle>, means: &[f64]) -> Result<ProblemInstance> {
    let arms = means.iter().map(|p| ArmModel::Bernoulli { p: *p }).collect();
    ProblemInstance::new(oracle, ParameterVector::new(means.to_vec())?, EstimatorKind::Mean, arms)
}
