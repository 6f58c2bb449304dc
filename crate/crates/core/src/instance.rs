use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::estimators::EstimatorKind;
use crate::sim::ArmModel;
use crate::types::{optimal_decisions, reward, ties, Decision, Oracle, ParameterVector, DEFAULT_ENUMERATION_LIMIT};

/// Arm models must reproduce the declared parameters to this precision.
pub const PARAMETER_MATCH_TOLERANCE: f64 = 1e-12;

/// An oracle together with the (hidden) truth the algorithm has to learn.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    oracle: Arc<dyn Oracle>,
    true_params: ParameterVector,
    estimator: EstimatorKind,
    arms: Vec<ArmModel>,
    optimum: Decision,
}

impl ProblemInstance {
    /// Validates the arm models against `true_params` and, for enumerable
    /// classes, that the optimum under `true_params` is unique.
    pub fn new(
        oracle: Arc<dyn Oracle>,
        true_params: ParameterVector,
        estimator: EstimatorKind,
        arms: Vec<ArmModel>,
    ) -> Result<Self> {
        let inst = Self::with_ties_allowed(oracle, true_params, estimator, arms)?;
        if inst.oracle.decision_count().is_some_and(|n| n <= DEFAULT_ENUMERATION_LIMIT) {
            let optima = optimal_decisions(inst.oracle.as_ref(), &inst.true_params, DEFAULT_ENUMERATION_LIMIT)?;
            if optima.len() != 1 {
                return Err(Error::Domain(format!(
                    "the optimal decision under the true parameters is not unique ({} optima)",
                    optima.len()
                )));
            }
            let best = reward(inst.oracle.as_ref(), &inst.true_params, &optima[0])?;
            let found = reward(inst.oracle.as_ref(), &inst.true_params, &inst.optimum)?;
            if !ties(best, found) {
                return Err(Error::Internal(format!(
                    "oracle returned {} with reward {found}, enumeration found {best}",
                    inst.optimum
                )));
            }
        }
        Ok(inst)
    }

    /// Same as [`ProblemInstance::new`] without the uniqueness check.
    pub fn with_ties_allowed(
        oracle: Arc<dyn Oracle>,
        true_params: ParameterVector,
        estimator: EstimatorKind,
        arms: Vec<ArmModel>,
    ) -> Result<Self> {
        let m = oracle.arm_count();
        check_len(m, true_params.len())?;
        check_len(m, arms.len())?;
        for (i, (arm, theta)) in arms.iter().zip(true_params.as_slice()).enumerate() {
            arm.validate()?;
            let actual = arm.parameter(estimator);
            if (actual - theta).abs() > PARAMETER_MATCH_TOLERANCE {
                return Err(Error::Domain(format!(
                    "arm {i}: model {estimator:?} is {actual}, declared parameter is {theta}"
                )));
            }
        }
        let optimum = oracle.maximize(true_params.as_slice());
        Ok(Self {
            oracle,
            true_params,
            estimator,
            arms,
            optimum,
        })
    }

    pub fn oracle(&self) -> &dyn Oracle {
        self.oracle.as_ref()
    }

    pub fn shared_oracle(&self) -> Arc<dyn Oracle> {
        Arc::clone(&self.oracle)
    }

    pub fn true_params(&self) -> &ParameterVector {
        &self.true_params
    }

    pub fn estimator(&self) -> EstimatorKind {
        self.estimator
    }

    pub fn arms(&self) -> &[ArmModel] {
        &self.arms
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    /// `phi(theta*)`, the decision a correct run must output.
    pub fn optimum(&self) -> &Decision {
        &self.optimum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::TopK;

    #[test]
    fn rejects_mismatched_arm_parameters() {
        let oracle: Arc<dyn Oracle> = Arc::new(TopK::best_arm(2).unwrap());
        let theta = ParameterVector::new(vec![0.8, 0.2]).unwrap();
        let arms = vec![ArmModel::Bernoulli { p: 0.8 }, ArmModel::Bernoulli { p: 0.3 }];
        assert!(ProblemInstance::new(oracle.clone(), theta.clone(), EstimatorKind::Mean, arms).is_err());
        let arms = vec![ArmModel::Bernoulli { p: 0.8 }];
        assert!(matches!(
            ProblemInstance::new(oracle, theta, EstimatorKind::Mean, arms),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn ties_are_rejected_unless_allowed() {
        let oracle: Arc<dyn Oracle> = Arc::new(TopK::best_arm(2).unwrap());
        let theta = ParameterVector::new(vec![0.5, 0.5]).unwrap();
        let arms = vec![ArmModel::Bernoulli { p: 0.5 }; 2];
        assert!(ProblemInstance::new(oracle.clone(), theta.clone(), EstimatorKind::Mean, arms.clone()).is_err());
        let inst = ProblemInstance::with_ties_allowed(oracle, theta, EstimatorKind::Mean, arms).unwrap();
        assert_eq!(inst.optimum().0, vec![1.0, 0.0]);
    }
}
