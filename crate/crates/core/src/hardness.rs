//! Hardness measures for small instances: consistent optimality radii,
//! `H_Lambda`, `H_U`, CPE-L reward gaps, and the COCI sample-complexity bound.

use serde::{Deserialize, Serialize};

use crate::condition::{candidates, ConditionStrategy};
use crate::error::{check_len, Error, Result};
use crate::types::{optimal_decisions, reward_unchecked, ConfidenceBox, Oracle, ParameterVector, DEFAULT_ENUMERATION_LIMIT};

pub const DEFAULT_EPSILON: f64 = 0.01;
/// Budget of oracle evaluations a radius search may spend.
pub const MAX_LAMBDA_EVALUATIONS: u128 = 100_000_000;

/// `Lambda_i` bracketed by the lattice resolution: the smallest flipping L-inf
/// radius found is `upper`; `lower = upper - epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBracket {
    pub lower: f64,
    pub upper: f64,
    /// Set when `phi_i` never changes on `[0,1]^m`; both ends are then 1.
    pub never_flips: bool,
}

/// Per-arm consistent optimality radius: the L-inf distance from `theta_star`
/// at which `phi_i` first changes.
///
/// Boxes `[theta* - r eps, theta* + r eps]` clipped to `[0,1]^m` are grown one
/// lattice step at a time; `strategy` decides whether `phi_i` is constant on
/// each box. The search is exact up to `eps` whenever the strategy is exact
/// for the oracle (bi-monotone oracles).
pub fn compute_lambda(
    oracle: &dyn Oracle,
    theta_star: &ParameterVector,
    epsilon: f64,
    strategy: ConditionStrategy,
) -> Result<Vec<LambdaBracket>> {
    let m = oracle.arm_count();
    check_len(m, theta_star.len())?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Domain(format!("lattice step {epsilon} must lie in (0,1]")));
    }
    strategy.validate(oracle)?;
    let center = theta_star.as_slice();
    let reach = center.iter().map(|t| t.max(1.0 - t)).fold(0.0, f64::max);
    let shells = ((reach / epsilon).ceil() as u64).max(1);

    let per_box: u128 = match strategy {
        ConditionStrategy::BiMonotone => 2 * m as u128,
        ConditionStrategy::CornerEnumeration => 1u128 << m.min(100),
        ConditionStrategy::GridScan { resolution } => {
            (resolution as u128).checked_pow(m as u32).unwrap_or(u128::MAX)
        }
    };
    let cost = per_box.saturating_mul(shells as u128);
    if cost > MAX_LAMBDA_EVALUATIONS {
        return Err(Error::Capacity {
            what: "radius search oracle evaluations",
            size: cost,
            limit: MAX_LAMBDA_EVALUATIONS,
        });
    }

    let mut found: Vec<Option<u64>> = vec![None; m];
    for r in 1..=shells {
        let half = r as f64 * epsilon;
        let lower = center.iter().map(|t| (t - half).max(0.0)).collect();
        let upper = center.iter().map(|t| (t + half).min(1.0)).collect();
        let bx = ConfidenceBox::new(lower, upper)?;
        for arm in candidates(strategy, oracle, &bx)? {
            found[arm].get_or_insert(r);
        }
        if found.iter().all(Option::is_some) {
            break;
        }
    }
    Ok(found
        .into_iter()
        .map(|r| match r {
            Some(r) => {
                let upper = (r as f64 * epsilon).min(1.0);
                LambdaBracket {
                    lower: ((r - 1) as f64 * epsilon).min(upper),
                    upper,
                    never_flips: false,
                }
            }
            None => LambdaBracket {
                lower: 1.0,
                upper: 1.0,
                never_flips: true,
            },
        })
        .collect())
}

/// CPE-L reward gaps: `Delta_i` is the optimal reward minus the best reward of
/// a decision that disagrees with the optimum on arm `i` (infinite if none).
pub fn compute_gaps_cpel(oracle: &dyn Oracle, theta_star: &ParameterVector) -> Result<Vec<f64>> {
    let m = oracle.arm_count();
    check_len(m, theta_star.len())?;
    let optima = optimal_decisions(oracle, theta_star, DEFAULT_ENUMERATION_LIMIT)?;
    let mut binary = true;
    oracle.for_each_decision(&mut |y| binary &= y.iter().all(|v| *v == 0.0 || *v == 1.0));
    if !binary {
        return Err(Error::Usage(format!(
            "reward gaps need a binary decision class; {} is not binary",
            oracle.name()
        )));
    }
    if optima.len() != 1 {
        return Err(Error::Domain(format!(
            "uniqueness violated: {} decisions are optimal",
            optima.len()
        )));
    }
    let star = optima[0].as_slice().to_vec();
    let theta = theta_star.as_slice();
    let best = reward_unchecked(oracle, theta, &star);
    let mut rival = vec![f64::NEG_INFINITY; m];
    oracle.for_each_decision(&mut |y| {
        let r = reward_unchecked(oracle, theta, y);
        for (i, slot) in rival.iter_mut().enumerate() {
            if y[i] != star[i] && r > *slot {
                *slot = r;
            }
        }
    });
    Ok(rival.into_iter().map(|r| best - r).collect())
}

/// `2m + 12 H ln(24 H) + 4 H ln(4 / (tau delta))`, natural logarithms.
pub fn sample_complexity_bound(h_lambda: f64, m: usize, tau: u32, delta: f64) -> Result<f64> {
    if !(h_lambda > 0.0 && h_lambda.is_finite()) {
        return Err(Error::Domain(format!("hardness {h_lambda} must be positive and finite")));
    }
    if !(delta > 0.0 && delta <= 1.0) || tau == 0 {
        return Err(Error::Domain(format!("need delta in (0,1] and tau >= 1 (delta = {delta}, tau = {tau})")));
    }
    let h = h_lambda;
    Ok(2.0 * m as f64 + 12.0 * h * (24.0 * h).ln() + 4.0 * h * (4.0 / (tau as f64 * delta)).ln())
}

/// `sum 1 / Lambda_i^2` over the given radii.
pub fn h_lambda(radii: &[f64]) -> f64 {
    radii.iter().map(|l| 1.0 / (l * l)).sum()
}

/// `m / min Lambda_i^2`, the hardness governing uniform sampling.
pub fn h_uniform(radii: &[f64]) -> f64 {
    let min = radii.iter().copied().fold(f64::INFINITY, f64::min);
    radii.len() as f64 / (min * min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessReport {
    pub lambda: Vec<LambdaBracket>,
    /// From the upper brackets of `lambda`.
    pub h_lambda: f64,
    pub h_uniform: f64,
    pub delta_gap: Option<Vec<f64>>,
    pub h_delta: Option<f64>,
    pub width: Option<f64>,
    pub grid_resolution: f64,
}

/// Full report. Pass `width` for CPE-L classes to also get the reward gaps.
pub fn hardness_report(
    oracle: &dyn Oracle,
    theta_star: &ParameterVector,
    epsilon: f64,
    strategy: ConditionStrategy,
    width: Option<f64>,
) -> Result<HardnessReport> {
    let lambda = compute_lambda(oracle, theta_star, epsilon, strategy)?;
    let uppers: Vec<f64> = lambda.iter().map(|b| b.upper).collect();
    let delta_gap = match width {
        Some(_) => Some(compute_gaps_cpel(oracle, theta_star)?),
        None => None,
    };
    let h_delta = delta_gap
        .as_ref()
        .map(|gaps| gaps.iter().map(|d| 1.0 / (d * d)).sum());
    Ok(HardnessReport {
        h_lambda: h_lambda(&uppers),
        h_uniform: h_uniform(&uppers),
        lambda,
        delta_gap,
        h_delta,
        width,
        grid_resolution: epsilon,
    })
}
