//! Candidate test: does `phi_i` take more than one value over a confidence box?

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::types::{ConfidenceBox, Oracle};

/// Largest `m` for which corner enumeration is attempted.
pub const MAX_CORNER_ARMS: usize = 20;
/// Largest lattice a grid scan will evaluate.
pub const MAX_GRID_POINTS: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionStrategy {
    /// Two oracle calls on the mixed corners. Exact for bi-monotone oracles.
    BiMonotone,
    /// All `2^m` corners. Exact when every `phi_i` attains its extremes at
    /// corners; otherwise a heuristic.
    CornerEnumeration,
    /// Uniform lattice with `resolution` points per axis, corners included.
    /// Heuristic.
    GridScan { resolution: usize },
}

impl ConditionStrategy {
    /// Bi-monotone when the oracle declares it, corners up to
    /// [`MAX_CORNER_ARMS`] arms, otherwise a 5-point grid scan.
    pub fn default_for(oracle: &dyn Oracle) -> Self {
        if oracle.orientation().is_some() {
            ConditionStrategy::BiMonotone
        } else if oracle.arm_count() <= MAX_CORNER_ARMS {
            ConditionStrategy::CornerEnumeration
        } else {
            ConditionStrategy::GridScan { resolution: 5 }
        }
    }

    /// Whether a negative answer is guaranteed correct for this oracle.
    pub fn is_exact_for(&self, oracle: &dyn Oracle) -> bool {
        matches!(self, ConditionStrategy::BiMonotone) && oracle.orientation().is_some()
    }

    pub fn validate(&self, oracle: &dyn Oracle) -> Result<()> {
        let m = oracle.arm_count();
        match *self {
            ConditionStrategy::BiMonotone if oracle.orientation().is_none() => Err(Error::Usage(
                format!("the {} oracle is not declared bi-monotone", oracle.name()),
            )),
            ConditionStrategy::CornerEnumeration if m > MAX_CORNER_ARMS => Err(Error::Capacity {
                what: "corner enumeration arms",
                size: m as u128,
                limit: MAX_CORNER_ARMS as u128,
            }),
            ConditionStrategy::GridScan { resolution } => {
                if resolution < 2 {
                    return Err(Error::Usage("grid scan needs at least 2 points per axis".into()));
                }
                let points = (resolution as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
                if points > MAX_GRID_POINTS {
                    return Err(Error::Capacity {
                        what: "grid scan points",
                        size: points,
                        limit: MAX_GRID_POINTS,
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ConditionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionStrategy::BiMonotone => f.write_str("bi-monotone"),
            ConditionStrategy::CornerEnumeration => f.write_str("corner-enumeration"),
            ConditionStrategy::GridScan { resolution } => write!(f, "grid-scan:{resolution}"),
        }
    }
}

/// Accepts `bi-monotone`, `corner-enumeration`, `grid-scan` (5 points per
/// axis) and `grid-scan:<points>`.
impl FromStr for ConditionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bi-monotone" => Ok(ConditionStrategy::BiMonotone),
            "corner-enumeration" => Ok(ConditionStrategy::CornerEnumeration),
            "grid-scan" => Ok(ConditionStrategy::GridScan { resolution: 5 }),
            other => other
                .strip_prefix("grid-scan:")
                .and_then(|r| r.parse().ok())
                .map(|resolution| ConditionStrategy::GridScan { resolution })
                .ok_or_else(|| {
                    Error::Usage(format!(
                        "unknown condition strategy '{other}' (expected bi-monotone, \
                         corner-enumeration, grid-scan or grid-scan:<points>)"
                    ))
                }),
        }
    }
}

/// Whether `phi_arm` is non-constant over `bx`.
pub fn arm_is_candidate(
    strategy: ConditionStrategy,
    oracle: &dyn Oracle,
    bx: &ConfidenceBox,
    arm: usize,
) -> Result<bool> {
    check_len(oracle.arm_count(), bx.dim())?;
    if arm >= bx.dim() {
        return Err(Error::Usage(format!("arm {arm} out of range for {} arms", bx.dim())));
    }
    strategy.validate(oracle)?;
    Ok(match strategy {
        ConditionStrategy::BiMonotone => {
            let mut scratch = Vec::with_capacity(bx.dim());
            bi_monotone_check(oracle, bx, arm, &mut scratch)
        }
        _ => scan(strategy, oracle, bx)[arm],
    })
}

/// The full candidate set, in increasing arm order.
pub fn candidates(
    strategy: ConditionStrategy,
    oracle: &dyn Oracle,
    bx: &ConfidenceBox,
) -> Result<Vec<usize>> {
    check_len(oracle.arm_count(), bx.dim())?;
    strategy.validate(oracle)?;
    let mut out = Vec::new();
    candidates_into(strategy, oracle, bx, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Unchecked variant for the engine's inner loop; `strategy` must already be
/// validated against `oracle`.
pub(crate) fn candidates_into(
    strategy: ConditionStrategy,
    oracle: &dyn Oracle,
    bx: &ConfidenceBox,
    scratch: &mut Vec<f64>,
    out: &mut Vec<usize>,
) {
    out.clear();
    match strategy {
        ConditionStrategy::BiMonotone => {
            for arm in 0..bx.dim() {
                if bi_monotone_check(oracle, bx, arm, scratch) {
                    out.push(arm);
                }
            }
        }
        _ => {
            let flags = scan(strategy, oracle, bx);
            out.extend(flags.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| i));
        }
    }
}

fn bi_monotone_check(
    oracle: &dyn Oracle,
    bx: &ConfidenceBox,
    arm: usize,
    scratch: &mut Vec<f64>,
) -> bool {
    bx.mixed_corner_into(arm, true, scratch);
    let high = oracle.maximize_coord(scratch, arm);
    bx.mixed_corner_into(arm, false, scratch);
    let low = oracle.maximize_coord(scratch, arm);
    high != low
}

/// Evaluates the full maximizer on every point of the strategy's point set and
/// flags the coordinates that take more than one value.
fn scan(strategy: ConditionStrategy, oracle: &dyn Oracle, bx: &ConfidenceBox) -> Vec<bool> {
    let m = bx.dim();
    let levels: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let (lo, hi) = (bx.lower()[i], bx.upper()[i]);
            match strategy {
                _ if lo == hi => vec![lo],
                ConditionStrategy::GridScan { resolution } => {
                    let steps = (resolution - 1) as f64;
                    (0..resolution)
                        .map(|j| {
                            if j + 1 == resolution {
                                hi
                            } else {
                                lo + (hi - lo) * j as f64 / steps
                            }
                        })
                        .collect()
                }
                _ => vec![lo, hi],
            }
        })
        .collect();

    let mut first: Option<Vec<f64>> = None;
    let mut varies = vec![false; m];
    let mut digits = vec![0usize; m];
    let mut point: Vec<f64> = levels.iter().map(|l| l[0]).collect();
    loop {
        let y = oracle.maximize(&point).0;
        match &first {
            None => first = Some(y),
            Some(f) => {
                for ((v, a), b) in varies.iter_mut().zip(f).zip(&y) {
                    *v |= a != b;
                }
                if varies.iter().all(|v| *v) {
                    return varies;
                }
            }
        }
        let mut pos = 0;
        loop {
            if pos == m {
                return varies;
            }
            digits[pos] += 1;
            if digits[pos] < levels[pos].len() {
                point[pos] = levels[pos][digits[pos]];
                break;
            }
            digits[pos] = 0;
            point[pos] = levels[pos][0];
            pos += 1;
        }
    }
}
