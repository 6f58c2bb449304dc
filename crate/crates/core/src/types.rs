//! Shared domain types: parameter vectors, decisions, confidence boxes and the
//! maximization-oracle abstraction every application plugs into.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Largest decision class `brute_force_maximizer` will enumerate by default.
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 10_000_000;

/// Relative tolerance under which two rewards are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;
const TIE_FLOOR: f64 = 1e-13;

/// Whether two objective values are equal up to floating-point noise.
pub fn ties(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()) + TIE_FLOOR
}

/// A point of the parameter space `[0,1]^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("parameter vector must have at least one component".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::Domain(format!("parameter {i} = {v} lies outside [0,1]")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for ParameterVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ParameterVector> for Vec<f64> {
    fn from(p: ParameterVector) -> Self {
        p.0
    }
}

impl std::ops::Index<usize> for ParameterVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A decision vector `y`. Binary and integer classes are stored as reals; each
/// oracle's `contains` enforces integrality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Decision(pub Vec<f64>);

impl Decision {
    pub fn from_integers<I: IntoIterator<Item = i64>>(values: I) -> Self {
        Self(values.into_iter().map(|v| v as f64).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Lexicographic order on the component sequence.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        lex_cmp(&self.0, &other.0)
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Axis-aligned box `prod [lower_i, upper_i]`, already intersected with `[0,1]^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ConfidenceBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_len(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::Domain("confidence box must have at least one axis".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(0.0 <= *lo && lo <= hi && *hi <= 1.0) {
                return Err(Error::Domain(format!(
                    "axis {i}: need 0 <= lower <= upper <= 1, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The single-point box at `theta`.
    pub fn point(theta: &ParameterVector) -> Self {
        Self {
            lower: theta.as_slice().to_vec(),
            upper: theta.as_slice().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(t, (lo, hi))| lo <= t && t <= hi)
    }

    /// Rewrites the box as `[est - rad, est + rad]` clamped to `[0, cap]`
    /// without revalidating.
    pub(crate) fn refill(&mut self, estimates: &[f64], radii: &[f64], cap: f64) {
        for (((lo, hi), e), r) in self
            .lower
            .iter_mut()
            .zip(self.upper.iter_mut())
            .zip(estimates)
            .zip(radii)
        {
            *lo = (e - r).clamp(0.0, cap);
            *hi = (e + r).clamp(0.0, cap);
        }
    }

    /// Writes the corner that sits at the upper bound on `arm` and at the lower
    /// bound everywhere else (`own_high = true`), or the mirror image.
    pub fn mixed_corner_into(&self, arm: usize, own_high: bool, out: &mut Vec<f64>) {
        let (own, rest) = if own_high {
            (&self.upper, &self.lower)
        } else {
            (&self.lower, &self.upper)
        };
        out.clear();
        out.extend_from_slice(rest);
        out[arm] = own[arm];
    }
}

/// Direction in which a bi-monotone oracle's `i`-th output moves with `theta_i`.
/// The opposite direction applies to every other coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    OwnNonDecreasing,
    OwnNonIncreasing,
}

/// A separable-reward decision problem together with its deterministic
/// tie-breaking maximizer (the leading optimal solution).
pub trait Oracle: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn arm_count(&self) -> usize;

    /// The separable reward term `r_i(theta_i, y_i)`.
    fn term(&self, arm: usize, theta: f64, y: f64) -> f64;

    /// Membership test for the decision class.
    fn contains(&self, y: &[f64]) -> bool;

    /// The leading optimal decision for `theta`. Callers guarantee
    /// `theta.len() == arm_count()` and components in `[0,1]`.
    fn maximize(&self, theta: &[f64]) -> Decision;

    /// `maximize(theta)[arm]`; implementations may override to skip building the
    /// full decision.
    fn maximize_coord(&self, theta: &[f64], arm: usize) -> f64 {
        self.maximize(theta).0[arm]
    }

    /// `Some` when the maximizer is known to be bi-monotone.
    fn orientation(&self) -> Option<Orientation> {
        None
    }

    /// Size of the decision class if it can be enumerated.
    fn decision_count(&self) -> Option<u128> {
        None
    }

    /// Visits every decision of an enumerable class. Returns `false` without
    /// visiting anything if the class is not enumerable.
    fn for_each_decision(&self, _visit: &mut dyn FnMut(&[f64])) -> bool {
        false
    }
}

/// `r(theta; y) = sum_i r_i(theta_i, y_i)`.
pub fn reward(oracle: &dyn Oracle, theta: &ParameterVector, y: &Decision) -> Result<f64> {
    let m = oracle.arm_count();
    check_len(m, theta.len())?;
    check_len(m, y.len())?;
    if !oracle.contains(y.as_slice()) {
        return Err(Error::Domain(format!(
            "decision {y} is not in the {} decision class",
            oracle.name()
        )));
    }
    Ok(reward_unchecked(oracle, theta.as_slice(), y.as_slice()))
}

pub(crate) fn reward_unchecked(oracle: &dyn Oracle, theta: &[f64], y: &[f64]) -> f64 {
    theta
        .iter()
        .zip(y)
        .enumerate()
        .map(|(i, (t, v))| oracle.term(i, *t, *v))
        .sum()
}

fn enumerable(oracle: &dyn Oracle, limit: u128) -> Result<()> {
    match oracle.decision_count() {
        None => Err(Error::Usage(format!(
            "the {} decision class is not enumerable",
            oracle.name()
        ))),
        Some(n) if n > limit => Err(Error::Capacity {
            what: "decision class size",
            size: n,
            limit,
        }),
        Some(_) => Ok(()),
    }
}

/// Exhaustive maximizer used as an independent oracle in tests and audits.
/// Ties (up to [`TIE_TOLERANCE`]) go to the lexicographically smallest decision.
pub fn brute_force_maximizer(
    oracle: &dyn Oracle,
    theta: &ParameterVector,
    limit: u128,
) -> Result<Decision> {
    check_len(oracle.arm_count(), theta.len())?;
    enumerable(oracle, limit)?;
    let theta = theta.as_slice();
    let mut best: Option<(f64, Vec<f64>)> = None;
    oracle.for_each_decision(&mut |y| {
        let r = reward_unchecked(oracle, theta, y);
        let replace = match &best {
            None => true,
            Some((br, by)) => {
                if ties(r, *br) {
                    lex_cmp(y, by) == Ordering::Less
                } else {
                    r > *br
                }
            }
        };
        if replace {
            best = Some((r, y.to_vec()));
        }
    });
    best.map(|(_, y)| Decision(y))
        .ok_or_else(|| Error::Domain(format!("the {} decision class is empty", oracle.name())))
}

/// Every decision whose reward ties the maximum, in lexicographic order.
pub fn optimal_decisions(
    oracle: &dyn Oracle,
    theta: &ParameterVector,
    limit: u128,
) -> Result<Vec<Decision>> {
    check_len(oracle.arm_count(), theta.len())?;
    enumerable(oracle, limit)?;
    let theta = theta.as_slice();
    let mut best = f64::NEG_INFINITY;
    oracle.for_each_decision(&mut |y| {
        best = best.max(reward_unchecked(oracle, theta, y));
    });
    let mut out = Vec::new();
    oracle.for_each_decision(&mut |y| {
        if ties(reward_unchecked(oracle, theta, y), best) {
            out.push(Decision(y.to_vec()));
        }
    });
    out.sort_by(|a, b| a.lex_cmp(b));
    Ok(out)
}

/// Odometer over integer vectors with `lo[i] <= v[i] <= hi[i]`, in
/// lexicographic order. `keep` prunes on the full vector.
pub(crate) fn for_each_integer_vector(
    lo: &[i64],
    hi: &[i64],
    keep: &dyn Fn(&[i64]) -> bool,
    visit: &mut dyn FnMut(&[i64]),
) {
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return;
    }
    let mut v = lo.to_vec();
    loop {
        if keep(&v) {
            visit(&v);
        }
        let mut pos = v.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if v[pos] < hi[pos] {
                v[pos] += 1;
                for (slot, l) in v[pos + 1..].iter_mut().zip(&lo[pos + 1..]) {
                    *slot = *l;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_vector_rejects_out_of_range() {
        assert!(ParameterVector::new(vec![0.5, 1.2]).is_err());
        assert!(ParameterVector::new(vec![]).is_err());
        assert!(ParameterVector::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn box_validation_and_corners() {
        assert!(ConfidenceBox::new(vec![0.5], vec![0.4]).is_err());
        assert!(ConfidenceBox::new(vec![-0.1], vec![0.4]).is_err());
        let b = ConfidenceBox::new(vec![0.1, 0.2, 0.3], vec![0.4, 0.5, 0.6]).unwrap();
        let mut c = Vec::new();
        b.mixed_corner_into(1, true, &mut c);
        assert_eq!(c, vec![0.1, 0.5, 0.3]);
        b.mixed_corner_into(1, false, &mut c);
        assert_eq!(c, vec![0.4, 0.2, 0.6]);
        assert!(b.contains(&[0.2, 0.3, 0.4]));
        assert!(!b.contains(&[0.0, 0.3, 0.4]));
    }

    #[test]
    fn odometer_is_lexicographic() {
        let mut seen = Vec::new();
        for_each_integer_vector(&[0, 1], &[1, 2], &|_| true, &mut |v| seen.push(v.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![1, 1], vec![1, 2]]);
    }

    #[test]
    fn lex_order() {
        let a = Decision(vec![1.0, 4.0]);
        let b = Decision(vec![2.0, 3.0]);
        assert_eq!(a.lex_cmp(&b), Ordering::Less);
        assert_eq!(b.lex_cmp(&a), Ordering::Greater);
        assert_eq!(a.lex_cmp(&a.clone()), Ordering::Equal);
    }
}
