//! Unbiased mean/variance estimators and the confidence radius used by COCI.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::types::ConfidenceBox;

/// Which statistic of an arm's distribution is the unknown parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Mean,
    Variance,
}

impl EstimatorKind {
    /// Initialization pulls per arm (`tau`): the fewest samples the estimator accepts.
    pub fn tau(self) -> u32 {
        match self {
            EstimatorKind::Mean => 1,
            EstimatorKind::Variance => 2,
        }
    }
}

/// Variance estimates within this distance below zero are cancellation noise.
const NEGATIVE_VARIANCE_SLACK: f64 = 1e-15;

pub fn estimate(kind: EstimatorKind, samples: &[f64]) -> Result<f64> {
    let s = samples.len();
    if s < kind.tau() as usize {
        return Err(Error::Usage(format!(
            "{kind:?} estimator needs at least {} samples, got {s}",
            kind.tau()
        )));
    }
    if let Some(x) = samples.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!("sample {x} lies outside [0,1]")));
    }
    let mut acc = SampleMoments::default();
    samples.iter().for_each(|x| acc.push(*x));
    acc.estimate(kind)
}

/// Running sums sufficient for both estimators.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleMoments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl SampleMoments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn estimate(&self, kind: EstimatorKind) -> Result<f64> {
        let s = self.count as f64;
        if self.count < kind.tau() as u64 {
            return Err(Error::Usage(format!(
                "{kind:?} estimator needs at least {} samples, got {}",
                kind.tau(),
                self.count
            )));
        }
        Ok(match kind {
            EstimatorKind::Mean => (self.sum / s).clamp(0.0, 1.0),
            EstimatorKind::Variance => {
                let v = (self.sum_sq - self.sum * self.sum / s) / (s - 1.0);
                if v < 0.0 {
                    if v < -NEGATIVE_VARIANCE_SLACK * s.max(1.0) {
                        return Err(Error::Internal(format!("variance estimate {v} < 0")));
                    }
                    0.0
                } else {
                    v.min(1.0)
                }
            }
        })
    }
}

/// `sqrt(ln(4 t^3 / (tau * delta)) / (2 T))` with the natural logarithm.
pub fn confidence_radius(t: u64, pulls: u64, tau: u32, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0,1)")));
    }
    if t == 0 || pulls < tau as u64 || tau == 0 {
        return Err(Error::Usage(format!(
            "radius needs t >= 1 and pulls >= tau (t = {t}, pulls = {pulls}, tau = {tau})"
        )));
    }
    Ok(radius_unchecked(t, pulls, tau, delta))
}

pub(crate) fn radius_unchecked(t: u64, pulls: u64, tau: u32, delta: f64) -> f64 {
    let t = t as f64;
    let arg = 4.0 * t * t * t / (tau as f64 * delta);
    (arg.ln() / (2.0 * pulls as f64)).sqrt()
}

/// `[max(0, est - rad), min(1, est + rad)]` per axis. With `cap` set, upper
/// bounds are additionally clamped at `cap` (0.25 for variances of `[0,1]` data).
pub fn clamp_box(estimates: &[f64], radii: &[f64], cap: Option<f64>) -> Result<ConfidenceBox> {
    check_len(estimates.len(), radii.len())?;
    if let Some(r) = radii.iter().find(|r| r.is_nan() || **r <= 0.0) {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    let hi_cap = cap.unwrap_or(1.0).min(1.0);
    let lower = estimates
        .iter()
        .zip(radii)
        .map(|(e, r)| (e - r).clamp(0.0, hi_cap))
        .collect();
    let upper = estimates
        .iter()
        .zip(radii)
        .map(|(e, r)| (e + r).clamp(0.0, hi_cap))
        .collect();
    ConfidenceBox::new(lower, upper)
}
