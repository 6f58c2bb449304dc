//! Deterministic maximization oracles for top-k selection (CPE-L) and
//! discretized water-resource planning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{for_each_integer_vector, ties, Decision, Oracle, Orientation};

/// Select exactly `k` of `m` arms, reward `sum theta_i * y_i`. `k = 1` is
/// best-arm identification.
/// Width of every top-k (and best-arm) decision class.
pub const TOP_K_WIDTH: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopK {
    m: usize,
    k: usize,
}

impl TopK {
    pub fn new(m: usize, k: usize) -> Result<Self> {
        if m == 0 || k == 0 || k > m {
            return Err(Error::Domain(format!("top-k needs 1 <= k <= m, got m = {m}, k = {k}")));
        }
        Ok(Self { m, k })
    }

    pub fn best_arm(m: usize) -> Result<Self> {
        Self::new(m, 1)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Exchange-class width of the "exactly k" class: one arm in, one arm out.
    pub fn width(&self) -> f64 {
        TOP_K_WIDTH
    }

    /// Arm `i` is selected iff fewer than `k` arms outrank it, where `j`
    /// outranks `i` on a larger parameter or on an equal one with smaller index.
    fn selected(&self, theta: &[f64], i: usize) -> bool {
        let ti = theta[i];
        let ahead = theta
            .iter()
            .enumerate()
            .filter(|&(j, &tj)| tj > ti || (tj == ti && j < i))
            .count();
        ahead < self.k
    }
}

impl Oracle for TopK {
    fn name(&self) -> &'static str {
        if self.k == 1 {
            "best-arm"
        } else {
            "top-k"
        }
    }

    fn arm_count(&self) -> usize {
        self.m
    }

    fn term(&self, _arm: usize, theta: f64, y: f64) -> f64 {
        theta * y
    }

    fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.m
            && y.iter().all(|v| *v == 0.0 || *v == 1.0)
            && y.iter().filter(|v| **v == 1.0).count() == self.k
    }

    fn maximize(&self, theta: &[f64]) -> Decision {
        let mut order: Vec<usize> = (0..self.m).collect();
        // stable sort on descending parameter keeps smaller indices first on ties
        order.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]));
        let mut y = vec![0.0; self.m];
        for &i in &order[..self.k] {
            y[i] = 1.0;
        }
        Decision(y)
    }

    fn maximize_coord(&self, theta: &[f64], arm: usize) -> f64 {
        if self.selected(theta, arm) {
            1.0
        } else {
            0.0
        }
    }

    fn orientation(&self) -> Option<Orientation> {
        Some(Orientation::OwnNonDecreasing)
    }

    fn decision_count(&self) -> Option<u128> {
        let (m, k) = (self.m as u128, self.k as u128);
        Some((0..k).fold(1u128, |acc, j| acc * (m - j) / (j + 1)))
    }

    fn for_each_decision(&self, visit: &mut dyn FnMut(&[f64])) -> bool {
        let k = self.k as i64;
        let mut buf = vec![0.0; self.m];
        for_each_integer_vector(
            &vec![0; self.m],
            &vec![1; self.m],
            &|v| v.iter().sum::<i64>() == k,
            &mut |v| {
                for (b, x) in buf.iter_mut().zip(v) {
                    *b = *x as f64;
                }
                visit(&buf);
            },
        );
        true
    }
}

/// Cost `f(y) = coef * y^exponent` of removing `y` pounds at one source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostFn {
    pub coef: f64,
    pub exponent: f64,
}

/// Monotonicity of a cost function's derivative on `y > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeTrend {
    Increasing,
    Decreasing,
    Constant,
}

impl CostFn {
    pub fn quadratic(coef: f64) -> Self {
        Self { coef, exponent: 2.0 }
    }

    pub fn zero() -> Self {
        Self { coef: 0.0, exponent: 1.0 }
    }

    pub fn eval(&self, y: f64) -> f64 {
        if self.coef == 0.0 {
            0.0
        } else {
            self.coef * y.powf(self.exponent)
        }
    }

    pub fn derivative_trend(&self) -> DerivativeTrend {
        let curvature = self.coef * self.exponent * (self.exponent - 1.0);
        if curvature > 0.0 {
            DerivativeTrend::Increasing
        } else if curvature < 0.0 {
            DerivativeTrend::Decreasing
        } else {
            DerivativeTrend::Constant
        }
    }
}

/// Maximize `sum theta_i y_i - sum f_i(y_i)` subject to `sum y_i >= b` and
/// `0 <= y_i <= c_i`, with every `y_i` on the grid `{0, step, 2 step, ...}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterSpec {
    threshold: f64,
    caps: Vec<f64>,
    costs: Vec<CostFn>,
    grid_step: f64,
    threshold_units: usize,
    cap_units: Vec<usize>,
    cost_table: Vec<Vec<f64>>,
    orientation: Option<Orientation>,
}

/// Lattice used by the tightness/monotonicity sweep.
const SWEEP_LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const SWEEP_LIMIT: usize = 100_000;

fn grid_units(value: f64, step: f64, what: &str) -> Result<usize> {
    let units = value / step;
    let rounded = units.round();
    if value < 0.0 || !value.is_finite() || (units - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::Domain(format!(
            "{what} = {value} is not a non-negative multiple of the grid step {step}"
        )));
    }
    Ok(rounded as usize)
}

impl WaterSpec {
    pub fn new(threshold: f64, caps: Vec<f64>, costs: Vec<CostFn>, grid_step: f64) -> Result<Self> {
        if caps.is_empty() {
            return Err(Error::Domain("water planning needs at least one source".into()));
        }
        if caps.len() != costs.len() {
            return Err(Error::Dimension {
                expected: caps.len(),
                got: costs.len(),
            });
        }
        if !(grid_step > 0.0 && grid_step.is_finite()) {
            return Err(Error::Domain(format!("grid step {grid_step} must be positive")));
        }
        let threshold_units = grid_units(threshold, grid_step, "threshold b")?;
        let cap_units = caps
            .iter()
            .map(|c| grid_units(*c, grid_step, "cap c_i"))
            .collect::<Result<Vec<_>>>()?;
        if cap_units.iter().sum::<usize>() < threshold_units {
            return Err(Error::Domain(format!(
                "infeasible: caps sum to {} < threshold {threshold}",
                caps.iter().sum::<f64>()
            )));
        }
        let cost_table = cap_units
            .iter()
            .zip(&costs)
            .map(|(&u, f)| (0..=u).map(|q| f.eval(q as f64 * grid_step)).collect())
            .collect();
        let mut spec = Self {
            threshold,
            caps,
            costs,
            grid_step,
            threshold_units,
            cap_units,
            cost_table,
            orientation: None,
        };
        spec.orientation = spec.sweep_bi_monotone();
        Ok(spec)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn caps(&self) -> &[f64] {
        &self.caps
    }

    pub fn costs(&self) -> &[CostFn] {
        &self.costs
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    fn value(&self, arm: usize, theta: f64, units: usize) -> f64 {
        theta * (units as f64 * self.grid_step) - self.cost_table[arm][units]
    }

    /// Allocation in grid units: suffix DP over the remaining required
    /// allocation (clamped at zero), then a forward pass that takes the
    /// smallest optimal amount at each source.
    fn solve_units(&self, theta: &[f64]) -> Vec<usize> {
        let m = self.caps.len();
        let width = self.threshold_units + 1;
        let mut best = vec![f64::NEG_INFINITY; (m + 1) * width];
        best[m * width] = 0.0;
        for i in (0..m).rev() {
            for need in 0..width {
                let mut top = f64::NEG_INFINITY;
                for u in 0..=self.cap_units[i] {
                    let rest = best[(i + 1) * width + need.saturating_sub(u)];
                    if rest == f64::NEG_INFINITY {
                        continue;
                    }
                    top = top.max(self.value(i, theta[i], u) + rest);
                }
                best[i * width + need] = top;
            }
        }
        let mut need = self.threshold_units;
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            let target = best[i * width + need];
            let chosen = (0..=self.cap_units[i])
                .find(|&u| {
                    let rest = best[(i + 1) * width + need.saturating_sub(u)];
                    if rest == f64::NEG_INFINITY {
                        return false;
                    }
                    let v = self.value(i, theta[i], u) + rest;
                    v >= target || ties(v, target)
                })
                .expect("feasible spec always has an optimal continuation");
            need = need.saturating_sub(chosen);
            out.push(chosen);
        }
        out
    }

    /// Conservative bi-monotonicity check: every cost derivative strictly
    /// monotone in a shared direction, the threshold tight at every lattice
    /// point of the sweep, and coordinate monotonicity along lattice edges.
    fn sweep_bi_monotone(&self) -> Option<Orientation> {
        let trends: Vec<_> = self.costs.iter().map(CostFn::derivative_trend).collect();
        let shared = trends[0];
        if shared == DerivativeTrend::Constant || trends.iter().any(|t| *t != shared) {
            return None;
        }
        let m = self.caps.len();
        let levels = SWEEP_LEVELS.len();
        let points = levels.checked_pow(m as u32).filter(|p| *p <= SWEEP_LIMIT)?;
        let b_units = self.threshold_units;

        let index_of = |digits: &[usize]| digits.iter().rev().fold(0, |acc, d| acc * levels + d);
        let mut solutions = Vec::with_capacity(points);
        let mut digits = vec![0usize; m];
        let mut theta = vec![0.0; m];
        for code in 0..points {
            let mut c = code;
            for d in digits.iter_mut() {
                *d = c % levels;
                c /= levels;
            }
            for (t, d) in theta.iter_mut().zip(&digits) {
                *t = SWEEP_LEVELS[*d];
            }
            let y = self.solve_units(&theta);
            if y.iter().sum::<usize>() != b_units {
                return None;
            }
            solutions.push(y);
        }

        let mut up_ok = true;
        let mut down_ok = true;
        for (code, y) in solutions.iter().enumerate() {
            let mut c = code;
            for d in digits.iter_mut() {
                *d = c % levels;
                c /= levels;
            }
            for i in 0..m {
                if digits[i] + 1 == levels {
                    continue;
                }
                digits[i] += 1;
                let raised = &solutions[index_of(&digits)];
                digits[i] -= 1;
                for j in 0..m {
                    let (before, after) = (y[j], raised[j]);
                    if i == j {
                        up_ok &= after >= before;
                        down_ok &= after <= before;
                    } else {
                        up_ok &= after <= before;
                        down_ok &= after >= before;
                    }
                }
            }
        }
        if up_ok {
            Some(Orientation::OwnNonDecreasing)
        } else if down_ok {
            Some(Orientation::OwnNonIncreasing)
        } else {
            None
        }
    }
}

/// Whether the water oracle is certified bi-monotone (see [`WaterSpec::new`]).
pub fn water_bi_monotone(spec: &WaterSpec) -> bool {
    spec.orientation.is_some()
}

impl Oracle for WaterSpec {
    fn name(&self) -> &'static str {
        "water"
    }

    fn arm_count(&self) -> usize {
        self.caps.len()
    }

    fn term(&self, arm: usize, theta: f64, y: f64) -> f64 {
        theta * y - self.costs[arm].eval(y)
    }

    fn contains(&self, y: &[f64]) -> bool {
        if y.len() != self.caps.len() {
            return false;
        }
        let mut total = 0usize;
        for (v, cap) in y.iter().zip(&self.cap_units) {
            match grid_units(*v, self.grid_step, "y") {
                Ok(u) if u <= *cap => total += u,
                _ => return false,
            }
        }
        total >= self.threshold_units
    }

    fn maximize(&self, theta: &[f64]) -> Decision {
        Decision(
            self.solve_units(theta)
                .into_iter()
                .map(|u| u as f64 * self.grid_step)
                .collect(),
        )
    }

    fn orientation(&self) -> Option<Orientation> {
        self.orientation
    }

    fn decision_count(&self) -> Option<u128> {
        Some(self.cap_units.iter().map(|u| *u as u128 + 1).product())
    }

    fn for_each_decision(&self, visit: &mut dyn FnMut(&[f64])) -> bool {
        let hi: Vec<i64> = self.cap_units.iter().map(|u| *u as i64).collect();
        let need = self.threshold_units as i64;
        let step = self.grid_step;
        let mut buf = vec![0.0; hi.len()];
        for_each_integer_vector(
            &vec![0; hi.len()],
            &hi,
            &|v| v.iter().sum::<i64>() >= need,
            &mut |v| {
                for (b, u) in buf.iter_mut().zip(v) {
                    *b = *u as f64 * step;
                }
                visit(&buf);
            },
        );
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{brute_force_maximizer, reward, ParameterVector, DEFAULT_ENUMERATION_LIMIT};

    fn pv(v: &[f64]) -> ParameterVector {
        ParameterVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn top_k_examples() {
        let o = TopK::new(3, 1).unwrap();
        assert_eq!(o.maximize(&[0.8, 0.2, 0.5]).0, vec![1.0, 0.0, 0.0]);
        let o = TopK::new(3, 2).unwrap();
        assert_eq!(o.maximize(&[0.5, 0.5, 0.5]).0, vec![1.0, 1.0, 0.0]);
        let o = TopK::new(4, 2).unwrap();
        assert_eq!(o.maximize(&[0.1, 0.9, 0.3, 0.7]).0, vec![0.0, 1.0, 0.0, 1.0]);
        let bf = brute_force_maximizer(&o, &pv(&[0.1, 0.9, 0.3, 0.7]), DEFAULT_ENUMERATION_LIMIT)
            .unwrap();
        assert_eq!(bf.0, vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn top_k_coord_matches_full_decision() {
        let o = TopK::new(5, 2).unwrap();
        let thetas = [
            [0.3, 0.3, 0.3, 0.1, 0.9],
            [0.0, 0.0, 0.0, 0.0, 0.0],
            [0.5, 0.4, 0.5, 0.4, 0.5],
        ];
        for th in thetas {
            let full = o.maximize(&th);
            for i in 0..5 {
                assert_eq!(o.maximize_coord(&th, i), full.0[i]);
            }
        }
    }

    #[test]
    fn top_k_rejects_bad_sizes() {
        assert!(TopK::new(3, 0).is_err());
        assert!(TopK::new(3, 4).is_err());
        assert!(TopK::new(0, 0).is_err());
        assert_eq!(TopK::new(5, 2).unwrap().decision_count(), Some(10));
    }

    #[test]
    fn linear_reward_examples() {
        let o = TopK::new(2, 1).unwrap();
        assert_eq!(reward(&o, &pv(&[0.5, 0.5]), &Decision(vec![1.0, 0.0])).unwrap(), 0.5);
        let o = TopK::new(2, 2).unwrap();
        assert_eq!(reward(&o, &pv(&[0.0, 0.0]), &Decision(vec![1.0, 1.0])).unwrap(), 0.0);
        assert!(matches!(
            reward(&o, &pv(&[0.0, 0.0]), &Decision(vec![1.0, 0.0])),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            reward(&o, &pv(&[0.0]), &Decision(vec![1.0, 1.0])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn brute_force_examples() {
        let o = TopK::best_arm(2).unwrap();
        let y = brute_force_maximizer(&o, &pv(&[0.8, 0.2]), DEFAULT_ENUMERATION_LIMIT).unwrap();
        assert_eq!(y.0, vec![1.0, 0.0]);
        let o = TopK::new(3, 2).unwrap();
        let y = brute_force_maximizer(&o, &pv(&[0.9, 0.1, 0.5]), DEFAULT_ENUMERATION_LIMIT).unwrap();
        assert_eq!(y.0, vec![1.0, 0.0, 1.0]);
        assert!(matches!(
            brute_force_maximizer(&TopK::new(30, 15).unwrap(), &pv(&[0.5; 30]), 1000),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn water_examples() {
        let w = WaterSpec::new(0.0, vec![1.0], vec![CostFn::quadratic(1.0)], 0.25).unwrap();
        assert_eq!(w.maximize(&[1.0]).0, vec![0.5]);

        let w = WaterSpec::new(2.0, vec![1.0, 1.0], vec![CostFn::zero(); 2], 0.5).unwrap();
        for th in [[0.0, 0.0], [0.3, 0.9], [1.0, 1.0]] {
            assert_eq!(w.maximize(&th).0, vec![1.0, 1.0]);
        }

        let w = WaterSpec::new(1.0, vec![1.0, 1.0], vec![CostFn::quadratic(0.5); 2], 0.5).unwrap();
        assert_eq!(w.maximize(&[1.0, 0.0]).0, vec![1.0, 0.0]);
        let bf = brute_force_maximizer(&w, &pv(&[1.0, 0.0]), DEFAULT_ENUMERATION_LIMIT).unwrap();
        assert_eq!(bf.0, vec![1.0, 0.0]);
    }

    #[test]
    fn water_validation() {
        assert!(WaterSpec::new(3.0, vec![1.0, 1.0], vec![CostFn::zero(); 2], 0.5).is_err());
        assert!(WaterSpec::new(0.3, vec![1.0], vec![CostFn::zero()], 0.25).is_err());
        assert!(WaterSpec::new(0.5, vec![1.0], vec![CostFn::zero()], 0.0).is_err());
        assert!(WaterSpec::new(0.5, vec![1.0, 1.0], vec![CostFn::zero()], 0.5).is_err());
        let w = WaterSpec::new(1.0, vec![1.0, 1.0], vec![CostFn::zero(); 2], 0.5).unwrap();
        assert!(w.contains(&[0.5, 0.5]));
        assert!(!w.contains(&[0.5, 0.0]));
        assert!(!w.contains(&[0.25, 1.0]));
        assert!(!w.contains(&[1.5, 0.0]));
    }

    #[test]
    fn water_bi_monotone_examples() {
        let tight = WaterSpec::new(1.8, vec![1.0, 1.0], vec![CostFn::quadratic(1.0); 2], 0.1).unwrap();
        assert!(water_bi_monotone(&tight));
        assert_eq!(tight.orientation(), Some(Orientation::OwnNonDecreasing));

        let slack = WaterSpec::new(0.0, vec![1.0, 1.0], vec![CostFn::zero(); 2], 0.25).unwrap();
        assert!(!water_bi_monotone(&slack));

        let mixed = WaterSpec::new(
            1.8,
            vec![1.0, 1.0],
            vec![CostFn::quadratic(1.0), CostFn { coef: 1.0, exponent: 0.5 }],
            0.1,
        )
        .unwrap();
        assert!(!water_bi_monotone(&mixed));
    }
}
