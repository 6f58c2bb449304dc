//! Exact integral optimal sample allocation (OSA) for partitioned sampling.
//!
//! Minimizes `sum_i n_i^2 theta_i / y_i` over positive integers with
//! `sum_i y_i <= k`. The greedy starts from a base vector that no optimum can
//! undercut, then spends the remaining budget on the largest marginal
//! decreases. On a tie in the final step the largest indices win, which makes
//! the output the lexicographically first optimum.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::types::{for_each_integer_vector, ties, Decision, Oracle, Orientation, ParameterVector};

/// Relative distance to an integer below which the base computation treats a
/// value as that integer.
const BASE_FLOOR_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OsaSpec {
    n: Vec<u64>,
    k: u64,
}

impl OsaSpec {
    pub fn new(n: Vec<u64>, k: u64) -> Result<Self> {
        if n.is_empty() {
            return Err(Error::Domain("OSA needs at least one group".into()));
        }
        if n.contains(&0) {
            return Err(Error::Domain("group sizes must be positive".into()));
        }
        if k < n.len() as u64 {
            return Err(Error::Domain(format!(
                "sample budget k = {k} is below the group count {}",
                n.len()
            )));
        }
        Ok(Self { n, k })
    }

    pub fn group_sizes(&self) -> &[u64] {
        &self.n
    }

    pub fn budget(&self) -> u64 {
        self.k
    }

    /// `h(theta; y) = sum n_i^2 theta_i / y_i` (the population factor dropped).
    pub fn objective(&self, theta: &[f64], y: &[u64]) -> f64 {
        self.n
            .iter()
            .zip(theta.iter().zip(y))
            .map(|(n, (t, v))| weight(*n, *t) / *v as f64)
            .sum()
    }
}

fn weight(n: u64, theta: f64) -> f64 {
    let n = n as f64;
    n * n * theta
}

/// Decrease of the objective when group `i` goes from `y` to `y + 1` samples.
fn marginal(w: f64, y: u64) -> f64 {
    let y = y as f64;
    w / (y * (y + 1.0))
}

/// Intermediate quantities of one greedy run, exposed for audits.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOsaScratch {
    /// `1 / sum_j n_j sqrt(theta_j)`, or `None` when every parameter is zero.
    pub normalizer: Option<f64>,
    /// Real-valued optimum `alpha_i = Z n_i sqrt(theta_i) k`.
    pub alpha: Vec<f64>,
    /// Slack `delta_i` each group contributes to lowering the others' base.
    pub slack: Vec<f64>,
    pub base: Vec<u64>,
    /// Unit increments applied on top of the base vector.
    pub increments: u64,
}

#[derive(Debug, PartialEq)]
struct Entry {
    gain: f64,
    arm: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then(self.arm.cmp(&other.arm))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The leading optimal allocation for `theta`.
/// `floor(x)`, except that values within rounding noise of an integer snap to
/// it, so exact integers computed through square roots are not lost.
fn snapped_floor(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= BASE_FLOOR_GUARD * nearest.abs().max(1.0) {
        nearest
    } else {
        x.floor()
    }
}

pub fn greedy_osa(spec: &OsaSpec, theta: &ParameterVector) -> Result<Decision> {
    check_len(spec.n.len(), theta.len())?;
    let (y, _) = greedy_osa_traced(spec, theta.as_slice());
    Ok(Decision::from_integers(y.into_iter().map(|v| v as i64)))
}

/// Runs the greedy and returns the allocation with its scratch values.
/// `theta` must have one component in `[0,1]` per group.
pub fn greedy_osa_traced(spec: &OsaSpec, theta: &[f64]) -> (Vec<u64>, GreedyOsaScratch) {
    let m = spec.n.len();
    let k = spec.k;
    let weights: Vec<f64> = spec.n.iter().zip(theta).map(|(n, t)| weight(*n, *t)).collect();
    let roots: Vec<f64> = spec.n.iter().zip(theta).map(|(n, t)| *n as f64 * t.sqrt()).collect();
    let total: f64 = roots.iter().sum();

    if total == 0.0 {
        // Every allocation ties; the lexicographically first saturating one
        // keeps all groups at one sample and hands the rest to the last group.
        let mut y = vec![1u64; m];
        y[m - 1] += k - m as u64;
        let scratch = GreedyOsaScratch {
            normalizer: None,
            alpha: vec![0.0; m],
            slack: vec![0.0; m],
            base: vec![1; m],
            increments: k - m as u64,
        };
        return (y, scratch);
    }

    let z = 1.0 / total;
    let alpha: Vec<f64> = roots.iter().map(|a| z * a * k as f64).collect();
    let slack: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            let up = a.ceil();
            if up * (up - 1.0) >= a * a {
                0.0
            } else {
                up - a
            }
        })
        .collect();
    let slack_sum: f64 = slack.iter().sum();
    let mut base: Vec<u64> = alpha
        .iter()
        .zip(&slack)
        .map(|(a, d)| {
            let floor = snapped_floor(a - (slack_sum - d));
            if floor >= 1.0 {
                floor as u64
            } else {
                1
            }
        })
        .collect();
    // A group with alpha_i < 1 still takes one sample, budget the relaxation
    // never accounted for; the shifted base can then overshoot an optimum
    // (n = (1,1,3), theta = (0.7,0,0.5), k = 7 gives (1,1,5) against the
    // optimum (2,1,4)). Start from all ones there: the greedy is exact from
    // any safe base, only slower.
    if alpha.iter().any(|a| *a < 1.0) || base.iter().sum::<u64>() > k {
        base = vec![1; m];
    }

    let mut y = base.clone();
    let mut used: u64 = y.iter().sum();
    let mut increments = 0u64;
    let mut heap: BinaryHeap<Entry> = (0..m)
        .map(|i| Entry {
            gain: marginal(weights[i], y[i]),
            arm: i,
        })
        .collect();
    let mut tied: Vec<usize> = Vec::with_capacity(m);
    while used < k {
        let remaining = k - used;
        let top = heap.pop().expect("one heap entry per group");
        tied.clear();
        tied.push(top.arm);
        while heap.peek().is_some_and(|e| ties(e.gain, top.gain)) {
            tied.push(heap.pop().expect("peeked").arm);
        }
        if tied.len() as u64 >= remaining {
            tied.sort_unstable_by(|a, b| b.cmp(a));
            for &i in &tied[..remaining as usize] {
                y[i] += 1;
            }
            increments += remaining;
            break;
        }
        for &i in &tied {
            y[i] += 1;
            heap.push(Entry {
                gain: marginal(weights[i], y[i]),
                arm: i,
            });
        }
        used += tied.len() as u64;
        increments += tied.len() as u64;
    }

    let scratch = GreedyOsaScratch {
        normalizer: Some(z),
        alpha,
        slack,
        base,
        increments,
    };
    (y, scratch)
}

impl Oracle for OsaSpec {
    fn name(&self) -> &'static str {
        "osa"
    }

    fn arm_count(&self) -> usize {
        self.n.len()
    }

    /// `-n_i^2 theta_i / y_i`; maximizing the sum minimizes the OSA objective.
    fn term(&self, arm: usize, theta: f64, y: f64) -> f64 {
        -weight(self.n[arm], theta) / y
    }

    fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.n.len()
            && y.iter().all(|v| *v >= 1.0 && v.fract() == 0.0)
            && y.iter().sum::<f64>() <= self.k as f64
    }

    fn maximize(&self, theta: &[f64]) -> Decision {
        let (y, _) = greedy_osa_traced(self, theta);
        Decision::from_integers(y.into_iter().map(|v| v as i64))
    }

    fn orientation(&self) -> Option<Orientation> {
        Some(Orientation::OwnNonDecreasing)
    }

    /// Enumeration covers the budget-saturating allocations, which contain
    /// every optimum whenever some parameter is nonzero.
    fn decision_count(&self) -> Option<u128> {
        let (top, choose) = (self.k as u128 - 1, self.n.len() as u128 - 1);
        Some((0..choose).fold(1u128, |acc, j| acc * (top - j) / (j + 1)))
    }

    fn for_each_decision(&self, visit: &mut dyn FnMut(&[f64])) -> bool {
        let m = self.n.len();
        let k = self.k as i64;
        let hi = k - m as i64 + 1;
        let mut buf = vec![0.0; m];
        for_each_integer_vector(
            &vec![1; m],
            &vec![hi; m],
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

/// Registered OSA oracle: reward `-sum n_i^2 theta_i / y_i`, maximizer
/// [`greedy_osa`], bi-monotone with `phi_i` non-decreasing in `theta_i`.
pub fn osa_maximizer(spec: &OsaSpec, theta: &ParameterVector) -> Result<Decision> {
    greedy_osa(spec, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{brute_force_maximizer, reward, DEFAULT_ENUMERATION_LIMIT};

    fn pv(v: &[f64]) -> ParameterVector {
        ParameterVector::new(v.to_vec()).unwrap()
    }

    fn ints(d: &Decision) -> Vec<i64> {
        d.0.iter().map(|v| *v as i64).collect()
    }

    /// Independent enumeration over every allocation with sum <= k.
    fn exhaustive(n: &[u64], theta: &[f64], k: u64) -> Vec<u64> {
        let spec = OsaSpec::new(n.to_vec(), k).unwrap();
        let m = n.len();
        let mut best: Option<(f64, Vec<u64>)> = None;
        for_each_integer_vector(
            &vec![1; m],
            &vec![k as i64; m],
            &|v| v.iter().sum::<i64>() <= k as i64,
            &mut |v| {
                let y: Vec<u64> = v.iter().map(|x| *x as u64).collect();
                let h = spec.objective(theta, &y);
                let better = match &best {
                    None => true,
                    Some((bh, by)) => {
                        if ties(h, *bh) {
                            // prefer saturating allocations, then lexicographic order
                            let (s, bs) = (y.iter().sum::<u64>(), by.iter().sum::<u64>());
                            s > bs || (s == bs && y < *by)
                        } else {
                            h < *bh
                        }
                    }
                };
                if better {
                    best = Some((h, y));
                }
            },
        );
        best.unwrap().1
    }

    #[test]
    fn tightness_instance() {
        let spec = OsaSpec::new(vec![20, 1, 1], 33).unwrap();
        let theta = [1.0, 1.0, 1.0];
        let (y, scratch) = greedy_osa_traced(&spec, &theta);
        assert_eq!(y, vec![29, 2, 2]);
        assert_eq!(exhaustive(&[20, 1, 1], &theta, 33), vec![29, 2, 2]);
        assert!((scratch.alpha[1] - 1.5).abs() < 1e-12);
        assert!((scratch.slack[1] - 0.5).abs() < 1e-12);
        assert!((scratch.slack[2] - 0.5).abs() < 1e-12);
        assert_eq!(scratch.slack[0], 0.0);
        assert_eq!(scratch.base[0], 29);
    }

    #[test]
    fn small_examples() {
        let spec = OsaSpec::new(vec![1, 1], 4).unwrap();
        assert_eq!(ints(&greedy_osa(&spec, &pv(&[0.25, 0.25])).unwrap()), vec![2, 2]);

        let spec = OsaSpec::new(vec![1, 1], 5).unwrap();
        let y = greedy_osa(&spec, &pv(&[0.0, 0.0])).unwrap();
        assert_eq!(ints(&y), vec![1, 4]);
        let bf = brute_force_maximizer(&spec, &pv(&[0.0, 0.0]), DEFAULT_ENUMERATION_LIMIT).unwrap();
        assert_eq!(bf, y);

        let spec = OsaSpec::new(vec![1, 1], 6).unwrap();
        assert_eq!(ints(&greedy_osa(&spec, &pv(&[0.25, 0.0])).unwrap()), vec![5, 1]);

        let spec = OsaSpec::new(vec![1, 1, 1], 6).unwrap();
        let bf = brute_force_maximizer(&spec, &pv(&[0.25; 3]), DEFAULT_ENUMERATION_LIMIT).unwrap();
        assert_eq!(ints(&bf), vec![2, 2, 2]);
        assert_eq!(ints(&greedy_osa(&spec, &pv(&[0.25; 3])).unwrap()), vec![2, 2, 2]);
    }

    #[test]
    fn zero_parameter_group_does_not_inflate_the_base() {
        let spec = OsaSpec::new(vec![1, 1, 3], 7).unwrap();
        let theta = [0.7, 0.0, 0.5];
        let (y, scratch) = greedy_osa_traced(&spec, &theta);
        assert_eq!(y, vec![2, 1, 4]);
        assert_eq!(exhaustive(&[1, 1, 3], &theta, 7), vec![2, 1, 4]);
        assert_eq!(scratch.base, vec![1, 1, 1]);
    }

    #[test]
    fn weighted_example_matches_enumeration() {
        // Frozen from the exhaustive enumeration above.
        let theta = [0.36, 0.16, 0.04];
        let expected = exhaustive(&[3, 2, 1], &theta, 9);
        assert_eq!(expected, vec![6, 2, 1]);
        let spec = OsaSpec::new(vec![3, 2, 1], 9).unwrap();
        assert_eq!(ints(&greedy_osa(&spec, &pv(&theta)).unwrap()), vec![6, 2, 1]);
    }

    #[test]
    fn reward_sign_and_value() {
        let spec = OsaSpec::new(vec![1, 1], 4).unwrap();
        let r = reward(&spec, &pv(&[0.2, 0.1]), &Decision(vec![2.0, 2.0])).unwrap();
        assert!((r + 0.15).abs() < 1e-15);
        assert!(reward(&spec, &pv(&[0.2, 0.1]), &Decision(vec![3.0, 2.0])).is_err());
        assert!(reward(&spec, &pv(&[0.2, 0.1]), &Decision(vec![0.0, 2.0])).is_err());
    }

    #[test]
    fn budget_below_group_count_is_rejected() {
        assert!(matches!(OsaSpec::new(vec![1, 1, 1], 2), Err(Error::Domain(_))));
        assert!(OsaSpec::new(vec![1, 0], 4).is_err());
        let spec = OsaSpec::new(vec![1, 1], 4).unwrap();
        assert!(matches!(greedy_osa(&spec, &pv(&[0.1])), Err(Error::Dimension { .. })));
    }

    #[test]
    fn own_parameter_never_lowers_own_allocation() {
        let spec = OsaSpec::new(vec![1, 1], 6).unwrap();
        for other in 0..=10 {
            let mut prev = 0.0;
            for own in 1..=9 {
                let y = greedy_osa(&spec, &pv(&[own as f64 / 10.0, other as f64 / 10.0])).unwrap();
                assert!(y.0[0] >= prev);
                prev = y.0[0];
            }
        }
    }

    #[test]
    fn single_group_takes_whole_budget() {
        let spec = OsaSpec::new(vec![3], 7).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(ints(&greedy_osa(&spec, &pv(&[t])).unwrap()), vec![7]);
        }
    }
}
