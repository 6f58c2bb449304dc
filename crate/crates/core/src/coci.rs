//! The COCI engine (Consistently Optimal Confidence Interval) and its
//! uniform-sampling ablation.
//!
//! After `tau` pulls per arm, every round computes the candidate set over the
//! previous round's confidence box. The run stops when no arm is a candidate;
//! otherwise it pulls the candidate with the widest radius (uniform mode: the
//! widest radius among all arms) and recomputes every radius, since radii
//! depend on the round index as well as on the pull counts.

use serde::{Deserialize, Serialize};

use crate::condition::{candidates_into, ConditionStrategy};
use crate::error::{Error, Result};
use crate::estimators::{clamp_box, radius_unchecked, EstimatorKind, SampleMoments};
use crate::hardness::sample_complexity_bound;
use crate::instance::ProblemInstance;
use crate::sim::ArmStreams;
use crate::types::{ConfidenceBox, Decision};

/// Round cap used when no hardness value is available.
pub const DEFAULT_MAX_ROUNDS: u64 = 1_000_000;

/// Which arm a non-stopping round pulls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingRule {
    /// Widest radius among the candidates.
    Adaptive,
    /// Widest radius among all arms (round-robin).
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub delta: f64,
    pub strategy: ConditionStrategy,
    pub seed: u64,
    /// Cap on total samples; `None` means 10x the sample-complexity bound when
    /// `h_lambda` is set, else [`DEFAULT_MAX_ROUNDS`].
    pub max_rounds: Option<u64>,
    /// Consistent optimality hardness, used for the bound and the default cap.
    pub h_lambda: Option<f64>,
    pub record_trace: bool,
    /// Clamp variance boxes to `[0, 0.25]` instead of `[0, 1]`.
    pub variance_cap: bool,
}

impl RunOptions {
    pub fn new(delta: f64, strategy: ConditionStrategy, seed: u64) -> Self {
        Self {
            delta,
            strategy,
            seed,
            max_rounds: None,
            h_lambda: None,
            record_trace: false,
            variance_cap: false,
        }
    }

    pub fn with_max_rounds(mut self, max_rounds: u64) -> Self {
        self.max_rounds = Some(max_rounds);
        self
    }

    pub fn with_h_lambda(mut self, h_lambda: f64) -> Self {
        self.h_lambda = Some(h_lambda);
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }
}

/// State after round `t` (record for `t = tau m` is the post-initialization
/// state, with no pull and no candidate set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: u64,
    pub arm: Option<usize>,
    pub observation: Option<f64>,
    pub estimates: Vec<f64>,
    pub radii: Vec<f64>,
    pub candidates: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub output: Decision,
    /// Total samples taken.
    pub rounds: u64,
    pub per_arm_pulls: Vec<u64>,
    pub correct: bool,
    /// `false` when the round cap was hit before the candidate set emptied.
    pub converged: bool,
    pub bound_value: Option<f64>,
    /// Whether every estimate stayed within its radius of the truth at every round.
    pub xi_held: bool,
    pub trace: Option<Vec<RoundRecord>>,
}

/// Per-round algorithm state.
#[derive(Debug, Clone)]
pub struct CociState {
    pub t: u64,
    pub pulls: Vec<u64>,
    pub estimates: Vec<f64>,
    pub radii: Vec<f64>,
    pub confidence_box: ConfidenceBox,
    pub candidates: Vec<usize>,
    moments: Vec<SampleMoments>,
    kind: EstimatorKind,
    delta: f64,
    cap: f64,
}

impl CociState {
    fn initialize(
        instance: &ProblemInstance,
        streams: &mut ArmStreams,
        delta: f64,
        cap: f64,
    ) -> Result<Self> {
        let m = instance.arm_count();
        let kind = instance.estimator();
        let tau = kind.tau();
        let mut moments = vec![SampleMoments::default(); m];
        for (i, (acc, model)) in moments.iter_mut().zip(instance.arms()).enumerate() {
            for _ in 0..tau {
                acc.push(streams.draw(i, model));
            }
        }
        let estimates = moments
            .iter()
            .map(|acc| acc.estimate(kind).map(|e| e.min(cap)))
            .collect::<Result<Vec<_>>>()?;
        let t = tau as u64 * m as u64;
        let radii = vec![radius_unchecked(t, tau as u64, tau, delta); m];
        let confidence_box = clamp_box(&estimates, &radii, Some(cap))?;
        Ok(Self {
            t,
            pulls: vec![tau as u64; m],
            estimates,
            radii,
            confidence_box,
            candidates: Vec::with_capacity(m),
            moments,
            kind,
            delta,
            cap,
        })
    }

    fn record(&self, arm: Option<usize>, observation: Option<f64>, candidates: Option<usize>) -> RoundRecord {
        RoundRecord {
            t: self.t,
            arm,
            observation,
            estimates: self.estimates.clone(),
            radii: self.radii.clone(),
            candidates,
        }
    }

    fn covers(&self, truth: &[f64]) -> bool {
        self.estimates
            .iter()
            .zip(&self.radii)
            .zip(truth)
            .all(|((e, r), t)| (e - t).abs() <= *r)
    }

    /// Advances to round `t + 1` by pulling `arm` and observing `x`.
    fn absorb(&mut self, arm: usize, x: f64) -> Result<()> {
        self.t += 1;
        self.pulls[arm] += 1;
        self.moments[arm].push(x);
        self.estimates[arm] = self.moments[arm].estimate(self.kind)?.min(self.cap);
        let tau = self.kind.tau();
        for (r, n) in self.radii.iter_mut().zip(&self.pulls) {
            *r = radius_unchecked(self.t, *n, tau, self.delta);
        }
        self.confidence_box.refill(&self.estimates, &self.radii, self.cap);
        Ok(())
    }
}

/// Runs COCI (adaptive candidate sampling).
pub fn run_coci(instance: &ProblemInstance, options: &RunOptions) -> Result<RunResult> {
    run(instance, options, SamplingRule::Adaptive)
}

/// Runs the uniform-sampling variant: same stopping rule, but every round pulls
/// the arm with the widest radius among all arms.
pub fn run_uniform(instance: &ProblemInstance, options: &RunOptions) -> Result<RunResult> {
    run(instance, options, SamplingRule::Uniform)
}

pub fn run(instance: &ProblemInstance, options: &RunOptions, rule: SamplingRule) -> Result<RunResult> {
    let delta = options.delta;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0,1)")));
    }
    let oracle = instance.oracle();
    options.strategy.validate(oracle)?;
    let m = instance.arm_count();
    let kind = instance.estimator();
    let tau = kind.tau();
    let init_rounds = tau as u64 * m as u64;

    let bound_value = match options.h_lambda {
        Some(h) => Some(sample_complexity_bound(h, m, tau, delta)?),
        None => None,
    };
    let max_rounds = options.max_rounds.unwrap_or_else(|| match bound_value {
        Some(b) => (10.0 * b).ceil() as u64,
        None => DEFAULT_MAX_ROUNDS,
    });
    if max_rounds < init_rounds {
        return Err(Error::Usage(format!(
            "max_rounds = {max_rounds} is below the {init_rounds} initialization pulls"
        )));
    }
    let cap = if options.variance_cap && kind == EstimatorKind::Variance {
        0.25
    } else {
        1.0
    };

    let truth = instance.true_params().as_slice();
    let mut streams = ArmStreams::new(options.seed, m);
    let mut state = CociState::initialize(instance, &mut streams, delta, cap)?;
    let mut xi_held = state.covers(truth);
    let mut trace = options.record_trace.then(|| vec![state.record(None, None, None)]);
    let mut scratch = Vec::with_capacity(m);

    let converged = loop {
        candidates_into(
            options.strategy,
            oracle,
            &state.confidence_box,
            &mut scratch,
            &mut state.candidates,
        );
        if state.candidates.is_empty() {
            break true;
        }
        if state.t >= max_rounds {
            break false;
        }
        let pool: &[usize] = match rule {
            SamplingRule::Adaptive => &state.candidates,
            SamplingRule::Uniform => &[],
        };
        let arm = widest(&state.radii, pool);
        let x = streams.draw(arm, &instance.arms()[arm]);
        let candidate_count = state.candidates.len();
        state.absorb(arm, x)?;
        xi_held &= state.covers(truth);
        if let Some(trace) = trace.as_mut() {
            trace.push(state.record(Some(arm), Some(x), Some(candidate_count)));
        }
    };

    let output = if converged {
        oracle.maximize(state.confidence_box.lower())
    } else {
        oracle.maximize(&state.estimates)
    };
    let correct = &output == instance.optimum();
    Ok(RunResult {
        output,
        rounds: state.t,
        per_arm_pulls: state.pulls,
        correct,
        converged,
        bound_value,
        xi_held,
        trace,
    })
}

/// Arm with the largest radius in `pool` (all arms when `pool` is empty);
/// ties go to the lowest index.
fn widest(radii: &[f64], pool: &[usize]) -> usize {
    let mut best: Option<usize> = None;
    let mut consider = |i: usize| {
        if best.is_none_or(|b| radii[i] > radii[b] || (radii[i] == radii[b] && i < b)) {
            best = Some(i);
        }
    };
    if pool.is_empty() {
        (0..radii.len()).for_each(&mut consider);
    } else {
        pool.iter().copied().for_each(&mut consider);
    }
    best.expect("at least one arm")
}

/// Re-checks the concentration event on a recorded trace: every estimate
/// within its radius of `truth` at every round from `tau m` on.
pub fn audit_xi(trace: &[RoundRecord], init_rounds: u64, truth: &[f64]) -> Result<bool> {
    check_trace(trace, init_rounds, truth.len())?;
    Ok(trace.iter().all(|rec| {
        rec.estimates
            .iter()
            .zip(&rec.radii)
            .zip(truth)
            .all(|((e, r), t)| (e - t).abs() <= *r)
    }))
}

/// Rounds `t > tau m` in which an arm `i` was pulled although its radius after
/// round `t - 1` was already below `threshold[i]` (normally `Lambda_i / 2`).
pub fn narrow_pulls(trace: &[RoundRecord], init_rounds: u64, threshold: &[f64]) -> Result<Vec<(u64, usize)>> {
    check_trace(trace, init_rounds, threshold.len())?;
    Ok(trace
        .windows(2)
        .filter_map(|w| {
            let arm = w[1].arm?;
            (w[0].radii[arm] < threshold[arm]).then_some((w[1].t, arm))
        })
        .collect())
}

fn check_trace(trace: &[RoundRecord], init_rounds: u64, m: usize) -> Result<()> {
    let first = trace
        .first()
        .ok_or_else(|| Error::Usage("trace is empty".into()))?;
    if first.t != init_rounds {
        return Err(Error::Usage(format!(
            "trace starts at round {}, expected the initialization round {init_rounds}",
            first.t
        )));
    }
    for (k, rec) in trace.iter().enumerate() {
        if rec.t != init_rounds + k as u64 {
            return Err(Error::Usage(format!("trace is truncated before round {}", rec.t)));
        }
        if rec.estimates.len() != m || rec.radii.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: rec.estimates.len().min(rec.radii.len()),
            });
        }
    }
    Ok(())
}
