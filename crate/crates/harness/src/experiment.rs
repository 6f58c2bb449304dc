//! Seeded trial batches and their aggregate statistics.

use std::time::Instant;

use cpecs::coci::RoundRecord;
use cpecs::hardness::h_lambda;
use cpecs::sim::derive_seed;
use cpecs::{compute_lambda, run, sample_complexity_bound, LambdaBracket, RunOptions, SamplingRule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Mode};
use crate::error::{HarnessError, Result};

/// One run of one sampling rule on one trial seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub mode: Mode,
    pub rounds: u64,
    pub correct: bool,
    pub xi_held: bool,
    pub bound_value: Option<f64>,
    /// `rounds <= bound_value`; absent without a bound.
    pub bound_satisfied: Option<bool>,
    pub pulls: Vec<u64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub trials: u64,
    pub errors: u64,
    pub error_rate: f64,
    pub non_converged: u64,
    pub mean_rounds: f64,
    pub median_rounds: f64,
    pub p95_rounds: u64,
    pub min_rounds: u64,
    pub max_rounds: u64,
    pub mean_pulls: Vec<f64>,
    pub min_pulls: Vec<u64>,
    pub max_pulls: Vec<u64>,
    pub xi_frequency: f64,
    pub bound_violations: Option<u64>,
    /// Violations among trials on which the concentration event held.
    pub bound_violations_given_xi: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSummary {
    /// Mean over trials of `rounds(coci) / rounds(uniform)`.
    pub mean_round_ratio: f64,
    pub ratio_of_mean_rounds: f64,
    pub coci_fewer_rounds: u64,
}

/// Aggregate results; contains no wall-clock data, so it is reproducible
/// byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub application: crate::config::Application,
    pub arm_count: usize,
    pub optimum: Vec<f64>,
    pub delta: f64,
    pub strategy: String,
    pub estimator: cpecs::EstimatorKind,
    pub master_seed: u64,
    pub trials: u64,
    pub lambda: Option<Vec<LambdaBracket>>,
    pub h_lambda: Option<f64>,
    pub bound_value: Option<f64>,
    pub modes: Vec<ModeSummary>,
    pub paired: Option<PairedSummary>,
}

#[derive(Debug, Clone)]
pub struct TraceDump {
    pub trial: u64,
    pub mode: Mode,
    pub rounds: Vec<RoundRecord>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    /// Ordered by trial, then COCI before uniform.
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
    pub traces: Vec<TraceDump>,
}

/// Seed of trial `index`; independent of the total trial count.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    derive_seed(master_seed, index)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let instance = config.build_instance()?;
    let oracle = instance.oracle();
    let strategy = config.strategy(oracle)?;
    let m = instance.arm_count();
    let tau = instance.estimator().tau();
    let delta = config.run.delta;

    let lambda = if config.run.bound {
        Some(compute_lambda(oracle, instance.true_params(), config.run.epsilon, strategy)?)
    } else {
        None
    };
    let h = lambda.as_ref().map(|l| h_lambda(&l.iter().map(|b| b.upper).collect::<Vec<_>>()));
    let bound_value = h.map(|h| sample_complexity_bound(h, m, tau, delta)).transpose()?;

    let rules: &[(Mode, SamplingRule)] = match config.run.mode {
        Mode::Coci => &[(Mode::Coci, SamplingRule::Adaptive)],
        Mode::Uniform => &[(Mode::Uniform, SamplingRule::Uniform)],
        Mode::Both => &[(Mode::Coci, SamplingRule::Adaptive), (Mode::Uniform, SamplingRule::Uniform)],
    };
    let keep_trace = config.output.trace;
    let run_trial = |trial: u64| -> Result<Vec<(TrialRecord, bool, Option<TraceDump>)>> {
        let seed = trial_seed(config.run.master_seed, trial);
        let mut options = RunOptions::new(delta, strategy, seed);
        options.max_rounds = config.run.max_rounds;
        options.h_lambda = h;
        options.record_trace = keep_trace;
        options.variance_cap = config.run.variance_cap;
        rules
            .iter()
            .map(|&(mode, rule)| {
                let start = Instant::now();
                let res = run(&instance, &options, rule)?;
                let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                let record = TrialRecord {
                    trial,
                    seed,
                    mode,
                    rounds: res.rounds,
                    correct: res.correct,
                    xi_held: res.xi_held,
                    bound_value: res.bound_value,
                    bound_satisfied: res.bound_value.map(|b| res.rounds as f64 <= b),
                    pulls: res.per_arm_pulls,
                    wall_ms,
                };
                let trace = res.trace.map(|rounds| TraceDump { trial, mode, rounds });
                Ok((record, res.converged, trace))
            })
            .collect()
    };

    let workers = config
        .run
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::config("run.workers", e))?;
    let per_trial: Vec<Vec<(TrialRecord, bool, Option<TraceDump>)>> = pool.install(|| {
        (0..config.run.trials)
            .into_par_iter()
            .map(run_trial)
            .collect::<Result<Vec<_>>>()
    })?;

    let mut records = Vec::new();
    let mut converged = Vec::new();
    let mut traces = Vec::new();
    for (record, done, trace) in per_trial.into_iter().flatten() {
        records.push(record);
        converged.push(done);
        traces.extend(trace);
    }
    let modes = rules
        .iter()
        .map(|(mode, _)| summarize_mode(*mode, &records, &converged, m))
        .collect();
    let paired = (config.run.mode == Mode::Both).then(|| paired_summary(&records));
    let summary = Summary {
        application: config.instance.application,
        arm_count: m,
        optimum: instance.optimum().0.clone(),
        delta,
        strategy: strategy.to_string(),
        estimator: instance.estimator(),
        master_seed: config.run.master_seed,
        trials: config.run.trials,
        lambda,
        h_lambda: h,
        bound_value,
        modes,
        paired,
    };
    Ok(ExperimentOutcome {
        records,
        summary,
        traces,
    })
}

fn summarize_mode(mode: Mode, records: &[TrialRecord], converged: &[bool], m: usize) -> ModeSummary {
    let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.mode == mode).collect();
    let non_converged = records
        .iter()
        .zip(converged)
        .filter(|(r, done)| r.mode == mode && !**done)
        .count() as u64;
    let n = rows.len() as u64;
    let mut rounds: Vec<u64> = rows.iter().map(|r| r.rounds).collect();
    rounds.sort_unstable();
    let errors = rows.iter().filter(|r| !r.correct).count() as u64;
    let mean_pulls = (0..m)
        .map(|i| rows.iter().map(|r| r.pulls[i] as f64).sum::<f64>() / n as f64)
        .collect();
    let min_pulls = (0..m).map(|i| rows.iter().map(|r| r.pulls[i]).min().unwrap_or(0)).collect();
    let max_pulls = (0..m).map(|i| rows.iter().map(|r| r.pulls[i]).max().unwrap_or(0)).collect();
    let has_bound = rows.iter().any(|r| r.bound_satisfied.is_some());
    let violations = |given_xi: bool| {
        has_bound.then(|| {
            rows.iter()
                .filter(|r| r.bound_satisfied == Some(false) && (!given_xi || r.xi_held))
                .count() as u64
        })
    };
    ModeSummary {
        mode,
        trials: n,
        errors,
        error_rate: errors as f64 / n as f64,
        non_converged,
        mean_rounds: rounds.iter().sum::<u64>() as f64 / n as f64,
        median_rounds: median(&rounds),
        p95_rounds: percentile(&rounds, 0.95),
        min_rounds: rounds.first().copied().unwrap_or(0),
        max_rounds: rounds.last().copied().unwrap_or(0),
        mean_pulls,
        min_pulls,
        max_pulls,
        xi_frequency: rows.iter().filter(|r| r.xi_held).count() as f64 / n as f64,
        bound_violations: violations(false),
        bound_violations_given_xi: violations(true),
    }
}

fn paired_summary(records: &[TrialRecord]) -> PairedSummary {
    let coci: Vec<&TrialRecord> = records.iter().filter(|r| r.mode == Mode::Coci).collect();
    let uniform: Vec<&TrialRecord> = records.iter().filter(|r| r.mode == Mode::Uniform).collect();
    let n = coci.len() as f64;
    let pairs = || coci.iter().zip(&uniform);
    let mean = |rows: &[&TrialRecord]| rows.iter().map(|r| r.rounds as f64).sum::<f64>() / n;
    PairedSummary {
        mean_round_ratio: pairs().map(|(a, b)| a.rounds as f64 / b.rounds as f64).sum::<f64>() / n,
        ratio_of_mean_rounds: mean(&coci) / mean(&uniform),
        coci_fewer_rounds: pairs().filter(|(a, b)| a.rounds < b.rounds).count() as u64,
    }
}

/// Midpoint median of sorted values.
fn median(sorted: &[u64]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2] as f64,
        n => (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0,
    }
}

/// Nearest-rank percentile of sorted values.
fn percentile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistics() {
        assert_eq!(median(&[1, 2, 3, 10]), 2.5);
        assert_eq!(median(&[4]), 4.0);
        let v: Vec<u64> = (1..=20).collect();
        assert_eq!(percentile(&v, 0.95), 19);
        assert_eq!(percentile(&v, 1.0), 20);
        assert_eq!(percentile(&[7], 0.95), 7);
    }

    #[test]
    fn trial_seeds_do_not_depend_on_batch_size() {
        assert_eq!(trial_seed(3, 5), trial_seed(3, 5));
        assert_ne!(trial_seed(3, 5), trial_seed(3, 6));
    }
}
