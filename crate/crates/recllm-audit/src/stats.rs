//! Bootstrap confidence intervals over per-user metric values and cross-run
//! stability summaries.
//!
//! Replicate r draws its resample from stream r of a ChaCha8 generator
//! seeded with the run seed, so replicates are independent of evaluation
//! order and may be computed in parallel. The generator identifier is
//! recorded in every result for reproducibility across machines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifier of the resampling generator scheme, recorded in reports.
pub const RNG_ALGORITHM: &str = "chacha8/stream-per-replicate";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("cannot bootstrap an empty value set")]
    EmptyValues,
    #[error("replicate count must be >= 1")]
    InvalidReplicates,
    #[error("stability needs >= 2 runs, got {0}")]
    TooFewRuns(usize),
}

/// Percentile bootstrap of the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Mean of the replicate means.
    pub mean_of_means: f64,
    /// 2.5th percentile of replicate means (nearest-rank).
    pub ci_low: f64,
    /// 97.5th percentile of replicate means (nearest-rank).
    pub ci_high: f64,
    pub replicates: u64,
    pub seed: u64,
    pub rng_algorithm: String,
}

/// Draw `b` resamples of size |values| with replacement and report the mean
/// of replicate means with a nearest-rank 95% percentile interval.
pub fn bootstrap_mean_ci(values: &[f64], b: u64, seed: u64) -> Result<BootstrapResult, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyValues);
    }
    if b == 0 {
        return Err(StatsError::InvalidReplicates);
    }
    let n = values.len();
    let mut replicate_means = Vec::with_capacity(b as usize);
    for replicate in 0..b {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replicate);
        let mut sum = 0.0;
        for _ in 0..n {
            sum += values[rng.random_range(0..n)];
        }
        replicate_means.push(sum / n as f64);
    }
    Ok(summarize(replicate_means, seed))
}

/// Exhaustive-enumeration bootstrap: every one of the n^n resamples becomes
/// a replicate. Only sensible for very small inputs; used as the exact
/// counterpart of [`bootstrap_mean_ci`] in verification.
pub fn bootstrap_mean_ci_enumerated(values: &[f64]) -> Result<BootstrapResult, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyValues);
    }
    let n = values.len();
    let total = (n as u64).pow(n as u32);
    let mut replicate_means = Vec::with_capacity(total as usize);
    let mut odometer = vec![0usize; n];
    loop {
        let sum: f64 = odometer.iter().map(|&i| values[i]).sum();
        replicate_means.push(sum / n as f64);
        // advance the base-n odometer
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(summarize(replicate_means, 0));
            }
            odometer[pos] += 1;
            if odometer[pos] < n {
                break;
            }
            odometer[pos] = 0;
            pos += 1;
        }
    }
}

fn summarize(mut replicate_means: Vec<f64>, seed: u64) -> BootstrapResult {
    let b = replicate_means.len() as u64;
    // sorted before summing so the result is independent of replicate order
    replicate_means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean_of_means = replicate_means.iter().sum::<f64>() / b as f64;
    BootstrapResult {
        mean_of_means,
        ci_low: nearest_rank(&replicate_means, 0.025),
        ci_high: nearest_rank(&replicate_means, 0.975),
        replicates: b,
        seed,
        rng_algorithm: RNG_ALGORITHM.to_string(),
    }
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Mean, sample standard deviation, and range of one metric across repeated
/// runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    pub per_run_values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator).
    pub std: f64,
    /// max - min.
    pub range: f64,
}

pub fn stability_summary(per_run: &[f64]) -> Result<StabilityResult, StatsError> {
    if per_run.len() < 2 {
        return Err(StatsError::TooFewRuns(per_run.len()));
    }
    let n = per_run.len() as f64;
    let max = per_run.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = per_run.iter().cloned().fold(f64::INFINITY, f64::min);
    // identical runs are exactly stable; the mean roundtrip must not
    // manufacture a tiny spurious deviation
    if max == min {
        return Ok(StabilityResult {
            per_run_values: per_run.to_vec(),
            mean: max,
            std: 0.0,
            range: 0.0,
        });
    }
    let mean = per_run.iter().sum::<f64>() / n;
    let var = per_run.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(StabilityResult {
        per_run_values: per_run.to_vec(),
        mean,
        std: var.sqrt(),
        range: max - min,
    })
}
