//! Scramble bootstrap of the local-Hurst distribution and the one-sample
//! Z-test of an observed mean exponent against the bootstrap expectation.
//!
//! Each iteration applies one uniform random permutation to the return
//! values (timestamps stay in place by default, so hour tags keep their
//! meaning), recomputes the local-Hurst stream at every configured window
//! length, and records the iteration's overall and per-hour mean exponents.
//! Aggregation across iterations is a deterministic ordered reduction, so
//! results are bit-identical regardless of worker count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hurst::{local_hurst_stream_with, LocalHurstOptions, LocalHurstStream, WindowAnchor};
use crate::series::AnalysisSeries;
use crate::stats::{self, SigmaDivisor};

/// Bootstrap settings. Defaults: 1000 iterations over window lengths 10 and
/// 20 with timestamps held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    /// Number of scramble iterations B.
    pub iterations: usize,
    /// Window lengths to evaluate on each scramble.
    pub window_sizes: Vec<usize>,
    /// Seeds every permutation; iteration i draws from an independent
    /// stream of this seed, so workers share no RNG state.
    pub master_seed: u64,
    /// When true (default), values are permuted into the fixed timestamp
    /// grid, preserving hour structure for the per-hour columns. When
    /// false, stamps travel with their values instead.
    pub keep_timestamps: bool,
    /// Confidence level for the interval bounds, e.g. 0.95.
    pub confidence: f64,
    /// Retain every iteration's mean exponent for audit output.
    pub record_iteration_means: bool,
    pub divisor: SigmaDivisor,
    pub anchor: WindowAnchor,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            iterations: 1000,
            window_sizes: vec![10, 20],
            master_seed: 1,
            keep_timestamps: true,
            confidence: 0.95,
            record_iteration_means: false,
            divisor: SigmaDivisor::Population,
            anchor: WindowAnchor::End,
        }
    }
}

/// Bootstrap distribution of one hour's mean local exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourBootstrapRow {
    pub hour: u8,
    /// Mean over the iterations in which this hour had any windows.
    pub mean_h: Option<f64>,
    /// Sample standard deviation over those iteration means.
    pub std_h: Option<f64>,
    pub iterations_with_data: usize,
}

/// Aggregated bootstrap distribution for one window length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub n: usize,
    pub iterations: usize,
    pub master_seed: u64,
    /// Mean of the B per-iteration mean exponents.
    pub mean_h: f64,
    /// Sample standard deviation of the B per-iteration means; undefined
    /// for a single iteration.
    pub std_h: Option<f64>,
    /// Normal-approximation interval `mean ± z·std`; undefined when std is.
    pub ci_normal: Option<(f64, f64)>,
    /// Percentile interval from the empirical iteration means.
    pub ci_percentile: (f64, f64),
    pub confidence: f64,
    pub per_hour: Vec<HourBootstrapRow>,
    /// Every iteration's overall mean, present when recording was requested.
    pub iteration_means: Option<Vec<f64>>,
}

/// One-sample Z-test of an observed mean exponent against a bootstrap
/// expectation: `z = (observed − expected)/(std/√N_w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTestResult {
    pub n: usize,
    pub observed_mean: f64,
    pub expected_mean: f64,
    pub std_used: f64,
    /// Number of observed (non-degenerate) windows backing the mean.
    pub sample_count: usize,
    pub z: f64,
    pub p_two_sided: f64,
    pub significance_level: f64,
    pub reject_null: bool,
}

/// RNG for iteration `i`: an independent stream of the master seed, so any
/// iteration is reproducible in isolation and in any execution order.
fn iteration_rng(master_seed: u64, iteration: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(iteration);
    rng
}

fn scramble_with_rng(
    series: &AnalysisSeries,
    rng: &mut ChaCha12Rng,
    keep_timestamps: bool,
) -> AnalysisSeries {
    let mut indices: Vec<usize> = (0..series.len()).collect();
    indices.shuffle(rng);
    let values: Vec<f64> = indices.iter().map(|&i| series.values[i]).collect();
    let stamps = if keep_timestamps {
        series.stamps.clone()
    } else {
        indices.iter().map(|&i| series.stamps[i]).collect()
    };
    AnalysisSeries { values, stamps }
}

/// Uniform random permutation (Fisher–Yates) of the values; timestamps and
/// hour tags stay fixed in place. Deterministic per seed.
pub fn scramble(series: &AnalysisSeries, seed: u64) -> AnalysisSeries {
    scramble_with_rng(series, &mut ChaCha12Rng::seed_from_u64(seed), true)
}

/// The permutation bootstrap iteration `iteration` would apply under
/// `master_seed`, exposed for audits of specific iterations.
pub fn scramble_iteration(
    series: &AnalysisSeries,
    master_seed: u64,
    iteration: u64,
    keep_timestamps: bool,
) -> AnalysisSeries {
    scramble_with_rng(series, &mut iteration_rng(master_seed, iteration), keep_timestamps)
}

/// Abort when more than half of the window positions are degenerate: the
/// surviving mean would describe a minority of the series.
fn ensure_not_flooded(stream: &LocalHurstStream, context: &str) -> Result<()> {
    let total = stream.positions();
    if stream.skipped * 2 > total {
        return Err(Error::Degenerate(format!(
            "{skipped} of {total} windows at n = {n} are constant ({context}); \
             more than half the positions carry no rescaled range",
            skipped = stream.skipped,
            n = stream.n,
        )));
    }
    Ok(())
}

fn hour_means(stream: &LocalHurstStream) -> [Option<f64>; 24] {
    let mut sums = [0.0f64; 24];
    let mut counts = [0usize; 24];
    for w in &stream.windows {
        sums[w.hour as usize] += w.h;
        counts[w.hour as usize] += 1;
    }
    std::array::from_fn(|h| (counts[h] > 0).then(|| sums[h] / counts[h] as f64))
}

/// Linear-interpolation quantile of a sorted sample, q in [0, 1].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

struct IterationStat {
    /// Overall mean exponent per window-size index.
    overall: Vec<f64>,
    /// Per-hour mean exponents per window-size index.
    hourly: Vec<[Option<f64>; 24]>,
}

fn validate_config(config: &BootstrapConfig) -> Result<()> {
    if config.iterations == 0 {
        return Err(Error::Config("bootstrap needs at least 1 iteration".into()));
    }
    if config.window_sizes.is_empty() {
        return Err(Error::Config("bootstrap needs at least one window length".into()));
    }
    if let Some(&n) = config.window_sizes.iter().find(|&&n| n < 2) {
        return Err(Error::Config(format!("window length must be at least 2; got {n}")));
    }
    if !(config.confidence > 0.0 && config.confidence < 1.0) {
        return Err(Error::Config(format!(
            "confidence must lie strictly inside (0, 1); got {}",
            config.confidence
        )));
    }
    Ok(())
}

/// Run the scramble bootstrap: for each iteration, permute once, evaluate
/// the local-Hurst stream at every configured window length, and aggregate
/// the per-iteration means into one summary per length.
///
/// Output is fully determined by `(series, config)` — iterations run in
/// parallel but are collected in index order and reduced sequentially.
pub fn bootstrap_local_hurst(
    series: &AnalysisSeries,
    config: &BootstrapConfig,
) -> Result<Vec<BootstrapSummary>> {
    validate_config(config)?;
    let options = LocalHurstOptions { divisor: config.divisor, anchor: config.anchor };
    // reject unsuitable input before paying for B iterations
    for &n in &config.window_sizes {
        let stream = local_hurst_stream_with(series, n, &options)?;
        ensure_not_flooded(&stream, "in the input series")?;
    }
    let z_conf = stats::normal_quantile(0.5 + config.confidence / 2.0)?;

    let records: Vec<IterationStat> = (0..config.iterations)
        .into_par_iter()
        .map(|iteration| {
            let scrambled = scramble_iteration(
                series,
                config.master_seed,
                iteration as u64,
                config.keep_timestamps,
            );
            let mut overall = Vec::with_capacity(config.window_sizes.len());
            let mut hourly = Vec::with_capacity(config.window_sizes.len());
            for &n in &config.window_sizes {
                let stream = local_hurst_stream_with(&scrambled, n, &options)?;
                ensure_not_flooded(&stream, &format!("in scramble iteration {iteration}"))?;
                let mean = stream.mean_h().ok_or_else(|| {
                    Error::Internal(format!(
                        "no valid windows survived iteration {iteration} at n = {n}"
                    ))
                })?;
                overall.push(mean);
                hourly.push(hour_means(&stream));
            }
            Ok(IterationStat { overall, hourly })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summaries = Vec::with_capacity(config.window_sizes.len());
    for (j, &n) in config.window_sizes.iter().enumerate() {
        let means: Vec<f64> = records.iter().map(|r| r.overall[j]).collect();
        let mean_h = stats::mean(&means);
        let std_h = stats::std_dev(&means, SigmaDivisor::Sample);
        let ci_normal = std_h.map(|s| (mean_h - z_conf * s, mean_h + z_conf * s));
        let mut sorted = means.clone();
        sorted.sort_by(f64::total_cmp);
        let alpha = 1.0 - config.confidence;
        let ci_percentile =
            (percentile(&sorted, alpha / 2.0), percentile(&sorted, 1.0 - alpha / 2.0));
        let per_hour = (0u8..24)
            .map(|hour| {
                let vals: Vec<f64> =
                    records.iter().filter_map(|r| r.hourly[j][hour as usize]).collect();
                HourBootstrapRow {
                    hour,
                    mean_h: (!vals.is_empty()).then(|| stats::mean(&vals)),
                    std_h: stats::std_dev(&vals, SigmaDivisor::Sample),
                    iterations_with_data: vals.len(),
                }
            })
            .collect();
        summaries.push(BootstrapSummary {
            n,
            iterations: config.iterations,
            master_seed: config.master_seed,
            mean_h,
            std_h,
            ci_normal,
            ci_percentile,
            confidence: config.confidence,
            per_hour,
            iteration_means: config.record_iteration_means.then_some(means),
        });
    }
    Ok(summaries)
}

/// Z-test from explicit moments; `sample_count` is the number of observed
/// windows behind `observed_mean`.
pub fn z_test_from_moments(
    n: usize,
    observed_mean: f64,
    expected_mean: f64,
    std_used: f64,
    sample_count: usize,
    significance_level: f64,
) -> Result<ZTestResult> {
    if !(std_used > 0.0) {
        return Err(Error::Degenerate(format!(
            "Z-test needs a positive standard deviation; got {std_used}"
        )));
    }
    if sample_count == 0 {
        return Err(Error::Data("Z-test needs at least one observed window".into()));
    }
    if !(significance_level > 0.0 && significance_level < 1.0) {
        return Err(Error::Config(format!(
            "significance level must lie strictly inside (0, 1); got {significance_level}"
        )));
    }
    let standard_error = std_used / (sample_count as f64).sqrt();
    let z = (observed_mean - expected_mean) / standard_error;
    let p_two_sided = 2.0 * (1.0 - stats::normal_cdf(z.abs()));
    Ok(ZTestResult {
        n,
        observed_mean,
        expected_mean,
        std_used,
        sample_count,
        z,
        p_two_sided,
        significance_level,
        reject_null: p_two_sided < significance_level,
    })
}

/// Test the observed stream's mean exponent against the bootstrap
/// expectation, using the bootstrap standard deviation and the observed
/// non-degenerate window count.
pub fn z_test(
    stream: &LocalHurstStream,
    summary: &BootstrapSummary,
    significance_level: f64,
) -> Result<ZTestResult> {
    if stream.n != summary.n {
        return Err(Error::Config(format!(
            "window length mismatch: stream n = {}, bootstrap n = {}",
            stream.n, summary.n
        )));
    }
    let observed = stream
        .mean_h()
        .ok_or_else(|| Error::Data("observed stream has no non-degenerate windows".into()))?;
    let std_used = summary.std_h.ok_or_else(|| {
        Error::Degenerate("bootstrap ran a single iteration; its dispersion is undefined".into())
    })?;
    z_test_from_moments(
        summary.n,
        observed,
        summary.mean_h,
        std_used,
        stream.windows.len(),
        significance_level,
    )
}
