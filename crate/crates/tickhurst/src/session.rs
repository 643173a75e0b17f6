//! Hourly bundling and session-of-day statistics: one-way ANOVA and
//! Kruskal–Wallis over hour-of-day groups, the hourly range/σ decomposition
//! table with percent-change columns, the hourly profile table (returns and
//! local exponents side by side with bootstrap expectations), and the
//! figure-data row shapes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hurst::LocalHurstStream;
use crate::quote::QuoteSeries;
use crate::resample::BootstrapSummary;
use crate::returns::hourly_return_summary;
use crate::series::AnalysisSeries;
use crate::stats::{self, AnovaResult, KruskalWallisResult, SigmaDivisor};

/// All values observed during one hour of day, pooled across days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyBundle {
    pub hour: u8,
    pub values: Vec<f64>,
}

impl HourlyBundle {
    pub fn count(&self) -> usize {
        self.values.len()
    }
}

/// Partition hour-tagged values into 24 bundles (empty hours stay empty).
pub fn bundle_by_hour(tagged: impl IntoIterator<Item = (u8, f64)>) -> Vec<HourlyBundle> {
    let mut bundles: Vec<HourlyBundle> =
        (0..24).map(|hour| HourlyBundle { hour, values: Vec::new() }).collect();
    for (hour, value) in tagged {
        assert!(hour < 24, "hour tag out of range: {hour}");
        bundles[hour as usize].values.push(value);
    }
    bundles
}

/// One-way ANOVA across the non-empty bundles.
pub fn anova_by_hour(bundles: &[HourlyBundle]) -> Result<AnovaResult> {
    let groups: Vec<&[f64]> = bundles.iter().map(|b| b.values.as_slice()).collect();
    stats::anova_oneway(&groups)
}

/// Kruskal–Wallis across the non-empty bundles.
pub fn kruskal_by_hour(bundles: &[HourlyBundle]) -> Result<KruskalWallisResult> {
    let groups: Vec<&[f64]> = bundles.iter().map(|b| b.values.as_slice()).collect();
    stats::kruskal_wallis(&groups)
}

/// Footer statistics are unavailable (not an error) when the grouped data
/// cannot support the test: fewer than two populated hours, or zero variance
/// everywhere. Genuine data faults still propagate.
fn footer_anova(groups: &[HourlyBundle]) -> Result<Option<AnovaResult>> {
    match anova_by_hour(groups) {
        Ok(a) => Ok(Some(a)),
        Err(Error::Config(_)) | Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn footer_kruskal(groups: &[HourlyBundle]) -> Result<Option<KruskalWallisResult>> {
    match kruskal_by_hour(groups) {
        Ok(k) => Ok(Some(k)),
        Err(Error::Config(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Percent-change convention for the decomposition table's hour-over-hour
/// σ columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PercentMode {
    /// Reference convention: range changes on log values, σ changes on raw
    /// means. Reproduces the published table bit-for-bit.
    #[default]
    Paper,
    /// Both columns on log values.
    Consistent,
}

/// `(new − old)/old × 100`, undefined over a zero base.
pub fn percent_change(new: f64, old: f64) -> Option<f64> {
    (old != 0.0).then(|| (new - old) / old * 100.0)
}

/// One hour's aggregated range/σ measurements at one window length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCell {
    pub mean_range: f64,
    pub log_range: f64,
    pub mean_sigma: f64,
    pub log_sigma: f64,
    pub window_count: usize,
    /// Reconstructed exponent `(log R − log σ)/log₁₀ n` from this cell's
    /// own (unrounded) log values.
    pub h: f64,
}

/// One decomposition row: both window lengths plus the percent-change
/// columns. `None` marks an hour (or a predecessor) without windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourlyDecompositionRow {
    pub hour: u8,
    pub small: Option<DecompositionCell>,
    pub large: Option<DecompositionCell>,
    /// Hour-over-hour percent change of log R at the small window length;
    /// blank at the first populated hour (no wraparound).
    pub dr_small: Option<f64>,
    pub dsigma_small: Option<f64>,
    pub dr_large: Option<f64>,
    pub dsigma_large: Option<f64>,
    /// Percent change of log R from the small to the large window length.
    pub dr_cross: Option<f64>,
    pub dsigma_cross: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTable {
    pub n_small: usize,
    pub n_large: usize,
    pub mode: PercentMode,
    pub rows: Vec<HourlyDecompositionRow>,
    /// ANOVA of the window-level ranges across hours, per window length.
    pub anova_range_small: Option<AnovaResult>,
    pub anova_sigma_small: Option<AnovaResult>,
    pub anova_range_large: Option<AnovaResult>,
    pub anova_sigma_large: Option<AnovaResult>,
}

fn hourly_cells(stream: &LocalHurstStream) -> [Option<DecompositionCell>; 24] {
    let mut sums = [(0.0f64, 0.0f64, 0usize); 24];
    for w in &stream.windows {
        let slot = &mut sums[w.hour as usize];
        slot.0 += w.range;
        slot.1 += w.sigma;
        slot.2 += 1;
    }
    let log_n = (stream.n as f64).log10();
    std::array::from_fn(|hour| {
        let (r, s, count) = sums[hour];
        (count > 0).then(|| {
            let mean_range = r / count as f64;
            let mean_sigma = s / count as f64;
            let log_range = mean_range.log10();
            let log_sigma = mean_sigma.log10();
            DecompositionCell {
                mean_range,
                log_range,
                mean_sigma,
                log_sigma,
                window_count: count,
                h: (log_range - log_sigma) / log_n,
            }
        })
    })
}

fn hour_over_hour(
    cell: Option<&DecompositionCell>,
    prev: Option<&DecompositionCell>,
    mode: PercentMode,
) -> (Option<f64>, Option<f64>) {
    match (cell, prev) {
        (Some(c), Some(p)) => {
            let dr = percent_change(c.log_range, p.log_range);
            let dsigma = match mode {
                PercentMode::Paper => percent_change(c.mean_sigma, p.mean_sigma),
                PercentMode::Consistent => percent_change(c.log_sigma, p.log_sigma),
            };
            (dr, dsigma)
        }
        _ => (None, None),
    }
}

fn hourly_value_groups(stream: &LocalHurstStream, pick: impl Fn(&crate::hurst::LocalHurstWindow) -> f64) -> Vec<HourlyBundle> {
    bundle_by_hour(stream.windows.iter().map(|w| (w.hour, pick(w))))
}

/// Build the hourly decomposition table from two local-Hurst streams of the
/// same series at a smaller and a larger window length. Hourly means of R
/// and σ are taken first, then logs (base 10); percent changes compare each
/// populated hour with the nearest earlier populated hour.
pub fn decomposition_table(
    small: &LocalHurstStream,
    large: &LocalHurstStream,
    mode: PercentMode,
) -> Result<DecompositionTable> {
    if small.n >= large.n {
        return Err(Error::Config(format!(
            "window lengths must be given as (smaller, larger); got ({}, {})",
            small.n, large.n
        )));
    }
    let small_cells = hourly_cells(small);
    let large_cells = hourly_cells(large);
    let mut rows = Vec::with_capacity(24);
    let mut prev_small: Option<DecompositionCell> = None;
    let mut prev_large: Option<DecompositionCell> = None;
    for hour in 0u8..24 {
        let s = small_cells[hour as usize];
        let l = large_cells[hour as usize];
        let (dr_small, dsigma_small) = hour_over_hour(s.as_ref(), prev_small.as_ref(), mode);
        let (dr_large, dsigma_large) = hour_over_hour(l.as_ref(), prev_large.as_ref(), mode);
        let (dr_cross, dsigma_cross) = match (&s, &l) {
            (Some(sc), Some(lc)) => (
                percent_change(lc.log_range, sc.log_range),
                percent_change(lc.log_sigma, sc.log_sigma),
            ),
            _ => (None, None),
        };
        rows.push(HourlyDecompositionRow {
            hour,
            small: s,
            large: l,
            dr_small,
            dsigma_small,
            dr_large,
            dsigma_large,
            dr_cross,
            dsigma_cross,
        });
        if s.is_some() {
            prev_small = s;
        }
        if l.is_some() {
            prev_large = l;
        }
    }
    Ok(DecompositionTable {
        n_small: small.n,
        n_large: large.n,
        mode,
        rows,
        anova_range_small: footer_anova(&hourly_value_groups(small, |w| w.range))?,
        anova_sigma_small: footer_anova(&hourly_value_groups(small, |w| w.sigma))?,
        anova_range_large: footer_anova(&hourly_value_groups(large, |w| w.range))?,
        anova_sigma_large: footer_anova(&hourly_value_groups(large, |w| w.sigma))?,
    })
}

/// One hour of the profile table: return moments next to observed local
/// exponents and their bootstrap expectations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourlyProfileRow {
    pub hour: u8,
    pub return_count: usize,
    pub mean_return: Option<f64>,
    pub std_return: Option<f64>,
    pub window_count_small: usize,
    pub mean_h_small: Option<f64>,
    pub std_h_small: Option<f64>,
    pub window_count_large: usize,
    pub mean_h_large: Option<f64>,
    pub std_h_large: Option<f64>,
    pub boot_mean_h_small: Option<f64>,
    pub boot_std_h_small: Option<f64>,
    pub boot_mean_h_large: Option<f64>,
    pub boot_std_h_large: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyProfileTable {
    pub n_small: usize,
    pub n_large: usize,
    pub rows: Vec<HourlyProfileRow>,
    pub anova_returns: Option<AnovaResult>,
    pub anova_h_small: Option<AnovaResult>,
    pub anova_h_large: Option<AnovaResult>,
    pub kruskal_returns: Option<KruskalWallisResult>,
    pub kruskal_h_small: Option<KruskalWallisResult>,
    pub kruskal_h_large: Option<KruskalWallisResult>,
    /// Bootstrap expectation E(h̄) and dispersion σ(ĥ) footers, echoed from
    /// the summaries when available.
    pub expected_mean_h_small: Option<f64>,
    pub expected_std_h_small: Option<f64>,
    pub expected_mean_h_large: Option<f64>,
    pub expected_std_h_large: Option<f64>,
}

fn bundle_moments(
    bundle: &HourlyBundle,
    divisor: SigmaDivisor,
) -> (usize, Option<f64>, Option<f64>) {
    let count = bundle.count();
    let mean = (count > 0).then(|| stats::mean(&bundle.values));
    let std = stats::std_dev(&bundle.values, divisor);
    (count, mean, std)
}

/// Assemble the hourly profile table. Bootstrap summaries are optional;
/// when given, their window lengths must match the streams.
pub fn hourly_profile(
    returns: &AnalysisSeries,
    small: &LocalHurstStream,
    large: &LocalHurstStream,
    boot_small: Option<&BootstrapSummary>,
    boot_large: Option<&BootstrapSummary>,
    divisor: SigmaDivisor,
) -> Result<HourlyProfileTable> {
    if small.n >= large.n {
        return Err(Error::Config(format!(
            "window lengths must be given as (smaller, larger); got ({}, {})",
            small.n, large.n
        )));
    }
    for (boot, stream) in [(boot_small, small), (boot_large, large)] {
        if let Some(b) = boot {
            if b.n != stream.n {
                return Err(Error::Config(format!(
                    "bootstrap summary is for n = {}, stream for n = {}",
                    b.n, stream.n
                )));
            }
        }
    }
    let return_bundles = bundle_by_hour(returns.hour_tagged());
    let h_small = hourly_value_groups(small, |w| w.h);
    let h_large = hourly_value_groups(large, |w| w.h);
    let rows = (0usize..24)
        .map(|hour| {
            let (return_count, mean_return, std_return) =
                bundle_moments(&return_bundles[hour], divisor);
            let (window_count_small, mean_h_small, std_h_small) =
                bundle_moments(&h_small[hour], divisor);
            let (window_count_large, mean_h_large, std_h_large) =
                bundle_moments(&h_large[hour], divisor);
            let boot_row = |b: Option<&BootstrapSummary>| {
                b.map(|b| (b.per_hour[hour].mean_h, b.per_hour[hour].std_h))
                    .unwrap_or((None, None))
            };
            let (boot_mean_h_small, boot_std_h_small) = boot_row(boot_small);
            let (boot_mean_h_large, boot_std_h_large) = boot_row(boot_large);
            HourlyProfileRow {
                hour: hour as u8,
                return_count,
                mean_return,
                std_return,
                window_count_small,
                mean_h_small,
                std_h_small,
                window_count_large,
                mean_h_large,
                std_h_large,
                boot_mean_h_small,
                boot_std_h_small,
                boot_mean_h_large,
                boot_std_h_large,
            }
        })
        .collect();
    Ok(HourlyProfileTable {
        n_small: small.n,
        n_large: large.n,
        rows,
        anova_returns: footer_anova(&return_bundles)?,
        anova_h_small: footer_anova(&h_small)?,
        anova_h_large: footer_anova(&h_large)?,
        kruskal_returns: footer_kruskal(&return_bundles)?,
        kruskal_h_small: footer_kruskal(&h_small)?,
        kruskal_h_large: footer_kruskal(&h_large)?,
        expected_mean_h_small: boot_small.map(|b| b.mean_h),
        expected_std_h_small: boot_small.and_then(|b| b.std_h),
        expected_mean_h_large: boot_large.map(|b| b.mean_h),
        expected_std_h_large: boot_large.and_then(|b| b.std_h),
    })
}

/// Quote frequency by hour of day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fig1Row {
    pub hour: u8,
    pub quote_count: usize,
}

pub fn fig1_rows(series: &QuoteSeries) -> Vec<Fig1Row> {
    hour_counts(series.ticks.iter().map(|t| t.hour))
}

/// Same shape from a pre-built analysis series, for inputs that never had a
/// quote stage: the count is then observations per hour.
pub fn fig1_rows_from_stamps(series: &AnalysisSeries) -> Vec<Fig1Row> {
    hour_counts(series.stamps.iter().map(|s| s.hour))
}

fn hour_counts(hours: impl Iterator<Item = u8>) -> Vec<Fig1Row> {
    let mut counts = [0usize; 24];
    for hour in hours {
        counts[hour as usize] += 1;
    }
    (0..24).map(|hour| Fig1Row { hour: hour as u8, quote_count: counts[hour] }).collect()
}

/// Mean and variance of returns by hour of day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    pub hour: u8,
    pub mean_return: Option<f64>,
    pub variance: Option<f64>,
}

pub fn fig2_rows(returns: &AnalysisSeries, divisor: SigmaDivisor) -> Vec<Fig2Row> {
    hourly_return_summary(returns, divisor)
        .into_iter()
        .map(|r| Fig2Row { hour: r.hour, mean_return: r.mean, variance: r.variance })
        .collect()
}

/// Observed hourly mean exponents next to their bootstrap expectations and
/// normal-approximation confidence bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig3Row {
    pub hour: u8,
    pub mean_h_small: Option<f64>,
    pub mean_h_large: Option<f64>,
    pub boot_mean_h_small: Option<f64>,
    pub boot_mean_h_large: Option<f64>,
    pub ci_lower_small: Option<f64>,
    pub ci_upper_small: Option<f64>,
    pub ci_lower_large: Option<f64>,
    pub ci_upper_large: Option<f64>,
}

/// Per-hour confidence bounds use each summary's own confidence level over
/// its per-hour bootstrap moments.
pub fn fig3_rows(
    small: &LocalHurstStream,
    large: &LocalHurstStream,
    boot_small: &BootstrapSummary,
    boot_large: &BootstrapSummary,
) -> Result<Vec<Fig3Row>> {
    if small.n != boot_small.n || large.n != boot_large.n {
        return Err(Error::Config(format!(
            "stream/bootstrap window lengths disagree: ({}, {}) vs ({}, {})",
            small.n, large.n, boot_small.n, boot_large.n
        )));
    }
    let h_small = hourly_value_groups(small, |w| w.h);
    let h_large = hourly_value_groups(large, |w| w.h);
    let z_small = stats::normal_quantile(0.5 + boot_small.confidence / 2.0)?;
    let z_large = stats::normal_quantile(0.5 + boot_large.confidence / 2.0)?;
    let bounds = |row: &crate::resample::HourBootstrapRow, z: f64| match (row.mean_h, row.std_h) {
        (Some(m), Some(s)) => (Some(m - z * s), Some(m + z * s)),
        _ => (None, None),
    };
    Ok((0usize..24)
        .map(|hour| {
            let (ci_lower_small, ci_upper_small) = bounds(&boot_small.per_hour[hour], z_small);
            let (ci_lower_large, ci_upper_large) = bounds(&boot_large.per_hour[hour], z_large);
            Fig3Row {
                hour: hour as u8,
                mean_h_small: (!h_small[hour].values.is_empty())
                    .then(|| stats::mean(&h_small[hour].values)),
                mean_h_large: (!h_large[hour].values.is_empty())
                    .then(|| stats::mean(&h_large[hour].values)),
                boot_mean_h_small: boot_small.per_hour[hour].mean_h,
                boot_mean_h_large: boot_large.per_hour[hour].mean_h,
                ci_lower_small,
                ci_upper_small,
                ci_lower_large,
                ci_upper_large,
            }
        })
        .collect())
}
