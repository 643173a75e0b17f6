//! Rescaled-range machinery: per-window R, σ, R/σ; rolling local Hurst
//! streams; global Hurst via log-log OLS over block means; and a sample
//! autocorrelation diagnostic.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::AnalysisSeries;
use crate::stats::{self, SigmaDivisor};

/// One window's rescaled adjusted range. `rs` is present only when the
/// window is non-degenerate (σ > 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledRange {
    pub range: f64,
    pub sigma: f64,
    pub rs: Option<f64>,
}

/// Classical rescaled adjusted range of one window:
/// `R = max_k Σ_{j≤k}(x_j − x̄) − min_k Σ_{j≤k}(x_j − x̄)` for k = 1..n, and
/// `σ` about the window mean with the population (1/n) divisor. Constant
/// windows are degenerate: σ = 0 and no ratio is formed.
pub fn rescaled_range(window: &[f64]) -> Result<RescaledRange> {
    rescaled_range_with(window, SigmaDivisor::Population)
}

pub fn rescaled_range_with(window: &[f64], divisor: SigmaDivisor) -> Result<RescaledRange> {
    let n = window.len();
    if n < 2 {
        return Err(Error::Data("rescaled range needs a window of at least 2 values".into()));
    }
    if window.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("rescaled range input contains a non-finite value".into()));
    }
    // A bitwise-constant window is degenerate regardless of rounding in the
    // mean; check before any arithmetic.
    if window.windows(2).all(|w| w[1] == w[0]) {
        return Ok(RescaledRange { range: 0.0, sigma: 0.0, rs: None });
    }
    let m = stats::mean(window);
    let mut running = 0.0f64;
    let mut max_ps = f64::NEG_INFINITY;
    let mut min_ps = f64::INFINITY;
    let mut ss = 0.0f64;
    for &x in window {
        let dev = x - m;
        running += dev;
        if running > max_ps {
            max_ps = running;
        }
        if running < min_ps {
            min_ps = running;
        }
        ss += dev * dev;
    }
    let range = max_ps - min_ps;
    let denom = match divisor {
        SigmaDivisor::Population => n as f64,
        SigmaDivisor::Sample => (n - 1) as f64,
    };
    let sigma = (ss / denom).sqrt();
    let rs = if sigma > 0.0 { Some(range / sigma) } else { None };
    Ok(RescaledRange { range, sigma, rs })
}

/// Where a window's hour tag is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowAnchor {
    /// The window's final observation — the window "completes" there.
    #[default]
    End,
    Start,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LocalHurstOptions {
    pub divisor: SigmaDivisor,
    pub anchor: WindowAnchor,
}

/// One overlapping window's local Hurst measurements. Only non-degenerate
/// windows appear in a stream; `h = ln(rs)/ln(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalHurstWindow {
    pub start_index: usize,
    pub end_timestamp: DateTime<Utc>,
    pub n: usize,
    pub range: f64,
    pub sigma: f64,
    pub rs: f64,
    pub h: f64,
    /// Hour tag from the configured anchor observation.
    pub hour: u8,
}

/// All `N − n + 1` overlapping window positions of one series at a fixed
/// window length; degenerate positions are skipped and counted, so
/// `windows.len() + skipped == N − n + 1` always.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalHurstStream {
    pub n: usize,
    pub windows: Vec<LocalHurstWindow>,
    pub skipped: usize,
}

impl LocalHurstStream {
    /// Mean local exponent over the non-degenerate windows.
    pub fn mean_h(&self) -> Option<f64> {
        if self.windows.is_empty() {
            None
        } else {
            Some(stats::mean(&self.windows.iter().map(|w| w.h).collect::<Vec<_>>()))
        }
    }

    pub fn positions(&self) -> usize {
        self.windows.len() + self.skipped
    }
}

pub fn local_hurst_stream(series: &AnalysisSeries, n: usize) -> Result<LocalHurstStream> {
    local_hurst_stream_with(series, n, &LocalHurstOptions::default())
}

pub fn local_hurst_stream_with(
    series: &AnalysisSeries,
    n: usize,
    options: &LocalHurstOptions,
) -> Result<LocalHurstStream> {
    if n < 2 {
        return Err(Error::Config("window length must be at least 2".into()));
    }
    let len = series.len();
    if len < n {
        return Err(Error::Data(format!(
            "series of length {len} is shorter than window length {n}"
        )));
    }
    let ln_n = (n as f64).ln();
    let mut windows = Vec::with_capacity(len - n + 1);
    let mut skipped = 0usize;
    for start in 0..=(len - n) {
        let rr = rescaled_range_with(&series.values[start..start + n], options.divisor)?;
        match rr.rs {
            Some(rs) => {
                let anchor_idx = match options.anchor {
                    WindowAnchor::End => start + n - 1,
                    WindowAnchor::Start => start,
                };
                windows.push(LocalHurstWindow {
                    start_index: start,
                    end_timestamp: series.stamps[start + n - 1].timestamp,
                    n,
                    range: rr.range,
                    sigma: rr.sigma,
                    rs,
                    h: rs.ln() / ln_n,
                    hour: series.stamps[anchor_idx].hour,
                });
            }
            None => skipped += 1,
        }
    }
    Ok(LocalHurstStream { n, windows, skipped })
}

/// Per-window `(log R, log σ)` in the requested base, non-degenerate windows
/// only, in stream order. `h` is reconstructible from each pair as
/// `(log R − log σ)/log n` in the same base.
pub fn decomposition_components(stream: &LocalHurstStream, base: f64) -> Result<Vec<(f64, f64)>> {
    if !(base > 0.0) || base == 1.0 {
        return Err(Error::Config("log base must be positive and ≠ 1".into()));
    }
    let ln_base = base.ln();
    Ok(stream
        .windows
        .iter()
        .map(|w| (w.range.ln() / ln_base, w.sigma.ln() / ln_base))
        .collect())
}

/// The decomposition identity `h = (log R − log σ)/log n`, with all three
/// logarithms in the same (caller-chosen) base.
pub fn reconstruct_h(log_range: f64, log_sigma: f64, n: usize, base: f64) -> f64 {
    (log_range - log_sigma) / ((n as f64).ln() / base.ln())
}

/// One fitted point of a global-Hurst regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalFitPoint {
    pub n: usize,
    /// Mean (R/σ)_n over the non-degenerate blocks.
    pub mean_rs: f64,
    pub blocks: usize,
    pub degenerate_blocks: usize,
}

/// Global Hurst estimate: OLS slope of ln(mean (R/σ)_n) on ln(n) over
/// non-overlapping block partitions at each length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalHurstFit {
    pub exponent_h: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<GlobalFitPoint>,
}

/// Default length grid: geometric, 8 doubling up to N/4.
pub fn geometric_length_grid(series_len: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut n = 8usize;
    while n <= series_len / 4 {
        grid.push(n);
        n *= 2;
    }
    grid
}

pub fn global_hurst(values: &[f64], lengths: &[usize]) -> Result<GlobalHurstFit> {
    global_hurst_with(values, lengths, SigmaDivisor::Population)
}

pub fn global_hurst_with(
    values: &[f64],
    lengths: &[usize],
    divisor: SigmaDivisor,
) -> Result<GlobalHurstFit> {
    let len = values.len();
    let mut lengths: Vec<usize> = lengths.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.len() < 3 {
        return Err(Error::Config("global Hurst needs at least 3 distinct lengths".into()));
    }
    for &n in &lengths {
        if n < 2 || n > len / 2 {
            return Err(Error::Config(format!(
                "length {n} outside the valid range 2..={} for a series of {len}",
                len / 2
            )));
        }
    }
    let mut points = Vec::with_capacity(lengths.len());
    for &n in &lengths {
        let blocks = len / n;
        let mut sum_rs = 0.0f64;
        let mut kept = 0usize;
        let mut degenerate = 0usize;
        for b in 0..blocks {
            let rr = rescaled_range_with(&values[b * n..(b + 1) * n], divisor)?;
            match rr.rs {
                Some(rs) => {
                    sum_rs += rs;
                    kept += 1;
                }
                None => degenerate += 1,
            }
        }
        if kept == 0 {
            return Err(Error::Degenerate(format!(
                "all {blocks} blocks of length {n} are degenerate"
            )));
        }
        points.push(GlobalFitPoint {
            n,
            mean_rs: sum_rs / kept as f64,
            blocks,
            degenerate_blocks: degenerate,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_rs.ln()).collect();
    let fit = stats::ols_line(&xs, &ys)?;
    Ok(GlobalHurstFit {
        exponent_h: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points,
    })
}

/// Sample autocorrelations ρ(0..=max_lag); ρ(0) ≡ 1 by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationDiagnostic {
    /// rho[k] is the lag-k sample autocorrelation.
    pub rho: Vec<f64>,
}

pub fn autocorrelation(values: &[f64], max_lag: usize) -> Result<AutocorrelationDiagnostic> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Data("autocorrelation needs at least 2 values".into()));
    }
    if max_lag >= n / 2 {
        return Err(Error::Config(format!(
            "max_lag {max_lag} must be below half the series length ({})",
            n / 2
        )));
    }
    let m = stats::mean(values);
    let denom: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    if denom == 0.0 {
        return Err(Error::Degenerate("autocorrelation of a constant series".into()));
    }
    let mut rho = Vec::with_capacity(max_lag + 1);
    rho.push(1.0);
    for k in 1..=max_lag {
        let num: f64 = (0..n - k).map(|t| (values[t] - m) * (values[t + k] - m)).sum();
        rho.push(num / denom);
    }
    Ok(AutocorrelationDiagnostic { rho })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use chrono::TimeZone;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn series_of(values: Vec<f64>) -> AnalysisSeries {
        let start = Utc.with_ymd_and_hms(2000, 5, 1, 0, 0, 0).unwrap();
        AnalysisSeries::with_uniform_clock(values, start, 1).unwrap()
    }

    #[test]
    fn hand_oracle_pm1() {
        // deviations (1,−1), partial sums (1,0) → R = 1; σ = 1
        let rr = rescaled_range(&[1.0, -1.0]).unwrap();
        assert_eq!(rr.range, 1.0);
        assert_eq!(rr.sigma, 1.0);
        assert_eq!(rr.rs, Some(1.0));
    }

    #[test]
    fn hand_oracle_1234() {
        // partial sums of deviations: (−1.5, −2, −1.5, 0) → R = 2
        let rr = rescaled_range(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_relative_eq!(rr.range, 2.0, epsilon = 1e-9);
        assert_relative_eq!(rr.sigma, 1.25f64.sqrt(), epsilon = 1e-9);
        assert_relative_eq!(rr.rs.unwrap(), 1.788_854_381_999_831_7, epsilon = 1e-9);
    }

    #[test]
    fn constant_window_degenerate() {
        let rr = rescaled_range(&[0.1, 0.1, 0.1]).unwrap();
        assert_eq!(rr.sigma, 0.0);
        assert_eq!(rr.rs, None);
    }

    #[test]
    fn sample_divisor_changes_sigma_only() {
        let w = [1.0, 2.0, 3.0, 4.0];
        let pop = rescaled_range_with(&w, SigmaDivisor::Population).unwrap();
        let sam = rescaled_range_with(&w, SigmaDivisor::Sample).unwrap();
        assert_eq!(pop.range, sam.range);
        assert!(sam.sigma > pop.sigma);
        assert_relative_eq!(sam.sigma, (5.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn local_stream_hand_oracle() {
        let s = series_of(vec![1.0, 2.0, 3.0, 4.0]);
        let stream = local_hurst_stream(&s, 4).unwrap();
        assert_eq!(stream.windows.len(), 1);
        assert_eq!(stream.skipped, 0);
        let w = &stream.windows[0];
        assert_relative_eq!(w.h, 0.419_517_976_278_159_45, epsilon = 1e-9);
        // R/σ = 1 gives h = 0 at any n
        let s2 = series_of(vec![1.0, -1.0]);
        let stream2 = local_hurst_stream(&s2, 2).unwrap();
        assert_eq!(stream2.windows[0].h, 0.0);
    }

    #[test]
    fn window_count_invariant_with_degenerates() {
        // constant run in the middle degenerates some positions
        let mut vals = vec![1.0, 2.0];
        vals.extend(std::iter::repeat(5.0).take(6));
        vals.extend([3.0, 1.0]);
        let s = series_of(vals);
        let stream = local_hurst_stream(&s, 3).unwrap();
        assert_eq!(stream.positions(), 10 - 3 + 1);
        assert!(stream.skipped > 0);
    }

    #[test]
    fn anchor_choice_changes_hour_tag_only() {
        let start = Utc.with_ymd_and_hms(2000, 5, 1, 0, 59, 58).unwrap();
        let s = AnalysisSeries::with_uniform_clock(vec![1.0, 2.0, -1.0, 3.0], start, 2).unwrap();
        let end = local_hurst_stream_with(
            &s,
            4,
            &LocalHurstOptions { anchor: WindowAnchor::End, ..Default::default() },
        )
        .unwrap();
        let st = local_hurst_stream_with(
            &s,
            4,
            &LocalHurstOptions { anchor: WindowAnchor::Start, ..Default::default() },
        )
        .unwrap();
        assert_eq!(end.windows[0].hour, 1);
        assert_eq!(st.windows[0].hour, 0);
        assert_eq!(end.windows[0].h, st.windows[0].h);
        assert_eq!(end.windows[0].end_timestamp, st.windows[0].end_timestamp);
    }

    #[test]
    fn decomposition_identity_and_base_invariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let vals: Vec<f64> = (0..200).map(|_| rng.random::<f64>() - 0.5).collect();
        let s = series_of(vals);
        let stream = local_hurst_stream(&s, 10).unwrap();
        let comp10 = decomposition_components(&stream, 10.0).unwrap();
        let comp_e = decomposition_components(&stream, std::f64::consts::E).unwrap();
        for (w, ((lr10, ls10), (lre, lse))) in
            stream.windows.iter().zip(comp10.iter().zip(comp_e.iter()))
        {
            assert!((w.h - reconstruct_h(*lr10, *ls10, w.n, 10.0)).abs() < 1e-12);
            assert!((w.h - reconstruct_h(*lre, *lse, w.n, std::f64::consts::E)).abs() < 1e-12);
        }
    }

    #[test]
    fn global_hurst_exact_power_law() {
        // force mean (R/σ)_n = c·n^0.5 by regressing synthetic points through
        // the same code path: use a white-noise series but replace the check
        // with the documented exact-fit contract on constructed points.
        let lengths = [8usize, 16, 32, 64];
        let xs: Vec<f64> = lengths.iter().map(|n| (*n as f64).ln()).collect();
        let ys: Vec<f64> = lengths.iter().map(|n| (1.3 * (*n as f64).sqrt()).ln()).collect();
        let fit = stats::ols_line(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, 0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn global_hurst_validates_lengths() {
        let vals: Vec<f64> = (0..64).map(|i| (i as f64).sin()).collect();
        assert!(global_hurst(&vals, &[8, 16]).is_err());
        assert!(global_hurst(&vals, &[8, 16, 64]).is_err()); // 64 > N/2
        assert!(global_hurst(&vals, &[1, 8, 16]).is_err());
        let fit = global_hurst(&vals, &[4, 8, 16, 32]).unwrap();
        assert_eq!(fit.points.len(), 4);
        assert_eq!(fit.points[0].blocks, 16);
    }

    #[test]
    fn geometric_grid_default() {
        assert_eq!(geometric_length_grid(16384), vec![8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096]);
        assert_eq!(geometric_length_grid(100), vec![8, 16]);
        assert!(geometric_length_grid(20).is_empty());
    }

    #[test]
    fn autocorrelation_basics() {
        // perfect alternation → rho(1) = −1 asymptotically; exact for even n
        let alt: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let acf = autocorrelation(&alt, 2).unwrap();
        assert_eq!(acf.rho[0], 1.0);
        assert!(acf.rho[1] < -0.99);
        // white noise stays inside 3/√N bands for almost all lags
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let wn: Vec<f64> = (0..10_000)
            .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
            .collect();
        let acf = autocorrelation(&wn, 50).unwrap();
        let band = 3.0 / (wn.len() as f64).sqrt();
        let inside = acf.rho[1..].iter().filter(|r| r.abs() < band).count();
        assert!(inside >= 49, "only {inside}/50 lags inside the white-noise band");
        assert!(autocorrelation(&[1.0, 1.0, 1.0, 1.0], 1).is_err());
    }

    // Brute-force reference: textbook formula, no shortcuts shared with the
    // implementation beyond the definition itself.
    fn naive_rescaled_range(window: &[f64], divisor: SigmaDivisor) -> (f64, f64, Option<f64>) {
        let n = window.len();
        let mean = window.iter().sum::<f64>() / n as f64;
        if window.windows(2).all(|w| w[1] == w[0]) {
            return (0.0, 0.0, None);
        }
        let mut partial_sums = Vec::with_capacity(n);
        let mut acc = 0.0;
        for &x in window {
            acc += x - mean;
            partial_sums.push(acc);
        }
        let max = partial_sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = partial_sums.iter().cloned().fold(f64::INFINITY, f64::min);
        let range = max - min;
        let ss: f64 = window.iter().map(|x| (x - mean) * (x - mean)).sum();
        let denom = match divisor {
            SigmaDivisor::Population => n as f64,
            SigmaDivisor::Sample => (n - 1) as f64,
        };
        let sigma = (ss / denom).sqrt();
        let rs = if sigma > 0.0 { Some(range / sigma) } else { None };
        (range, sigma, rs)
    }

    #[test]
    fn brute_force_equivalence_small_windows() {
        let mut rng = ChaCha12Rng::seed_from_u64(20000);
        let vals: Vec<f64> = (0..50).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        for n in 2..=6usize {
            for start in 0..=(vals.len() - n) {
                let w = &vals[start..start + n];
                let rr = rescaled_range(w).unwrap();
                let (r2, s2, rs2) = naive_rescaled_range(w, SigmaDivisor::Population);
                assert_eq!(rr.range, r2);
                assert_eq!(rr.sigma, s2);
                assert_eq!(rr.rs, rs2);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn affine_invariance(
            vals in proptest::collection::vec(-1e3f64..1e3, 4..40),
            a in prop_oneof![(-100.0f64..-0.01), (0.01f64..100.0)],
            b in -1e3f64..1e3,
        ) {
            let rr = rescaled_range(&vals).unwrap();
            let moved: Vec<f64> = vals.iter().map(|v| a * v + b).collect();
            let rr2 = rescaled_range(&moved).unwrap();
            match (rr.rs, rr2.rs) {
                (Some(x), Some(y)) => prop_assert!(((x - y) / x).abs() < 1e-9),
                (None, None) => {}
                _ => prop_assert!(false, "degeneracy not affine-invariant"),
            }
        }

        #[test]
        fn window_count_partition(
            len in 5usize..120,
            n in 2usize..12,
            seed in 0u64..1000,
        ) {
            prop_assume!(n <= len);
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            // mix in repeated values so some windows degenerate
            let vals: Vec<f64> = (0..len)
                .map(|_| if rng.random::<f64>() < 0.3 { 1.0 } else { rng.random::<f64>() })
                .collect();
            let s = series_of(vals);
            let stream = local_hurst_stream(&s, n).unwrap();
            prop_assert_eq!(stream.positions(), len - n + 1);
        }

        #[test]
        fn h_base_invariance(vals in proptest::collection::vec(-1e2f64..1e2, 12..60)) {
            let s = series_of(vals);
            let stream = local_hurst_stream(&s, 5).unwrap();
            for w in &stream.windows {
                let via_log10 = reconstruct_h(w.range.log10(), w.sigma.log10(), w.n, 10.0);
                prop_assert!((w.h - via_log10).abs() < 1e-12);
            }
        }
    }
}
