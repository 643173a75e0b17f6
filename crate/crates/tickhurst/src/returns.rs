//! Tau-adjusted returns: convert a quote series into per-gap log returns
//! scaled by `scale_seconds / τ`, carrying hour/weekday bins, plus the
//! hourly return summary.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quote::QuoteSeries;
use crate::series::{AnalysisSeries, SeriesStamp};
use crate::stats::{self, SigmaDivisor};

/// Sign convention for the log difference of a quote pair `(Q_i, Q_{i+τ})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    /// `log Q_i − log Q_{i+τ}` — the earlier quote minus the later one (the
    /// negative of a conventional forward return).
    #[default]
    PaperLiteral,
    /// `log Q_{i+τ} − log Q_i`.
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogBase {
    #[default]
    Natural,
    Base10,
}

/// Configuration for the adjusted-return transform
/// `ar = logdiff × scale_seconds / τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnConfig {
    pub sign: SignConvention,
    /// Scale constant in seconds; 360 by default.
    pub scale_seconds: f64,
    pub log_base: LogBase,
    /// Optional τ cutoff: pairs with a larger gap (e.g. weekend closes) are
    /// excluded and counted. None keeps every positive-gap pair.
    pub max_tau_seconds: Option<f64>,
}

impl Default for ReturnConfig {
    fn default() -> Self {
        ReturnConfig {
            sign: SignConvention::PaperLiteral,
            scale_seconds: 360.0,
            log_base: LogBase::Natural,
            max_tau_seconds: None,
        }
    }
}

/// One adjusted return: `ar = raw_logdiff × scale_seconds/τ` with τ > 0,
/// stamped with the later quote's clock tags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnObservation {
    pub ar: f64,
    pub tau_seconds: f64,
    pub raw_logdiff: f64,
    pub timestamp: DateTime<Utc>,
    pub hour: u8,
    pub weekday: u8,
}

/// Ordered adjusted-return series with the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub observations: Vec<ReturnObservation>,
    pub config_echo: ReturnConfig,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// View as the shared analysis series (values = adjusted returns).
    pub fn analysis(&self) -> AnalysisSeries {
        AnalysisSeries {
            values: self.observations.iter().map(|o| o.ar).collect(),
            stamps: self
                .observations
                .iter()
                .map(|o| SeriesStamp { timestamp: o.timestamp, hour: o.hour, weekday: o.weekday })
                .collect(),
        }
    }
}

/// Exclusion counts and the config echo, emitted alongside the series so no
/// pair disappears unaccounted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnDiagnostics {
    pub input_quotes: usize,
    pub excluded_zero_gap: usize,
    pub excluded_over_cutoff: usize,
    pub config: ReturnConfig,
}

/// Build the adjusted-return series from consecutive quote pairs. Zero-gap
/// pairs are excluded (the transform divides by τ) and counted.
pub fn adjusted_returns(
    series: &QuoteSeries,
    config: &ReturnConfig,
) -> Result<(ReturnSeries, ReturnDiagnostics)> {
    if series.len() < 2 {
        return Err(Error::Data("adjusted returns need at least 2 quotes".into()));
    }
    if !(config.scale_seconds > 0.0) {
        return Err(Error::Config("scale_seconds must be positive".into()));
    }
    if let Some(cutoff) = config.max_tau_seconds {
        if !(cutoff > 0.0) {
            return Err(Error::Config("max_tau_seconds must be positive when set".into()));
        }
    }
    let mut observations = Vec::with_capacity(series.len() - 1);
    let mut excluded_zero_gap = 0usize;
    let mut excluded_over_cutoff = 0usize;
    for pair in series.ticks.windows(2) {
        let (earlier, later) = (&pair[0], &pair[1]);
        if !(earlier.mid > 0.0) || !(later.mid > 0.0) {
            return Err(Error::Data(format!(
                "non-positive price at {}: cannot take logarithm",
                later.timestamp
            )));
        }
        let tau_seconds = (later.timestamp - earlier.timestamp).num_seconds() as f64;
        if tau_seconds == 0.0 {
            excluded_zero_gap += 1;
            continue;
        }
        if config.max_tau_seconds.is_some_and(|cutoff| tau_seconds > cutoff) {
            excluded_over_cutoff += 1;
            continue;
        }
        let log = |x: f64| match config.log_base {
            LogBase::Natural => x.ln(),
            LogBase::Base10 => x.log10(),
        };
        let raw_logdiff = match config.sign {
            SignConvention::PaperLiteral => log(earlier.mid) - log(later.mid),
            SignConvention::Forward => log(later.mid) - log(earlier.mid),
        };
        observations.push(ReturnObservation {
            ar: raw_logdiff * (config.scale_seconds / tau_seconds),
            tau_seconds,
            raw_logdiff,
            timestamp: later.timestamp,
            hour: later.hour,
            weekday: later.weekday,
        });
    }
    let diagnostics = ReturnDiagnostics {
        input_quotes: series.len(),
        excluded_zero_gap,
        excluded_over_cutoff,
        config: *config,
    };
    Ok((ReturnSeries { observations, config_echo: *config }, diagnostics))
}

/// Per-hour return summary. `mean`/`std`/`variance` are flagged `None` when
/// the bin has too few observations (mean needs 1, dispersion needs 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourlyReturnRow {
    pub hour: u8,
    pub count: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub variance: Option<f64>,
}

/// 24 rows of per-hour mean/σ over any hour-tagged value series.
pub fn hourly_return_summary(
    series: &AnalysisSeries,
    divisor: SigmaDivisor,
) -> Vec<HourlyReturnRow> {
    let mut by_hour: Vec<Vec<f64>> = vec![Vec::new(); 24];
    for (hour, v) in series.hour_tagged() {
        by_hour[hour as usize].push(v);
    }
    (0..24u8)
        .map(|h| {
            let vals = &by_hour[h as usize];
            let count = vals.len();
            let mean = if count >= 1 { Some(stats::mean(vals)) } else { None };
            let std = if count >= 2 { stats::std_dev(vals, divisor) } else { None };
            HourlyReturnRow { hour: h, count, mean, std, variance: std.map(|s| s * s) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quote::{parse_quote_reader, FormatConfig};
    use approx::assert_relative_eq;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn quotes_from(rows: &[(&str, f64)]) -> QuoteSeries {
        let mut data = String::from("timestamp,price\n");
        for (ts, p) in rows {
            data.push_str(&format!("{ts},{p}\n"));
        }
        let config = FormatConfig {
            price_columns: crate::quote::PriceColumns::Single { price: "price".into() },
            ..Default::default()
        };
        parse_quote_reader(data.as_bytes(), "test", &config).unwrap().series
    }

    #[test]
    fn equal_quotes_give_zero_return() {
        let q = quotes_from(&[("2000-05-05T09:00:00Z", 1.5), ("2000-05-05T09:06:00Z", 1.5)]);
        let (rs, _) = adjusted_returns(&q, &ReturnConfig::default()).unwrap();
        assert_eq!(rs.observations[0].ar, 0.0);
    }

    #[test]
    fn hand_oracle_ln2() {
        // Q_i = 1, Q_{i+τ} = 2, τ = 360 s, paper-literal sign → −ln 2
        let q = quotes_from(&[("2000-05-05T09:00:00Z", 1.0), ("2000-05-05T09:06:00Z", 2.0)]);
        let (rs, _) = adjusted_returns(&q, &ReturnConfig::default()).unwrap();
        let o = &rs.observations[0];
        assert_eq!(o.tau_seconds, 360.0);
        assert_relative_eq!(o.ar, -std::f64::consts::LN_2, epsilon = 1e-12);
        // τ = 720 s halves it exactly
        let q2 = quotes_from(&[("2000-05-05T09:00:00Z", 1.0), ("2000-05-05T09:12:00Z", 2.0)]);
        let (rs2, _) = adjusted_returns(&q2, &ReturnConfig::default()).unwrap();
        assert_relative_eq!(rs2.observations[0].ar, -std::f64::consts::LN_2 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn observation_carries_later_quote_tags() {
        let q = quotes_from(&[("2000-05-05T09:59:59Z", 1.0), ("2000-05-05T10:00:01Z", 1.1)]);
        let (rs, _) = adjusted_returns(&q, &ReturnConfig::default()).unwrap();
        let o = &rs.observations[0];
        assert_eq!(o.hour, 10);
        assert_eq!(o.timestamp, Utc.with_ymd_and_hms(2000, 5, 5, 10, 0, 1).unwrap());
    }

    #[test]
    fn zero_gaps_excluded_and_counted() {
        let q = quotes_from(&[
            ("2000-05-05T09:00:00Z", 1.0),
            ("2000-05-05T09:00:00Z", 1.2),
            ("2000-05-05T09:00:10Z", 1.4),
        ]);
        let (rs, diag) = adjusted_returns(&q, &ReturnConfig::default()).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(diag.excluded_zero_gap, 1);
        // count conservation: observations + excluded + 1 = quotes
        assert_eq!(rs.len() + diag.excluded_zero_gap + 1, q.len());
    }

    #[test]
    fn tau_cutoff_excludes_weekend_gaps() {
        let q = quotes_from(&[
            ("2000-05-05T21:00:00Z", 1.0),
            ("2000-05-05T21:01:00Z", 1.1),
            ("2000-05-08T06:00:00Z", 1.2), // Friday→Monday gap
        ]);
        let config =
            ReturnConfig { max_tau_seconds: Some(86_400.0), ..Default::default() };
        let (rs, diag) = adjusted_returns(&q, &config).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(diag.excluded_over_cutoff, 1);
    }

    #[test]
    fn hourly_summary_golden_row() {
        // hour 3 constructed as {μ−s, μ+s}×2 → mean 10.153, population σ 14.454
        let (mu, s) = (10.153, 14.454);
        let start = Utc.with_ymd_and_hms(2000, 5, 1, 3, 0, 0).unwrap();
        let series = AnalysisSeries::with_uniform_clock(
            vec![mu - s, mu + s, mu - s, mu + s],
            start,
            60,
        )
        .unwrap();
        let rows = hourly_return_summary(&series, SigmaDivisor::Population);
        assert_eq!(rows[3].count, 4);
        assert_relative_eq!(rows[3].mean.unwrap(), 10.153, epsilon = 1e-12);
        assert_relative_eq!(rows[3].std.unwrap(), 14.454, epsilon = 1e-12);
        assert_eq!(rows[4].count, 0);
        assert_eq!(rows[4].mean, None);
        assert_eq!(rows[4].std, None);
    }

    #[test]
    fn hourly_summary_constant_bin() {
        let start = Utc.with_ymd_and_hms(2000, 5, 1, 14, 0, 0).unwrap();
        let series =
            AnalysisSeries::with_uniform_clock(vec![0.25; 10], start, 30).unwrap();
        let rows = hourly_return_summary(&series, SigmaDivisor::Population);
        assert_eq!(rows[14].mean, Some(0.25));
        assert_eq!(rows[14].std, Some(0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sign_flip_is_exact_negation(
            steps in proptest::collection::vec((0.1f64..10.0, 1i64..5000), 2..29),
            last_price in 0.1f64..10.0,
        ) {
            let prices: Vec<f64> =
                steps.iter().map(|(p, _)| *p).chain([last_price]).collect();
            let gaps: Vec<i64> = steps.iter().map(|(_, g)| *g).collect();
            let start = Utc.with_ymd_and_hms(2000, 5, 5, 0, 0, 0).unwrap();
            let mut t = start;
            let mut rows = vec![];
            for (i, p) in prices.iter().enumerate() {
                rows.push((t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true), *p));
                if i < gaps.len() {
                    t += chrono::Duration::seconds(gaps[i]);
                }
            }
            let refs: Vec<(&str, f64)> = rows.iter().map(|(s, p)| (s.as_str(), *p)).collect();
            let q = quotes_from(&refs);
            let (lit, _) = adjusted_returns(&q, &ReturnConfig::default()).unwrap();
            let (fwd, _) = adjusted_returns(
                &q,
                &ReturnConfig { sign: SignConvention::Forward, ..Default::default() },
            ).unwrap();
            for (a, b) in lit.observations.iter().zip(&fwd.observations) {
                prop_assert_eq!(a.ar, -b.ar);
            }
            // scale linearity: doubling the scale doubles every ar exactly
            let (doubled, _) = adjusted_returns(
                &q,
                &ReturnConfig { scale_seconds: 720.0, ..Default::default() },
            ).unwrap();
            for (a, d) in lit.observations.iter().zip(&doubled.observations) {
                prop_assert_eq!(2.0 * a.ar, d.ar);
            }
            // log-base change scales every ar by the same constant
            let (b10, _) = adjusted_returns(
                &q,
                &ReturnConfig { log_base: LogBase::Base10, ..Default::default() },
            ).unwrap();
            for (a, b) in lit.observations.iter().zip(&b10.observations) {
                if a.ar != 0.0 {
                    prop_assert!((b.ar * std::f64::consts::LN_10 - a.ar).abs()
                        <= 1e-12 * a.ar.abs());
                }
            }
        }
    }
}
