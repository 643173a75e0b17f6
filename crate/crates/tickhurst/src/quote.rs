//! Quote-file ingestion: parse delimited time-stamped quote files into a
//! validated, chronologically ordered series with clock-time fractions,
//! inter-quote gaps, hour/weekday coding, and the hour-by-weekday
//! cross-tabulation with arrival statistics.

use std::io::Read;
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveTime, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{self, SigmaDivisor};

/// One validated quote. Exactly one of `price` or `bid`/`ask` is populated
/// from the file; `mid` is always derived (the price itself, or the
/// arithmetic bid/ask mean).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuoteTick {
    pub timestamp: DateTime<Utc>,
    pub bid: Option<f64>,
    pub ask: Option<f64>,
    pub price: Option<f64>,
    pub mid: f64,
    /// Seconds since midnight GMT divided by 86 400, in [0, 1).
    pub day_fraction: f64,
    /// 1 = Monday .. 7 = Sunday.
    pub weekday: u8,
    /// 0..23 GMT.
    pub hour: u8,
}

impl QuoteTick {
    fn from_parts(
        timestamp: DateTime<Utc>,
        bid: Option<f64>,
        ask: Option<f64>,
        price: Option<f64>,
    ) -> Self {
        let mid = match (bid, ask, price) {
            (Some(b), Some(a), _) => (b + a) / 2.0,
            (_, _, Some(p)) => p,
            _ => unreachable!("validated rows populate bid/ask or price"),
        };
        QuoteTick {
            timestamp,
            bid,
            ask,
            price,
            mid,
            day_fraction: to_day_fraction(timestamp),
            weekday: timestamp.weekday().number_from_monday() as u8,
            hour: timestamp.hour() as u8,
        }
    }
}

/// Chronologically ordered quote series (ties only as resolved by the
/// configured tie policy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteSeries {
    pub ticks: Vec<QuoteTick>,
    pub source_label: String,
}

impl QuoteSeries {
    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    /// First/last timestamps.
    pub fn span(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        match (self.ticks.first(), self.ticks.last()) {
            (Some(a), Some(b)) => Some((a.timestamp, b.timestamp)),
            _ => None,
        }
    }

    /// Calendar days touched by the span, inclusive of both end dates.
    pub fn span_calendar_days(&self) -> Option<i64> {
        self.span().map(|(a, b)| (b.date_naive() - a.date_naive()).num_days() + 1)
    }
}

/// How rows sharing one timestamp (second resolution) are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// Preserve file order; the duplicate stays with a zero gap (such pairs
    /// are excluded later from adjusted returns, where τ = 0 divides).
    #[default]
    KeepOrder,
    /// Keep the first row of each tied run, drop the rest.
    DropLater,
    /// Collapse each tied run into one tick with averaged prices.
    AveragePrice,
}

/// Timestamp column layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TimestampLayout {
    /// RFC 3339 / ISO-8601, e.g. `2000-05-05T09:49:11Z`; read as GMT.
    Iso8601,
    /// `D:HH:MM:SS` where D is a 0-based calendar-day offset from
    /// `base_date`, e.g. `0:09:49:11`.
    DayOffset { base_date: NaiveDate },
}

/// Which columns carry prices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PriceColumns {
    Single { price: String },
    BidAsk { bid: String, ask: String },
}

/// Input-format configuration for quote files: delimited text with a header
/// row naming the timestamp column and either a price column or bid/ask
/// columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatConfig {
    pub delimiter: u8,
    pub timestamp_column: String,
    pub layout: TimestampLayout,
    pub price_columns: PriceColumns,
    pub tie_policy: TiePolicy,
    /// Weekdays (1 = Monday .. 7 = Sunday) whose quotes are excluded. Empty
    /// by default: weekend quotes stay in.
    pub exclude_weekdays: Vec<u8>,
    /// A bid/ask row is rejected when `bid − ask > crossed_tolerance`.
    pub crossed_tolerance: f64,
}

impl Default for FormatConfig {
    fn default() -> Self {
        FormatConfig {
            delimiter: b',',
            timestamp_column: "timestamp".into(),
            layout: TimestampLayout::Iso8601,
            price_columns: PriceColumns::BidAsk { bid: "bid".into(), ask: "ask".into() },
            tie_policy: TiePolicy::KeepOrder,
            exclude_weekdays: Vec::new(),
            crossed_tolerance: 0.0,
        }
    }
}

/// One rejected input row with the reason it failed validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based data-row number (the header is row 0).
    pub row: u64,
    pub raw: String,
    pub reason: String,
}

/// Result of parsing one quote file: the validated series plus everything
/// that was filtered on the way, so nothing is silently dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub series: QuoteSeries,
    pub rejects: Vec<RejectedRow>,
    /// Rows dropped by `TiePolicy::DropLater`.
    pub dropped_ties: usize,
    /// Rows merged away by `TiePolicy::AveragePrice`.
    pub merged_ties: usize,
    /// Rows removed by the weekday exclusion list.
    pub excluded_weekday_rows: usize,
}

/// Seconds since midnight GMT / 86 400 — 12:00:00 maps to 0.5.
pub fn to_day_fraction(timestamp: DateTime<Utc>) -> f64 {
    timestamp.time().num_seconds_from_midnight() as f64 / 86_400.0
}

pub fn parse_quote_file(path: &Path, config: &FormatConfig) -> Result<IngestReport> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open quote file {}: {e}", path.display())))?;
    parse_quote_reader(file, &path.display().to_string(), config)
}

pub fn parse_quote_reader<R: Read>(
    reader: R,
    source_label: &str,
    config: &FormatConfig,
) -> Result<IngestReport> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .delimiter(config.delimiter)
        .flexible(true)
        .from_reader(reader);

    let headers = csv_reader
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header row: {e}")))?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Data(format!("missing column '{name}' in header")))
    };
    let ts_idx = find(&config.timestamp_column)?;
    let price_idx = match &config.price_columns {
        PriceColumns::Single { price } => PriceIdx::Single(find(price)?),
        PriceColumns::BidAsk { bid, ask } => PriceIdx::BidAsk(find(bid)?, find(ask)?),
    };

    let mut ticks: Vec<QuoteTick> = Vec::new();
    let mut rejects: Vec<RejectedRow> = Vec::new();
    let mut excluded_weekday_rows = 0usize;
    for (i, record) in csv_reader.records().enumerate() {
        let row_no = (i + 1) as u64;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                rejects.push(RejectedRow {
                    row: row_no,
                    raw: String::new(),
                    reason: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        let raw = record.iter().collect::<Vec<_>>().join(",");
        match parse_row(&record, ts_idx, &price_idx, config) {
            Ok(tick) => {
                if config.exclude_weekdays.contains(&tick.weekday) {
                    excluded_weekday_rows += 1;
                } else {
                    ticks.push(tick);
                }
            }
            Err(reason) => rejects.push(RejectedRow { row: row_no, raw, reason }),
        }
    }

    // Chronological order; stable sort preserves file order within ties.
    ticks.sort_by_key(|t| t.timestamp);
    let (ticks, dropped_ties, merged_ties) = resolve_ties(ticks, config.tie_policy);

    if ticks.len() < 2 {
        return Err(Error::Data(format!(
            "fewer than 2 valid rows in {source_label} ({} valid, {} rejected)",
            ticks.len(),
            rejects.len()
        )));
    }

    Ok(IngestReport {
        series: QuoteSeries { ticks, source_label: source_label.to_string() },
        rejects,
        dropped_ties,
        merged_ties,
        excluded_weekday_rows,
    })
}

enum PriceIdx {
    Single(usize),
    BidAsk(usize, usize),
}

fn parse_row(
    record: &csv::StringRecord,
    ts_idx: usize,
    price_idx: &PriceIdx,
    config: &FormatConfig,
) -> std::result::Result<QuoteTick, String> {
    let ts_raw = record.get(ts_idx).ok_or("missing timestamp field")?.trim();
    let timestamp = parse_timestamp(ts_raw, &config.layout)?;
    let parse_price = |idx: usize, what: &str| -> std::result::Result<f64, String> {
        let raw = record.get(idx).ok_or_else(|| format!("missing {what} field"))?.trim();
        let v: f64 = raw.parse().map_err(|_| format!("unparseable {what} '{raw}'"))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(format!("non-positive {what} {raw}"));
        }
        Ok(v)
    };
    match price_idx {
        PriceIdx::Single(p) => {
            let price = parse_price(*p, "price")?;
            Ok(QuoteTick::from_parts(timestamp, None, None, Some(price)))
        }
        PriceIdx::BidAsk(b, a) => {
            let bid = parse_price(*b, "bid")?;
            let ask = parse_price(*a, "ask")?;
            if bid - ask > config.crossed_tolerance {
                return Err(format!("crossed quote: ask {ask} below bid {bid}"));
            }
            Ok(QuoteTick::from_parts(timestamp, Some(bid), Some(ask), None))
        }
    }
}

fn parse_timestamp(
    raw: &str,
    layout: &TimestampLayout,
) -> std::result::Result<DateTime<Utc>, String> {
    match layout {
        TimestampLayout::Iso8601 => DateTime::parse_from_rfc3339(raw)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| format!("unparseable timestamp '{raw}': {e}")),
        TimestampLayout::DayOffset { base_date } => {
            let (day_part, time_part) = raw
                .split_once(':')
                .ok_or_else(|| format!("unparseable timestamp '{raw}': expected D:HH:MM:SS"))?;
            let days: i64 = day_part
                .parse()
                .map_err(|_| format!("unparseable day offset '{day_part}' in '{raw}'"))?;
            if days < 0 {
                return Err(format!("negative day offset in '{raw}'"));
            }
            let time = NaiveTime::parse_from_str(time_part, "%H:%M:%S")
                .map_err(|e| format!("unparseable time '{time_part}' in '{raw}': {e}"))?;
            let date = *base_date + Duration::days(days);
            Ok(Utc.from_utc_datetime(&date.and_time(time)))
        }
    }
}

fn resolve_ties(ticks: Vec<QuoteTick>, policy: TiePolicy) -> (Vec<QuoteTick>, usize, usize) {
    match policy {
        TiePolicy::KeepOrder => (ticks, 0, 0),
        TiePolicy::DropLater => {
            let mut out: Vec<QuoteTick> = Vec::with_capacity(ticks.len());
            let mut dropped = 0usize;
            for t in ticks {
                if out.last().is_some_and(|p| p.timestamp == t.timestamp) {
                    dropped += 1;
                } else {
                    out.push(t);
                }
            }
            (out, dropped, 0)
        }
        TiePolicy::AveragePrice => {
            let mut out: Vec<QuoteTick> = Vec::with_capacity(ticks.len());
            let mut merged = 0usize;
            let mut i = 0usize;
            while i < ticks.len() {
                let mut j = i + 1;
                while j < ticks.len() && ticks[j].timestamp == ticks[i].timestamp {
                    j += 1;
                }
                if j - i == 1 {
                    out.push(ticks[i]);
                } else {
                    let run = &ticks[i..j];
                    let avg = |f: fn(&QuoteTick) -> Option<f64>| -> Option<f64> {
                        let vals: Vec<f64> = run.iter().filter_map(f).collect();
                        if vals.len() == run.len() {
                            Some(stats::mean(&vals))
                        } else {
                            None
                        }
                    };
                    let bid = avg(|t| t.bid);
                    let ask = avg(|t| t.ask);
                    let price = if bid.is_some() && ask.is_some() {
                        None
                    } else {
                        Some(stats::mean(&run.iter().map(|t| t.mid).collect::<Vec<_>>()))
                    };
                    out.push(QuoteTick::from_parts(ticks[i].timestamp, bid, ask, price));
                    merged += j - i - 1;
                }
                i = j;
            }
            (out, 0, merged)
        }
    }
}

/// One inter-quote gap, attributed to the hour/weekday of the LATER quote
/// (the gap "ends" when that quote arrives).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapObservation {
    pub gap_seconds: f64,
    pub hour: u8,
    pub weekday: u8,
}

/// The `len − 1` consecutive gaps of a sorted series; zero gaps (resolved
/// ties) are included.
pub fn inter_quote_gaps(series: &QuoteSeries) -> Vec<GapObservation> {
    series
        .ticks
        .windows(2)
        .map(|w| GapObservation {
            gap_seconds: (w[1].timestamp - w[0].timestamp).num_seconds() as f64,
            hour: w[1].hour,
            weekday: w[1].weekday,
        })
        .collect()
}

/// Arrival statistics for one hour of the day: how many gaps ended in this
/// hour, their mean in minutes, and their coefficient of variation. Both
/// statistics are flagged `None` (never fabricated) when undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalStats {
    pub hour: u8,
    /// Number of gaps attributed to this hour (Σ over hours = len − 1).
    pub count: usize,
    pub mean_gap_min: Option<f64>,
    pub cv_gap: Option<f64>,
}

fn arrival_from_gaps(hour: u8, gaps: &[f64]) -> ArrivalStats {
    let count = gaps.len();
    let mean_gap_min = if count >= 1 { Some(stats::mean(gaps) / 60.0) } else { None };
    let cv_gap = if count >= 2 {
        let m = stats::mean(gaps);
        if m == 0.0 {
            None
        } else {
            Some(stats::std_dev(gaps, SigmaDivisor::Population).expect("count >= 2") / m)
        }
    } else {
        None
    };
    ArrivalStats { hour, count, mean_gap_min, cv_gap }
}

/// One crosstab row: quote counts across the seven weekdays for this hour,
/// plus the hour's arrival statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstabRow {
    pub hour: u8,
    /// Monday..Sunday counts (7 cells).
    pub weekday_counts: Vec<usize>,
    pub total: usize,
    pub mean_gap_min: Option<f64>,
    pub cv_gap: Option<f64>,
}

/// Hour-by-weekday cross-tabulation of quote counts with per-hour arrival
/// statistics. Counts partition the series: the grand total equals the
/// series length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstabReport {
    pub rows: Vec<CrosstabRow>,
    /// Monday..Sunday totals.
    pub weekday_totals: Vec<usize>,
    pub grand_total: usize,
    /// Arrival statistics over all gaps regardless of hour.
    pub overall_mean_gap_min: Option<f64>,
    pub overall_cv_gap: Option<f64>,
}

pub fn arrival_stats(series: &QuoteSeries) -> Vec<ArrivalStats> {
    let gaps = inter_quote_gaps(series);
    let mut by_hour: Vec<Vec<f64>> = vec![Vec::new(); 24];
    for g in &gaps {
        by_hour[g.hour as usize].push(g.gap_seconds);
    }
    (0..24).map(|h| arrival_from_gaps(h as u8, &by_hour[h])).collect()
}

pub fn crosstab_by_hour_weekday(series: &QuoteSeries) -> CrosstabReport {
    let mut counts = [[0usize; 7]; 24];
    for t in &series.ticks {
        counts[t.hour as usize][(t.weekday - 1) as usize] += 1;
    }
    let arrivals = arrival_stats(series);
    let rows: Vec<CrosstabRow> = (0..24)
        .map(|h| {
            let weekday_counts = counts[h].to_vec();
            CrosstabRow {
                hour: h as u8,
                total: weekday_counts.iter().sum(),
                weekday_counts,
                mean_gap_min: arrivals[h].mean_gap_min,
                cv_gap: arrivals[h].cv_gap,
            }
        })
        .collect();
    let weekday_totals: Vec<usize> =
        (0..7).map(|w| (0..24).map(|h| counts[h][w]).sum()).collect();
    let all_gaps: Vec<f64> = inter_quote_gaps(series).iter().map(|g| g.gap_seconds).collect();
    let overall = arrival_from_gaps(0, &all_gaps);
    CrosstabReport {
        rows,
        weekday_totals,
        grand_total: series.len(),
        overall_mean_gap_min: overall.mean_gap_min,
        overall_cv_gap: overall.cv_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn parse_str(data: &str, config: &FormatConfig) -> Result<IngestReport> {
        parse_quote_reader(data.as_bytes(), "test", config)
    }

    #[test]
    fn parses_bid_ask_row() {
        let data = "timestamp,bid,ask\n2000-05-05T09:49:11Z,0.5810,0.5815\n2000-05-05T09:49:20Z,0.5812,0.5814\n";
        let report = parse_str(data, &FormatConfig::default()).unwrap();
        let t = &report.series.ticks[0];
        assert_relative_eq!(t.mid, 0.58125, epsilon = 1e-12);
        assert_eq!(t.hour, 9);
        assert_eq!(t.weekday, 5); // 2000-05-05 was a Friday
        assert!(report.rejects.is_empty());
    }

    #[test]
    fn day_fraction_examples() {
        let noon = Utc.with_ymd_and_hms(2001, 3, 7, 12, 0, 0).unwrap();
        assert_eq!(to_day_fraction(noon), 0.5);
        let one_pm = Utc.with_ymd_and_hms(2001, 3, 7, 13, 0, 0).unwrap();
        assert_relative_eq!(to_day_fraction(one_pm), 0.541_666_666_666, epsilon = 1e-9);
        let midnight = Utc.with_ymd_and_hms(2001, 3, 7, 0, 0, 0).unwrap();
        assert_eq!(to_day_fraction(midnight), 0.0);
    }

    #[test]
    fn empty_file_fails_with_fewer_than_two_rows() {
        let err = parse_str("timestamp,bid,ask\n", &FormatConfig::default()).unwrap_err();
        match err {
            Error::Data(msg) => assert!(msg.contains("fewer than 2 valid rows"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_carry_reasons() {
        let data = "timestamp,bid,ask\n\
            2000-05-05T09:49:11Z,0.5810,0.5815\n\
            not-a-time,0.5,0.6\n\
            2000-05-05T09:50:00Z,-1.0,0.6\n\
            2000-05-05T09:51:00Z,0.7,0.5\n\
            2000-05-05T09:52:00Z,0.5810,0.5815\n";
        let report = parse_str(data, &FormatConfig::default()).unwrap();
        assert_eq!(report.series.len(), 2);
        assert_eq!(report.rejects.len(), 3);
        assert!(report.rejects[0].reason.contains("unparseable timestamp"));
        assert!(report.rejects[1].reason.contains("non-positive bid"));
        assert!(report.rejects[2].reason.contains("crossed quote"));
        assert_eq!(report.rejects[0].row, 2);
    }

    #[test]
    fn single_price_layout_and_day_offset() {
        let config = FormatConfig {
            timestamp_column: "time".into(),
            layout: TimestampLayout::DayOffset {
                base_date: NaiveDate::from_ymd_opt(2000, 5, 5).unwrap(),
            },
            price_columns: PriceColumns::Single { price: "quote".into() },
            ..Default::default()
        };
        let data = "time,quote\n0:09:49:11,0.5812\n1:00:00:30,0.5820\n12:23:59:59,0.5825\n";
        let report = parse_str(data, &config).unwrap();
        let ticks = &report.series.ticks;
        assert_eq!(
            ticks[0].timestamp,
            Utc.with_ymd_and_hms(2000, 5, 5, 9, 49, 11).unwrap()
        );
        assert_eq!(
            ticks[1].timestamp,
            Utc.with_ymd_and_hms(2000, 5, 6, 0, 0, 30).unwrap()
        );
        assert_eq!(
            ticks[2].timestamp,
            Utc.with_ymd_and_hms(2000, 5, 17, 23, 59, 59).unwrap()
        );
        assert_eq!(ticks[0].mid, 0.5812);
        assert_eq!(ticks[0].price, Some(0.5812));
        assert_eq!(ticks[0].bid, None);
    }

    #[test]
    fn tie_policies() {
        let data = "timestamp,bid,ask\n\
            2000-05-05T09:00:00Z,1.0,2.0\n\
            2000-05-05T09:00:00Z,3.0,4.0\n\
            2000-05-05T09:00:05Z,1.0,1.2\n";
        let keep = parse_str(data, &FormatConfig::default()).unwrap();
        assert_eq!(keep.series.len(), 3);
        let gaps = inter_quote_gaps(&keep.series);
        assert_eq!(gaps[0].gap_seconds, 0.0);

        let drop = parse_str(
            data,
            &FormatConfig { tie_policy: TiePolicy::DropLater, ..Default::default() },
        )
        .unwrap();
        assert_eq!(drop.series.len(), 2);
        assert_eq!(drop.dropped_ties, 1);
        assert_eq!(drop.series.ticks[0].mid, 1.5);

        let avg = parse_str(
            data,
            &FormatConfig { tie_policy: TiePolicy::AveragePrice, ..Default::default() },
        )
        .unwrap();
        assert_eq!(avg.series.len(), 2);
        assert_eq!(avg.merged_ties, 1);
        assert_eq!(avg.series.ticks[0].bid, Some(2.0));
        assert_eq!(avg.series.ticks[0].ask, Some(3.0));
        assert_eq!(avg.series.ticks[0].mid, 2.5);
    }

    #[test]
    fn weekday_exclusion() {
        // 2000-05-06 Saturday, 2000-05-07 Sunday
        let data = "timestamp,bid,ask\n\
            2000-05-05T10:00:00Z,1.0,1.1\n\
            2000-05-06T10:00:00Z,1.0,1.1\n\
            2000-05-07T10:00:00Z,1.0,1.1\n\
            2000-05-08T10:00:00Z,1.0,1.1\n";
        let report = parse_str(
            data,
            &FormatConfig { exclude_weekdays: vec![6, 7], ..Default::default() },
        )
        .unwrap();
        assert_eq!(report.series.len(), 2);
        assert_eq!(report.excluded_weekday_rows, 2);
        assert_eq!(report.series.ticks[0].weekday, 5);
        assert_eq!(report.series.ticks[1].weekday, 1);
    }

    #[test]
    fn gaps_attributed_to_later_quote() {
        let data = "timestamp,bid,ask\n\
            2000-05-05T11:59:00Z,1.0,1.1\n\
            2000-05-05T12:00:00Z,1.0,1.1\n\
            2000-05-05T13:00:00Z,1.0,1.1\n";
        let report = parse_str(data, &FormatConfig::default()).unwrap();
        let gaps = inter_quote_gaps(&report.series);
        assert_eq!(gaps.len(), 2);
        assert_eq!(gaps[0].gap_seconds, 60.0);
        assert_eq!(gaps[0].hour, 12);
        assert_eq!(gaps[1].gap_seconds, 3600.0);
        assert_eq!(gaps[1].hour, 13);
        // 3600 s in day-fraction terms: 0.0417
        assert_relative_eq!(gaps[1].gap_seconds / 86_400.0, 0.0417, epsilon = 5e-5);
    }

    #[test]
    fn constant_gaps_have_zero_cv() {
        let mut data = String::from("timestamp,bid,ask\n");
        let start = Utc.with_ymd_and_hms(2000, 5, 5, 6, 0, 0).unwrap();
        for i in 0..101 {
            let t = start + Duration::seconds(90 * i);
            data.push_str(&format!(
                "{},1.0,1.1\n",
                t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
            ));
        }
        let report = parse_str(&data, &FormatConfig::default()).unwrap();
        let stats = arrival_stats(&report.series);
        // quotes run 06:00:00..08:30:00; hour 7 is fully inside with 90 s gaps
        let h7 = &stats[7];
        assert_eq!(h7.count, 40);
        assert_relative_eq!(h7.mean_gap_min.unwrap(), 1.5, epsilon = 1e-12);
        assert_relative_eq!(h7.cv_gap.unwrap(), 0.0, epsilon = 1e-12);
        // single-gap hours have no defined cv
        let total: usize = stats.iter().map(|s| s.count).sum();
        assert_eq!(total, 100);
    }

    #[test]
    fn crosstab_partitions_series() {
        let data = "timestamp,bid,ask\n\
            2000-05-05T06:10:00Z,1.0,1.1\n\
            2000-05-05T06:20:00Z,1.0,1.1\n\
            2000-05-05T07:10:00Z,1.0,1.1\n\
            2000-05-08T06:15:00Z,1.0,1.1\n";
        let report = parse_str(data, &FormatConfig::default()).unwrap();
        let ct = crosstab_by_hour_weekday(&report.series);
        assert_eq!(ct.grand_total, 4);
        assert_eq!(ct.rows.len(), 24);
        // hour 6: two Friday quotes + one Monday quote
        assert_eq!(ct.rows[6].weekday_counts[4], 2);
        assert_eq!(ct.rows[6].weekday_counts[0], 1);
        assert_eq!(ct.rows[6].total, 3);
        assert_eq!(ct.rows[7].total, 1);
        let sum: usize = ct.rows.iter().map(|r| r.total).sum();
        assert_eq!(sum, ct.grand_total);
        assert_eq!(ct.weekday_totals.iter().sum::<usize>(), ct.grand_total);
    }

    #[test]
    fn round_trip_format_and_reparse() {
        let data = "timestamp,bid,ask\n2000-05-05T09:49:11Z,0.5810,0.5815\n2000-06-15T00:56:06Z,0.59,0.61\n";
        let report = parse_str(data, &FormatConfig::default()).unwrap();
        let formatted: String = std::iter::once("timestamp,bid,ask".to_string())
            .chain(report.series.ticks.iter().map(|t| {
                format!(
                    "{},{},{}",
                    t.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                    t.bid.unwrap(),
                    t.ask.unwrap()
                )
            }))
            .collect::<Vec<_>>()
            .join("\n");
        let reparsed = parse_str(&formatted, &FormatConfig::default()).unwrap();
        assert_eq!(reparsed.series.ticks, report.series.ticks);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn half_day_shift_property(secs in 0u32..86_400) {
            let t = Utc.with_ymd_and_hms(2000, 5, 5, 0, 0, 0).unwrap()
                + Duration::seconds(secs as i64);
            let a = to_day_fraction(t);
            let b = to_day_fraction(t + Duration::hours(12));
            let diff = (a - b).rem_euclid(1.0);
            prop_assert!((diff - 0.5).abs() < 1e-12);
        }

        #[test]
        fn gaps_nonnegative_and_partition(offsets in proptest::collection::vec(0i64..100_000, 2..50)) {
            let start = Utc.with_ymd_and_hms(2000, 5, 5, 0, 0, 0).unwrap();
            let mut data = String::from("timestamp,bid,ask\n");
            for o in &offsets {
                let t = start + Duration::seconds(*o);
                data.push_str(&format!(
                    "{},1.0,1.1\n",
                    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
                ));
            }
            let report = parse_str(&data, &FormatConfig::default()).unwrap();
            let gaps = inter_quote_gaps(&report.series);
            prop_assert_eq!(gaps.len(), report.series.len() - 1);
            prop_assert!(gaps.iter().all(|g| g.gap_seconds >= 0.0));
            let ct = crosstab_by_hour_weekday(&report.series);
            let sum: usize = ct.rows.iter().map(|r| r.total).sum();
            prop_assert_eq!(sum, report.series.len());
        }
    }
}
