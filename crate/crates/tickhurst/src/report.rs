//! Deterministic CSV and JSON emission for every pipeline artifact.
//!
//! Floats are written with Rust's shortest-roundtrip formatting and `None`
//! becomes an empty cell, so a given value always serializes to the same
//! bytes; timestamps use RFC 3339 with a trailing `Z`. Writers take any
//! `io::Write` sink; callers own file creation.

use std::io::Write;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;

use crate::error::Result;
use crate::hurst::{GlobalHurstFit, LocalHurstStream};
use crate::quote::{CrosstabReport, RejectedRow};
use crate::resample::BootstrapSummary;
use crate::returns::ReturnSeries;
use crate::session::{DecompositionTable, Fig1Row, Fig2Row, Fig3Row, HourlyProfileTable};

fn fmt(value: f64) -> String {
    value.to_string()
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn fmt_ts(timestamp: &DateTime<Utc>) -> String {
    timestamp.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(sink)
}

/// `timestamp,tau_seconds,ar,hour,weekday`
pub fn write_returns_csv<W: Write>(sink: W, series: &ReturnSeries) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["timestamp", "tau_seconds", "ar", "hour", "weekday"])?;
    for obs in &series.observations {
        w.write_record([
            fmt_ts(&obs.timestamp),
            fmt(obs.tau_seconds),
            fmt(obs.ar),
            obs.hour.to_string(),
            obs.weekday.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `start_index,end_timestamp,n,range,sigma,rs,h,hour`
pub fn write_local_stream_csv<W: Write>(sink: W, stream: &LocalHurstStream) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["start_index", "end_timestamp", "n", "range", "sigma", "rs", "h", "hour"])?;
    for win in &stream.windows {
        w.write_record([
            win.start_index.to_string(),
            fmt_ts(&win.end_timestamp),
            win.n.to_string(),
            fmt(win.range),
            fmt(win.sigma),
            fmt(win.rs),
            fmt(win.h),
            win.hour.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Hour × weekday arrival crosstab with a trailing total row.
pub fn write_crosstab_csv<W: Write>(sink: W, report: &CrosstabReport) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record([
        "hour",
        "mon",
        "tue",
        "wed",
        "thu",
        "fri",
        "sat",
        "sun",
        "total",
        "mean_gap_min",
        "cv_gap",
    ])?;
    for row in &report.rows {
        let mut record = vec![row.hour.to_string()];
        record.extend(row.weekday_counts.iter().map(|c| c.to_string()));
        record.push(row.total.to_string());
        record.push(fmt_opt(row.mean_gap_min));
        record.push(fmt_opt(row.cv_gap));
        w.write_record(&record)?;
    }
    let mut total = vec!["total".to_string()];
    total.extend(report.weekday_totals.iter().map(|c| c.to_string()));
    total.push(report.grand_total.to_string());
    total.push(fmt_opt(report.overall_mean_gap_min));
    total.push(fmt_opt(report.overall_cv_gap));
    w.write_record(&total)?;
    w.flush()?;
    Ok(())
}

/// `row,reason,raw`: rows the ingest refused, with why.
pub fn write_rejects_csv<W: Write>(sink: W, rejects: &[RejectedRow]) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["row", "reason", "raw"])?;
    for r in rejects {
        w.write_record([r.row.to_string(), r.reason.clone(), r.raw.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Decomposition table in published column order — per window length the
/// hourly mean and log₁₀ of R and σ, then the percent-change columns, then
/// the reconstructed exponents — with `f_stat`/`p_value` footer rows under
/// the mean columns.
pub fn write_decomposition_csv<W: Write>(sink: W, table: &DecompositionTable) -> Result<()> {
    let (ns, nl) = (table.n_small, table.n_large);
    let mut w = csv_writer(sink);
    w.write_record([
        "hour".to_string(),
        format!("mean_range_{ns}"),
        format!("log_range_{ns}"),
        format!("mean_sigma_{ns}"),
        format!("log_sigma_{ns}"),
        format!("mean_range_{nl}"),
        format!("log_range_{nl}"),
        format!("mean_sigma_{nl}"),
        format!("log_sigma_{nl}"),
        format!("dr_{ns}"),
        format!("dsigma_{ns}"),
        format!("dr_{nl}"),
        format!("dsigma_{nl}"),
        "dr_cross".to_string(),
        "dsigma_cross".to_string(),
        format!("h_{ns}"),
        format!("h_{nl}"),
    ])?;
    for row in &table.rows {
        let cell = |c: &Option<crate::session::DecompositionCell>| match c {
            Some(c) => [fmt(c.mean_range), fmt(c.log_range), fmt(c.mean_sigma), fmt(c.log_sigma)],
            None => Default::default(),
        };
        let small = cell(&row.small);
        let large = cell(&row.large);
        let mut record = vec![row.hour.to_string()];
        record.extend(small);
        record.extend(large);
        record.push(fmt_opt(row.dr_small));
        record.push(fmt_opt(row.dsigma_small));
        record.push(fmt_opt(row.dr_large));
        record.push(fmt_opt(row.dsigma_large));
        record.push(fmt_opt(row.dr_cross));
        record.push(fmt_opt(row.dsigma_cross));
        record.push(fmt_opt(row.small.map(|c| c.h)));
        record.push(fmt_opt(row.large.map(|c| c.h)));
        w.write_record(&record)?;
    }
    // footer: window-level ANOVA of R and σ across hours, under the mean
    // columns of each window length
    let footer = |label: &str, pick: fn(&crate::stats::AnovaResult) -> f64| {
        let anova = |a: &Option<crate::stats::AnovaResult>| fmt_opt(a.as_ref().map(pick));
        let mut record = vec![label.to_string()];
        record.push(anova(&table.anova_range_small));
        record.push(String::new());
        record.push(anova(&table.anova_sigma_small));
        record.push(String::new());
        record.push(anova(&table.anova_range_large));
        record.push(String::new());
        record.push(anova(&table.anova_sigma_large));
        record.extend(std::iter::repeat_with(String::new).take(9));
        record
    };
    w.write_record(footer("f_stat", |a| a.f_stat))?;
    w.write_record(footer("p_value", |a| a.p_value))?;
    w.flush()?;
    Ok(())
}

/// Hourly profile table (returns and local exponents with bootstrap
/// expectations), with test-statistic footer rows.
pub fn write_profile_csv<W: Write>(sink: W, table: &HourlyProfileTable) -> Result<()> {
    let (ns, nl) = (table.n_small, table.n_large);
    let mut w = csv_writer(sink);
    w.write_record([
        "hour".to_string(),
        "return_count".to_string(),
        "mean_return".to_string(),
        "std_return".to_string(),
        format!("window_count_{ns}"),
        format!("mean_h_{ns}"),
        format!("std_h_{ns}"),
        format!("window_count_{nl}"),
        format!("mean_h_{nl}"),
        format!("std_h_{nl}"),
        format!("boot_mean_h_{ns}"),
        format!("boot_std_h_{ns}"),
        format!("boot_mean_h_{nl}"),
        format!("boot_std_h_{nl}"),
    ])?;
    for row in &table.rows {
        w.write_record([
            row.hour.to_string(),
            row.return_count.to_string(),
            fmt_opt(row.mean_return),
            fmt_opt(row.std_return),
            row.window_count_small.to_string(),
            fmt_opt(row.mean_h_small),
            fmt_opt(row.std_h_small),
            row.window_count_large.to_string(),
            fmt_opt(row.mean_h_large),
            fmt_opt(row.std_h_large),
            fmt_opt(row.boot_mean_h_small),
            fmt_opt(row.boot_std_h_small),
            fmt_opt(row.boot_mean_h_large),
            fmt_opt(row.boot_std_h_large),
        ])?;
    }
    // footers sit under the column whose hourly means they test
    let stat_row = |label: &str,
                    returns: Option<f64>,
                    small: Option<f64>,
                    large: Option<f64>,
                    boot_small: Option<f64>,
                    boot_large: Option<f64>| {
        let mut record = vec![label.to_string(), String::new(), fmt_opt(returns)];
        record.extend([String::new(), String::new()]);
        record.push(fmt_opt(small));
        record.extend([String::new(), String::new()]);
        record.push(fmt_opt(large));
        record.push(String::new());
        record.push(fmt_opt(boot_small));
        record.push(String::new());
        record.push(fmt_opt(boot_large));
        record.push(String::new());
        record
    };
    let a = (&table.anova_returns, &table.anova_h_small, &table.anova_h_large);
    w.write_record(stat_row(
        "f_stat",
        a.0.as_ref().map(|x| x.f_stat),
        a.1.as_ref().map(|x| x.f_stat),
        a.2.as_ref().map(|x| x.f_stat),
        None,
        None,
    ))?;
    w.write_record(stat_row(
        "p_value",
        a.0.as_ref().map(|x| x.p_value),
        a.1.as_ref().map(|x| x.p_value),
        a.2.as_ref().map(|x| x.p_value),
        None,
        None,
    ))?;
    let k = (&table.kruskal_returns, &table.kruskal_h_small, &table.kruskal_h_large);
    w.write_record(stat_row(
        "kw_h",
        k.0.as_ref().map(|x| x.h_stat),
        k.1.as_ref().map(|x| x.h_stat),
        k.2.as_ref().map(|x| x.h_stat),
        None,
        None,
    ))?;
    w.write_record(stat_row(
        "kw_p",
        k.0.as_ref().map(|x| x.p_value),
        k.1.as_ref().map(|x| x.p_value),
        k.2.as_ref().map(|x| x.p_value),
        None,
        None,
    ))?;
    w.write_record(stat_row(
        "expected_mean_h",
        None,
        None,
        None,
        table.expected_mean_h_small,
        table.expected_mean_h_large,
    ))?;
    w.write_record(stat_row(
        "expected_std_h",
        None,
        None,
        None,
        table.expected_std_h_small,
        table.expected_std_h_large,
    ))?;
    w.flush()?;
    Ok(())
}

/// `hour,quote_count`
pub fn write_fig1_csv<W: Write>(sink: W, rows: &[Fig1Row]) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["hour", "quote_count"])?;
    for r in rows {
        w.write_record([r.hour.to_string(), r.quote_count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `hour,mean_return,variance`
pub fn write_fig2_csv<W: Write>(sink: W, rows: &[Fig2Row]) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["hour", "mean_return", "variance"])?;
    for r in rows {
        w.write_record([r.hour.to_string(), fmt_opt(r.mean_return), fmt_opt(r.variance)])?;
    }
    w.flush()?;
    Ok(())
}

/// Observed vs bootstrap hourly mean exponents with confidence bounds.
pub fn write_fig3_csv<W: Write>(sink: W, rows: &[Fig3Row]) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record([
        "hour",
        "mean_h_small",
        "mean_h_large",
        "boot_mean_h_small",
        "boot_mean_h_large",
        "ci_lower_small",
        "ci_upper_small",
        "ci_lower_large",
        "ci_upper_large",
    ])?;
    for r in rows {
        w.write_record([
            r.hour.to_string(),
            fmt_opt(r.mean_h_small),
            fmt_opt(r.mean_h_large),
            fmt_opt(r.boot_mean_h_small),
            fmt_opt(r.boot_mean_h_large),
            fmt_opt(r.ci_lower_small),
            fmt_opt(r.ci_upper_small),
            fmt_opt(r.ci_lower_large),
            fmt_opt(r.ci_upper_large),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-length fit points of the global estimate: `n,mean_rs,blocks,
/// degenerate_blocks`.
pub fn write_global_fit_csv<W: Write>(sink: W, fit: &GlobalHurstFit) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["n", "mean_rs", "blocks", "degenerate_blocks"])?;
    for p in &fit.points {
        w.write_record([
            p.n.to_string(),
            fmt(p.mean_rs),
            p.blocks.to_string(),
            p.degenerate_blocks.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Audit dump of every bootstrap iteration's mean exponent:
/// `n,iteration,mean_h`. Summaries without recorded means contribute no rows.
pub fn write_iteration_means_csv<W: Write>(
    sink: W,
    summaries: &[BootstrapSummary],
) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["n", "iteration", "mean_h"])?;
    for summary in summaries {
        if let Some(means) = &summary.iteration_means {
            for (i, m) in means.iter().enumerate() {
                w.write_record([summary.n.to_string(), i.to_string(), fmt(*m)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a series back from the shared returns schema (`timestamp` and `ar`
/// columns; anything else is ignored). Hour/weekday tags are rederived from
/// the timestamps, and shortest-roundtrip formatting makes the values
/// bit-identical to what was written.
pub fn read_returns_csv<R: std::io::Read>(reader: R) -> Result<crate::series::AnalysisSeries> {
    use crate::error::Error;
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Data(format!("returns CSV is missing a '{name}' column")))
    };
    let ts_col = find("timestamp")?;
    let ar_col = find("ar")?;
    let mut values = Vec::new();
    let mut stamps = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let ts_raw = record.get(ts_col).unwrap_or_default();
        let timestamp = DateTime::parse_from_rfc3339(ts_raw)
            .map_err(|e| Error::Data(format!("row {row}: bad timestamp '{ts_raw}': {e}")))?
            .with_timezone(&Utc);
        let ar_raw = record.get(ar_col).unwrap_or_default();
        let ar: f64 = ar_raw
            .parse()
            .map_err(|e| Error::Data(format!("row {row}: bad ar value '{ar_raw}': {e}")))?;
        values.push(ar);
        stamps.push(crate::series::SeriesStamp::from_timestamp(timestamp));
    }
    crate::series::AnalysisSeries::new(values, stamps)
}

/// Pretty JSON with a trailing newline; any serializable artifact.
pub fn write_json<W: Write, T: Serialize>(mut sink: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut sink, value)
        .map_err(|e| crate::error::Error::Internal(format!("JSON serialization failed: {e}")))?;
    sink.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hurst::local_hurst_stream;
    use crate::quote::{crosstab_by_hour_weekday, parse_quote_reader, FormatConfig};
    use crate::returns::adjusted_returns;
    use crate::session;
    use crate::stats::SigmaDivisor;
    use crate::synthetic::{gen_gaussian_iid, TimestampGrid};

    fn tiny_quotes() -> crate::quote::QuoteSeries {
        let data = "timestamp,bid,ask\n\
                    2000-05-01T09:00:00Z,0.5810,0.5815\n\
                    2000-05-01T09:01:00Z,0.5812,0.5817\n\
                    2000-05-01T10:01:00Z,0.5808,0.5813\n";
        parse_quote_reader(data.as_bytes(), "tiny", &FormatConfig::default()).unwrap().series
    }

    fn to_string(bytes: Vec<u8>) -> String {
        String::from_utf8(bytes).unwrap()
    }

    #[test]
    fn returns_csv_shape_and_empty_cells() {
        let series = tiny_quotes();
        let (returns, _) = adjusted_returns(&series, &Default::default()).unwrap();
        let mut buf = Vec::new();
        write_returns_csv(&mut buf, &returns).unwrap();
        let text = to_string(buf);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "timestamp,tau_seconds,ar,hour,weekday");
        assert_eq!(lines.len(), 1 + returns.len());
        assert!(lines[1].starts_with("2000-05-01T09:01:00Z,60,"));
        assert!(lines[1].ends_with(",9,1"));
    }

    #[test]
    fn local_stream_csv_shape() {
        let series = gen_gaussian_iid(40, 1, 1.0, &TimestampGrid::default()).unwrap().series;
        let stream = local_hurst_stream(&series, 10).unwrap();
        let mut buf = Vec::new();
        write_local_stream_csv(&mut buf, &stream).unwrap();
        let text = to_string(buf);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "start_index,end_timestamp,n,range,sigma,rs,h,hour");
        assert_eq!(lines.len(), 1 + stream.windows.len());
        assert!(lines[1].starts_with("0,2000-05-01T00:00:09Z,10,"));
    }

    #[test]
    fn crosstab_csv_has_total_row() {
        let report = crosstab_by_hour_weekday(&tiny_quotes());
        let mut buf = Vec::new();
        write_crosstab_csv(&mut buf, &report).unwrap();
        let text = to_string(buf);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 24 + 1);
        assert!(lines[0].starts_with("hour,mon,tue,wed,thu,fri,sat,sun,total,"));
        assert!(lines[25].starts_with("total,"));
        assert!(lines[25].contains(",3,")); // grand total of three quotes
    }

    #[test]
    fn decomposition_csv_blanks_and_footers() {
        use crate::hurst::{LocalHurstStream, LocalHurstWindow};
        use chrono::{TimeZone, Utc};
        let window = |n: usize, hour: u8, range: f64, sigma: f64| LocalHurstWindow {
            start_index: 0,
            end_timestamp: Utc.with_ymd_and_hms(2000, 5, 1, hour as u32, 0, 0).unwrap(),
            n,
            range,
            sigma,
            rs: range / sigma,
            h: (range / sigma).ln() / (n as f64).ln(),
            hour,
        };
        let small = LocalHurstStream {
            n: 10,
            windows: vec![window(10, 0, 963.3, 321.02), window(10, 1, 114.3, 37.89)],
            skipped: 0,
        };
        let large = LocalHurstStream {
            n: 20,
            windows: vec![window(20, 0, 2042.9, 468.96), window(20, 1, 183.3, 41.65)],
            skipped: 0,
        };
        let table =
            session::decomposition_table(&small, &large, session::PercentMode::Paper).unwrap();
        let mut buf = Vec::new();
        write_decomposition_csv(&mut buf, &table).unwrap();
        let text = to_string(buf);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("hour,mean_range_10,log_range_10,mean_sigma_10"));
        assert!(lines[0].contains("dr_cross,dsigma_cross,h_10,h_20"));
        assert_eq!(lines.len(), 1 + 24 + 2);
        // hour 0 has no hour-over-hour cells: its dr_10 field is empty
        let hour0: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(hour0[0], "0");
        assert_eq!(hour0[9], "");
        assert!(!hour0[13].is_empty()); // dr_cross present
        // unpopulated hour is all blanks after the hour column
        let hour5: Vec<&str> = lines[6].split(',').collect();
        assert!(hour5[1..].iter().all(|c| c.is_empty()));
        assert!(lines[25].starts_with("f_stat,"));
        assert!(lines[26].starts_with("p_value,"));
    }

    #[test]
    fn profile_csv_footers() {
        let series = gen_gaussian_iid(7200, 3, 1.0, &TimestampGrid::default()).unwrap().series;
        let small = local_hurst_stream(&series, 10).unwrap();
        let large = local_hurst_stream(&series, 20).unwrap();
        let table = session::hourly_profile(
            &series,
            &small,
            &large,
            None,
            None,
            SigmaDivisor::Population,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &table).unwrap();
        let text = to_string(buf);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 24 + 6);
        assert!(lines[0].starts_with("hour,return_count,mean_return,std_return,window_count_10"));
        let labels: Vec<&str> = lines[25..].iter().map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(labels, ["f_stat", "p_value", "kw_h", "kw_p", "expected_mean_h", "expected_std_h"]);
        // every row has the header's column count
        let cols = lines[0].split(',').count();
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), cols, "{line}");
        }
    }

    #[test]
    fn figure_csvs() {
        let quotes = tiny_quotes();
        let mut buf = Vec::new();
        write_fig1_csv(&mut buf, &session::fig1_rows(&quotes)).unwrap();
        let text = to_string(buf);
        assert_eq!(text.lines().count(), 25);
        assert!(text.lines().nth(10).unwrap().starts_with("9,2"));

        let series = gen_gaussian_iid(3600, 2, 1.0, &TimestampGrid::default()).unwrap().series;
        let mut buf = Vec::new();
        write_fig2_csv(&mut buf, &session::fig2_rows(&series, SigmaDivisor::Population)).unwrap();
        let text = to_string(buf);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "hour,mean_return,variance");
        assert_eq!(lines[3], "2,,"); // empty hour leaves empty cells
    }

    #[test]
    fn json_round_trips_and_is_stable() {
        let series = gen_gaussian_iid(300, 9, 1.0, &TimestampGrid::default()).unwrap().series;
        let config = crate::resample::BootstrapConfig {
            iterations: 5,
            ..Default::default()
        };
        let summaries = crate::resample::bootstrap_local_hurst(&series, &config).unwrap();
        let mut a = Vec::new();
        write_json(&mut a, &summaries).unwrap();
        let mut b = Vec::new();
        write_json(&mut b, &summaries).unwrap();
        assert_eq!(a, b);
        assert!(a.ends_with(b"\n"));
        let parsed: Vec<crate::resample::BootstrapSummary> =
            serde_json::from_slice(&a).unwrap();
        assert_eq!(parsed, summaries);
    }

    #[test]
    fn returns_csv_round_trips_bit_exactly() {
        let series = tiny_quotes();
        let (returns, _) = adjusted_returns(&series, &Default::default()).unwrap();
        let mut buf = Vec::new();
        write_returns_csv(&mut buf, &returns).unwrap();
        let read_back = read_returns_csv(buf.as_slice()).unwrap();
        assert_eq!(read_back, returns.analysis());

        let missing = "time,value\n2000-05-01T09:00:00Z,1.0\n";
        assert!(read_returns_csv(missing.as_bytes()).is_err());
        let bad_ts = "timestamp,ar\nyesterday,1.0\n";
        let err = read_returns_csv(bad_ts.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn writers_are_byte_deterministic() {
        let series = gen_gaussian_iid(60, 4, 1.0, &TimestampGrid::default()).unwrap().series;
        let stream = local_hurst_stream(&series, 10).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_local_stream_csv(&mut a, &stream).unwrap();
        write_local_stream_csv(&mut b, &stream).unwrap();
        assert_eq!(a, b);
    }
}
