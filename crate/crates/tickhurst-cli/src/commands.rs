//! Command implementations. Each command resolves its configuration
//! (flags > config file > defaults), computes, writes artifacts into the
//! output directory, and finishes with a manifest.
//!
//! Artifact format policy: tables (crosstab, window streams, decomposition,
//! profile, figures, global-fit points) respect `--report-format`; summary
//! sidecars (`*_summary.json`, diagnostics, bootstrap, z-tests, the global
//! fit itself) are always JSON because the CSV renderings cannot carry them.

use serde::Serialize;
use tickhurst::hurst::{
    geometric_length_grid, global_hurst, local_hurst_stream, GlobalHurstFit, LocalHurstStream,
};
use tickhurst::quote::{crosstab_by_hour_weekday, parse_quote_file, IngestReport};
use tickhurst::report;
use tickhurst::resample::{bootstrap_local_hurst, z_test, BootstrapSummary, ZTestResult};
use tickhurst::returns::{adjusted_returns, ReturnConfig, ReturnObservation, ReturnSeries};
use tickhurst::series::AnalysisSeries;
use tickhurst::session::{
    decomposition_table, fig1_rows, fig1_rows_from_stamps, fig2_rows, fig3_rows, hourly_profile,
};
use tickhurst::stats::SigmaDivisor;
use tickhurst::synthetic::{gen_fgn, gen_gaussian_iid, FgnSpec, SyntheticSeries, SyntheticSpec};
use tickhurst::{Error, Result};

use crate::config::{
    self, ConfigEcho, InputKindArg, KindArg, ReportFormatArg, ResolvedAnalysis, ResolvedCommon,
};
use crate::manifest::OutputDir;

fn want_csv(format: ReportFormatArg) -> bool {
    matches!(format, ReportFormatArg::Csv | ReportFormatArg::Both)
}

fn want_json(format: ReportFormatArg) -> bool {
    matches!(format, ReportFormatArg::Json | ReportFormatArg::Both)
}

fn rfc3339(ts: chrono::DateTime<chrono::Utc>) -> String {
    ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

// ---------------------------------------------------------------- ingest

#[derive(Serialize)]
struct IngestSummary {
    source: String,
    valid_quotes: usize,
    rejected_rows: usize,
    dropped_ties: usize,
    merged_ties: usize,
    excluded_weekday_rows: usize,
    span: Option<(String, String)>,
    span_calendar_days: Option<i64>,
}

impl IngestSummary {
    fn new(report: &IngestReport) -> Self {
        IngestSummary {
            source: report.series.source_label.clone(),
            valid_quotes: report.series.len(),
            rejected_rows: report.rejects.len(),
            dropped_ties: report.dropped_ties,
            merged_ties: report.merged_ties,
            excluded_weekday_rows: report.excluded_weekday_rows,
            span: report.series.span().map(|(a, b)| (rfc3339(a), rfc3339(b))),
            span_calendar_days: report.series.span_calendar_days(),
        }
    }
}

fn write_ingest_artifacts(
    out: &mut OutputDir,
    report: &IngestReport,
    format: ReportFormatArg,
) -> Result<()> {
    let crosstab = crosstab_by_hour_weekday(&report.series);
    if want_csv(format) {
        out.write("crosstab.csv", |w| report::write_crosstab_csv(w, &crosstab))?;
    }
    if want_json(format) {
        out.write_json("crosstab.json", &crosstab)?;
    }
    out.write("rejects.csv", |w| report::write_rejects_csv(w, &report.rejects))?;
    out.write_json("ingest_summary.json", &IngestSummary::new(report))?;
    Ok(())
}

pub fn ingest(args: config::IngestArgs) -> Result<()> {
    let file = config::load_file_config(args.common.config.as_deref())?;
    let common = config::resolve_common(&args.common, &file)?;
    let input = config::resolve_input_path(&args.input, &file)?;
    let format_config = config::resolve_format(&args.input, &file)?;

    let report = parse_quote_file(&input, &format_config)?;

    let mut out = OutputDir::create(&common.out_dir)?;
    write_ingest_artifacts(&mut out, &report, common.report_format)?;

    let mut echo = ConfigEcho::new(common.report_format);
    echo.input = Some(input.display().to_string());
    echo.format = Some(format_config);
    out.finish("ingest", &echo)
}

// ---------------------------------------------------------------- returns

pub fn returns(args: config::ReturnsArgs) -> Result<()> {
    let file = config::load_file_config(args.common.config.as_deref())?;
    let common = config::resolve_common(&args.common, &file)?;
    let input = config::resolve_input_path(&args.input, &file)?;
    let format_config = config::resolve_format(&args.input, &file)?;
    let return_config = config::resolve_returns(&args.returns, &file)?;

    let report = parse_quote_file(&input, &format_config)?;
    let (series, diagnostics) = adjusted_returns(&report.series, &return_config)?;

    let mut out = OutputDir::create(&common.out_dir)?;
    out.write("returns.csv", |w| report::write_returns_csv(w, &series))?;
    out.write_json("returns_diagnostics.json", &diagnostics)?;

    let mut echo = ConfigEcho::new(common.report_format);
    echo.input = Some(input.display().to_string());
    echo.format = Some(format_config);
    echo.returns = Some(return_config);
    out.finish("returns", &echo)
}

// ---------------------------------------------------------------- analyze

/// What `analyze` emits beyond the core analysis artifacts.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum AnalyzeScope {
    /// Analysis artifacts only.
    AnalysisOnly,
    /// Additionally re-emit the ingestion artifacts (the `report` command).
    WithIngest,
}

struct LoadedInput {
    /// Present when the input was a raw quote file.
    quotes: Option<IngestReport>,
    /// Present when returns were derived from quotes here.
    returns: Option<ReturnSeries>,
    series: AnalysisSeries,
    echo: ConfigEcho,
}

fn load_series(
    args: &config::AnalyzeArgs,
    file: &config::FileConfig,
    common: &ResolvedCommon,
) -> Result<LoadedInput> {
    let input = config::resolve_input_path(&args.input, file)?;
    let kind = args.input_kind.or(file.input_kind).unwrap_or(InputKindArg::Quotes);
    let mut echo = ConfigEcho::new(common.report_format);
    echo.input = Some(input.display().to_string());
    echo.input_kind = Some(kind);
    match kind {
        InputKindArg::Quotes => {
            let format_config = config::resolve_format(&args.input, file)?;
            let return_config = config::resolve_returns(&args.returns, file)?;
            let report = parse_quote_file(&input, &format_config)?;
            let (series, _diagnostics) = adjusted_returns(&report.series, &return_config)?;
            let analysis = series.analysis();
            echo.format = Some(format_config);
            echo.returns = Some(return_config);
            Ok(LoadedInput { quotes: Some(report), returns: Some(series), series: analysis, echo })
        }
        InputKindArg::Returns => {
            let reader = std::fs::File::open(&input).map_err(|e| {
                Error::Data(format!("cannot open returns file {}: {e}", input.display()))
            })?;
            let series = report::read_returns_csv(reader)?;
            Ok(LoadedInput { quotes: None, returns: None, series, echo })
        }
    }
}

struct AnalysisRun {
    small: LocalHurstStream,
    large: LocalHurstStream,
    global: GlobalHurstFit,
    global_lengths: Vec<usize>,
    boot: Vec<BootstrapSummary>,
    ztests: Vec<ZTestResult>,
}

fn run_analysis(series: &AnalysisSeries, resolved: &ResolvedAnalysis) -> Result<AnalysisRun> {
    let small = local_hurst_stream(series, resolved.window_small)?;
    let large = local_hurst_stream(series, resolved.window_large)?;
    let global_lengths = match &resolved.global_lengths {
        Some(lengths) => lengths.clone(),
        None => geometric_length_grid(series.len()),
    };
    let global = global_hurst(&series.values, &global_lengths)?;
    let boot = bootstrap_local_hurst(series, &resolved.bootstrap)?;
    let ztests = vec![
        z_test(&small, &boot[0], resolved.significance_level)?,
        z_test(&large, &boot[1], resolved.significance_level)?,
    ];
    Ok(AnalysisRun { small, large, global, global_lengths, boot, ztests })
}

fn write_analysis_artifacts(
    out: &mut OutputDir,
    loaded: &LoadedInput,
    run: &AnalysisRun,
    resolved: &ResolvedAnalysis,
    format: ReportFormatArg,
) -> Result<()> {
    if let Some(returns) = &loaded.returns {
        out.write("returns.csv", |w| report::write_returns_csv(w, returns))?;
    }
    let streams = [(&run.small, "small"), (&run.large, "large")];
    for (stream, _) in streams {
        if want_csv(format) {
            out.write(&format!("local_h_{}.csv", stream.n), |w| {
                report::write_local_stream_csv(w, stream)
            })?;
        }
        if want_json(format) {
            out.write_json(&format!("local_h_{}.json", stream.n), stream)?;
        }
    }
    if want_csv(format) {
        out.write("global_fit.csv", |w| report::write_global_fit_csv(w, &run.global))?;
    }
    out.write_json("global_fit.json", &run.global)?;
    out.write_json("bootstrap.json", &run.boot)?;
    out.write_json("ztests.json", &run.ztests)?;
    if resolved.bootstrap.record_iteration_means {
        out.write("iteration_means.csv", |w| {
            report::write_iteration_means_csv(w, &run.boot)
        })?;
    }

    let decomposition = decomposition_table(&run.small, &run.large, resolved.mode)?;
    let profile = hourly_profile(
        &loaded.series,
        &run.small,
        &run.large,
        Some(&run.boot[0]),
        Some(&run.boot[1]),
        SigmaDivisor::Population,
    )?;
    let fig1 = match &loaded.quotes {
        Some(report) => fig1_rows(&report.series),
        None => fig1_rows_from_stamps(&loaded.series),
    };
    let fig2 = fig2_rows(&loaded.series, SigmaDivisor::Population);
    let fig3 = fig3_rows(&run.small, &run.large, &run.boot[0], &run.boot[1])?;
    if want_csv(format) {
        out.write("decomposition.csv", |w| report::write_decomposition_csv(w, &decomposition))?;
        out.write("profile.csv", |w| report::write_profile_csv(w, &profile))?;
        out.write("fig1.csv", |w| report::write_fig1_csv(w, &fig1))?;
        out.write("fig2.csv", |w| report::write_fig2_csv(w, &fig2))?;
        out.write("fig3.csv", |w| report::write_fig3_csv(w, &fig3))?;
    }
    if want_json(format) {
        out.write_json("decomposition.json", &decomposition)?;
        out.write_json("profile.json", &profile)?;
        out.write_json("fig1.json", &fig1)?;
        out.write_json("fig2.json", &fig2)?;
        out.write_json("fig3.json", &fig3)?;
    }
    Ok(())
}

pub fn analyze(args: config::AnalyzeArgs, scope: AnalyzeScope) -> Result<()> {
    let file = config::load_file_config(args.common.config.as_deref())?;
    let common = config::resolve_common(&args.common, &file)?;
    let resolved = config::resolve_analysis(&args.analysis, &file)?;
    let mut loaded = load_series(&args, &file, &common)?;
    let run = run_analysis(&loaded.series, &resolved)?;

    let mut out = OutputDir::create(&common.out_dir)?;
    if scope == AnalyzeScope::WithIngest {
        if let Some(report) = &loaded.quotes {
            write_ingest_artifacts(&mut out, report, common.report_format)?;
        }
    }
    write_analysis_artifacts(&mut out, &loaded, &run, &resolved, common.report_format)?;

    loaded.echo.bootstrap = Some(resolved.bootstrap.clone());
    loaded.echo.significance_level = Some(resolved.significance_level);
    loaded.echo.global_lengths = Some(run.global_lengths.clone());
    loaded.echo.mode = Some(resolved.mode_arg);
    let command = match scope {
        AnalyzeScope::AnalysisOnly => "analyze",
        AnalyzeScope::WithIngest => "report",
    };
    out.finish(command, &loaded.echo)
}

// ---------------------------------------------------------------- bootstrap

pub fn bootstrap(args: config::BootstrapArgs) -> Result<()> {
    let file = config::load_file_config(args.common.config.as_deref())?;
    let common = config::resolve_common(&args.common, &file)?;
    let resolved = config::resolve_analysis(&args.analysis, &file)?;
    let mut loaded = load_series(&args, &file, &common)?;

    let small = local_hurst_stream(&loaded.series, resolved.window_small)?;
    let large = local_hurst_stream(&loaded.series, resolved.window_large)?;
    let boot = bootstrap_local_hurst(&loaded.series, &resolved.bootstrap)?;
    let ztests = vec![
        z_test(&small, &boot[0], resolved.significance_level)?,
        z_test(&large, &boot[1], resolved.significance_level)?,
    ];

    let mut out = OutputDir::create(&common.out_dir)?;
    out.write_json("bootstrap.json", &boot)?;
    out.write_json("ztests.json", &ztests)?;
    if resolved.bootstrap.record_iteration_means {
        out.write("iteration_means.csv", |w| report::write_iteration_means_csv(w, &boot))?;
    }

    loaded.echo.bootstrap = Some(resolved.bootstrap.clone());
    loaded.echo.significance_level = Some(resolved.significance_level);
    out.finish("bootstrap", &loaded.echo)
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimulateEcho<'a> {
    name: &'a str,
    spec: &'a SyntheticSpec,
    grid: &'a tickhurst::synthetic::TimestampGrid,
    report_format: ReportFormatArg,
}

/// Present a synthetic series in the shared returns schema so `analyze
/// --input-kind returns` consumes it directly.
fn as_return_series(synthetic: &SyntheticSeries) -> ReturnSeries {
    let spacing = synthetic.grid.spacing_seconds as f64;
    let observations = synthetic
        .series
        .values
        .iter()
        .zip(&synthetic.series.stamps)
        .map(|(&value, stamp)| ReturnObservation {
            ar: value,
            tau_seconds: spacing,
            raw_logdiff: value,
            timestamp: stamp.timestamp,
            hour: stamp.hour,
            weekday: stamp.weekday,
        })
        .collect();
    ReturnSeries { observations, config_echo: ReturnConfig::default() }
}

pub fn simulate(args: config::SimulateArgs) -> Result<()> {
    let file = config::load_file_config(args.common.config.as_deref())?;
    let common = config::resolve_common(&args.common, &file)?;
    let resolved = config::resolve_simulate(&args, &file)?;

    let synthetic = match resolved.kind {
        KindArg::Fgn => {
            let spec = FgnSpec {
                hurst_h: resolved.hurst,
                length: resolved.length,
                seed: resolved.seed,
                variance: resolved.variance,
                method: resolved.method,
            };
            gen_fgn(&spec, &resolved.grid)?
        }
        KindArg::Iid => {
            gen_gaussian_iid(resolved.length, resolved.seed, resolved.variance, &resolved.grid)?
        }
    };

    let mut out = OutputDir::create(&common.out_dir)?;
    let as_returns = as_return_series(&synthetic);
    out.write(&format!("{}.csv", resolved.name), |w| {
        report::write_returns_csv(w, &as_returns)
    })?;
    let echo = SimulateEcho {
        name: &resolved.name,
        spec: &synthetic.spec,
        grid: &synthetic.grid,
        report_format: common.report_format,
    };
    out.write_json(&format!("{}.json", resolved.name), &echo)?;
    out.finish("simulate", &echo)
}
