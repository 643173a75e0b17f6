//! Flag surfaces, the optional TOML config layer, and the resolution logic
//! that merges them as flags > file > defaults.
//!
//! The TOML file is flat; every key matches a long flag name (kebab-case).
//! Unknown keys are rejected so typos don't silently fall back to defaults.

use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use tickhurst::hurst::WindowAnchor;
use tickhurst::quote::{FormatConfig, PriceColumns, TiePolicy, TimestampLayout};
use tickhurst::resample::BootstrapConfig;
use tickhurst::returns::{LogBase, ReturnConfig, SignConvention};
use tickhurst::session::PercentMode;
use tickhurst::stats::SigmaDivisor;
use tickhurst::synthetic::{FgnMethod, TimestampGrid};
use tickhurst::{Error, Result};

// ---------------------------------------------------------------- enums

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKindArg {
    /// Raw quote CSV to run through ingestion and return construction
    Quotes,
    /// A series already in the shared returns schema (`timestamp`, `ar`)
    Returns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormatArg {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicyArg {
    KeepOrder,
    DropLater,
    AveragePrice,
}

impl From<TiePolicyArg> for TiePolicy {
    fn from(value: TiePolicyArg) -> Self {
        match value {
            TiePolicyArg::KeepOrder => TiePolicy::KeepOrder,
            TiePolicyArg::DropLater => TiePolicy::DropLater,
            TiePolicyArg::AveragePrice => TiePolicy::AveragePrice,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignArg {
    /// Reference convention: log(earlier) − log(later)
    PaperLiteral,
    /// Conventional forward difference: log(later) − log(earlier)
    Forward,
}

impl From<SignArg> for SignConvention {
    fn from(value: SignArg) -> Self {
        match value {
            SignArg::PaperLiteral => SignConvention::PaperLiteral,
            SignArg::Forward => SignConvention::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogBaseArg {
    Natural,
    Base10,
}

impl From<LogBaseArg> for LogBase {
    fn from(value: LogBaseArg) -> Self {
        match value {
            LogBaseArg::Natural => LogBase::Natural,
            LogBaseArg::Base10 => LogBase::Base10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Paper,
    Consistent,
}

impl From<ModeArg> for PercentMode {
    fn from(value: ModeArg) -> Self {
        match value {
            ModeArg::Paper => PercentMode::Paper,
            ModeArg::Consistent => PercentMode::Consistent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Fgn,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Auto,
    CirculantEmbedding,
    Hosking,
}

impl From<MethodArg> for FgnMethod {
    fn from(value: MethodArg) -> Self {
        match value {
            MethodArg::Auto => FgnMethod::Auto,
            MethodArg::CirculantEmbedding => FgnMethod::CirculantEmbedding,
            MethodArg::Hosking => FgnMethod::Hosking,
        }
    }
}

// ---------------------------------------------------------------- flags

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its keys
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for output artifacts (created if missing)
    #[arg(short, long)]
    pub out_dir: Option<PathBuf>,
    /// Table format: csv, json, or both
    #[arg(long)]
    pub report_format: Option<ReportFormatArg>,
    /// Worker threads for the bootstrap (results are identical at any count)
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV file
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Field delimiter (single ASCII character)
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Name of the timestamp column
    #[arg(long)]
    pub timestamp_column: Option<String>,
    /// Single-price column; conflicts with --bid-column/--ask-column
    #[arg(long)]
    pub price_column: Option<String>,
    #[arg(long)]
    pub bid_column: Option<String>,
    #[arg(long)]
    pub ask_column: Option<String>,
    /// Interpret timestamps as D:HH:MM:SS offsets from this date
    /// (YYYY-MM-DD) instead of ISO 8601
    #[arg(long)]
    pub day_offset_base: Option<NaiveDate>,
    /// What to do with equal-timestamp runs
    #[arg(long)]
    pub tie_policy: Option<TiePolicyArg>,
    /// Weekdays to drop entirely (1 = Monday … 7 = Sunday)
    #[arg(long, value_delimiter = ',')]
    pub exclude_weekdays: Option<Vec<u8>>,
    /// Reject rows where bid exceeds ask by more than this
    #[arg(long)]
    pub crossed_tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReturnFlagArgs {
    /// Sign convention for the log difference
    #[arg(long)]
    pub sign: Option<SignArg>,
    /// Target interval the per-pair log difference is rescaled to (seconds)
    #[arg(long)]
    pub scale_seconds: Option<f64>,
    #[arg(long)]
    pub log_base: Option<LogBaseArg>,
    /// Drop pairs further apart than this many seconds
    #[arg(long)]
    pub max_tau_seconds: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnalysisFlagArgs {
    /// Exactly two window lengths, e.g. 10,20
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<usize>>,
    /// Bootstrap iterations B
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Seed for every permutation stream
    #[arg(long)]
    pub master_seed: Option<u64>,
    /// Confidence level for bootstrap intervals
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Two-sided significance level for the Z-tests
    #[arg(long)]
    pub significance_level: Option<f64>,
    /// Dump every bootstrap iteration's mean exponent
    #[arg(long)]
    pub record_iteration_means: bool,
    /// Block lengths for the global fit (default: geometric 8..N/4)
    #[arg(long, value_delimiter = ',')]
    pub global_lengths: Option<Vec<usize>>,
    /// Percent-change convention for the decomposition table
    #[arg(long)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, clap::Parser)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, clap::Parser)]
pub struct ReturnsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub returns: ReturnFlagArgs,
}

#[derive(Debug, clap::Parser)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Treat the input as quotes or as a ready-made return series
    #[arg(long)]
    pub input_kind: Option<InputKindArg>,
    #[command(flatten)]
    pub returns: ReturnFlagArgs,
    #[command(flatten)]
    pub analysis: AnalysisFlagArgs,
}

pub type BootstrapArgs = AnalyzeArgs;

#[derive(Debug, clap::Parser)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Generator: fgn (fractional Gaussian noise) or iid (Gaussian noise)
    #[arg(long)]
    pub kind: Option<KindArg>,
    /// Hurst exponent, strictly inside (0, 1)
    #[arg(long)]
    pub hurst: Option<f64>,
    /// Number of observations
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub variance: Option<f64>,
    /// fGn sampling method
    #[arg(long)]
    pub method: Option<MethodArg>,
    /// First synthetic timestamp (RFC 3339)
    #[arg(long)]
    pub start: Option<DateTime<Utc>>,
    /// Seconds between consecutive synthetic observations
    #[arg(long)]
    pub spacing_seconds: Option<u64>,
    /// Base name for the series artifacts
    #[arg(long)]
    pub name: Option<String>,
}

// ---------------------------------------------------------------- file layer

/// Flat TOML config; every key mirrors a long flag. Keys irrelevant to the
/// command at hand are ignored.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub input_kind: Option<InputKindArg>,
    pub out_dir: Option<PathBuf>,
    pub report_format: Option<ReportFormatArg>,
    pub workers: Option<usize>,
    pub delimiter: Option<char>,
    pub timestamp_column: Option<String>,
    pub price_column: Option<String>,
    pub bid_column: Option<String>,
    pub ask_column: Option<String>,
    pub day_offset_base: Option<NaiveDate>,
    pub tie_policy: Option<TiePolicyArg>,
    pub exclude_weekdays: Option<Vec<u8>>,
    pub crossed_tolerance: Option<f64>,
    pub sign: Option<SignArg>,
    pub scale_seconds: Option<f64>,
    pub log_base: Option<LogBaseArg>,
    pub max_tau_seconds: Option<f64>,
    pub windows: Option<Vec<usize>>,
    pub iterations: Option<usize>,
    pub master_seed: Option<u64>,
    pub confidence: Option<f64>,
    pub significance_level: Option<f64>,
    pub record_iteration_means: Option<bool>,
    pub global_lengths: Option<Vec<usize>>,
    pub mode: Option<ModeArg>,
    pub kind: Option<KindArg>,
    pub hurst: Option<f64>,
    pub length: Option<usize>,
    pub seed: Option<u64>,
    pub variance: Option<f64>,
    pub method: Option<MethodArg>,
    pub start: Option<DateTime<Utc>>,
    pub spacing_seconds: Option<u64>,
    pub name: Option<String>,
}

pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| Error::Config(format!("config file {}: {e}", path.display())))
}

// ---------------------------------------------------------------- resolution

/// Everything a command run is determined by, echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_kind: Option<InputKindArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<FormatConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub returns: Option<ReturnConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub significance_level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_lengths: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeArg>,
    pub report_format: ReportFormatArg,
}

impl ConfigEcho {
    pub fn new(report_format: ReportFormatArg) -> Self {
        ConfigEcho {
            input: None,
            input_kind: None,
            format: None,
            returns: None,
            bootstrap: None,
            significance_level: None,
            global_lengths: None,
            mode: None,
            report_format,
        }
    }
}

pub struct ResolvedCommon {
    pub out_dir: PathBuf,
    pub report_format: ReportFormatArg,
}

pub fn resolve_common(args: &CommonArgs, file: &FileConfig) -> Result<ResolvedCommon> {
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .ok_or_else(|| Error::Config("an output directory is required (-o/--out-dir)".into()))?;
    let report_format =
        args.report_format.or(file.report_format).unwrap_or(ReportFormatArg::Both);
    if let Some(workers) = args.workers.or(file.workers) {
        if workers == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Error::Internal(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(ResolvedCommon { out_dir, report_format })
}

pub fn resolve_input_path(args: &InputArgs, file: &FileConfig) -> Result<PathBuf> {
    args.input
        .clone()
        .or_else(|| file.input.clone())
        .ok_or_else(|| Error::Config("an input file is required (-i/--input)".into()))
}

pub fn resolve_format(args: &InputArgs, file: &FileConfig) -> Result<FormatConfig> {
    let mut format = FormatConfig::default();
    if let Some(delimiter) = args.delimiter.or(file.delimiter) {
        if !delimiter.is_ascii() {
            return Err(Error::Config(format!("delimiter must be ASCII; got '{delimiter}'")));
        }
        format.delimiter = delimiter as u8;
    }
    if let Some(column) = args.timestamp_column.clone().or_else(|| file.timestamp_column.clone())
    {
        format.timestamp_column = column;
    }
    let price = args.price_column.clone().or_else(|| file.price_column.clone());
    let bid = args.bid_column.clone().or_else(|| file.bid_column.clone());
    let ask = args.ask_column.clone().or_else(|| file.ask_column.clone());
    match (price, bid, ask) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(Error::Config(
                "--price-column conflicts with --bid-column/--ask-column".into(),
            ));
        }
        (Some(price), None, None) => format.price_columns = PriceColumns::Single { price },
        (None, bid, ask) => {
            if bid.is_some() || ask.is_some() {
                let defaults = match FormatConfig::default().price_columns {
                    PriceColumns::BidAsk { bid, ask } => (bid, ask),
                    PriceColumns::Single { .. } => unreachable!("default layout is bid/ask"),
                };
                format.price_columns = PriceColumns::BidAsk {
                    bid: bid.unwrap_or(defaults.0),
                    ask: ask.unwrap_or(defaults.1),
                };
            }
        }
    }
    if let Some(base_date) = args.day_offset_base.or(file.day_offset_base) {
        format.layout = TimestampLayout::DayOffset { base_date };
    }
    if let Some(policy) = args.tie_policy.or(file.tie_policy) {
        format.tie_policy = policy.into();
    }
    if let Some(days) = args.exclude_weekdays.clone().or_else(|| file.exclude_weekdays.clone()) {
        if let Some(&bad) = days.iter().find(|&&d| !(1..=7).contains(&d)) {
            return Err(Error::Config(format!(
                "weekdays are numbered 1 (Monday) to 7 (Sunday); got {bad}"
            )));
        }
        format.exclude_weekdays = days;
    }
    if let Some(tolerance) = args.crossed_tolerance.or(file.crossed_tolerance) {
        if !(tolerance >= 0.0) {
            return Err(Error::Config(format!(
                "crossed-quote tolerance must be nonnegative; got {tolerance}"
            )));
        }
        format.crossed_tolerance = tolerance;
    }
    Ok(format)
}

pub fn resolve_returns(args: &ReturnFlagArgs, file: &FileConfig) -> Result<ReturnConfig> {
    let mut config = ReturnConfig::default();
    if let Some(sign) = args.sign.or(file.sign) {
        config.sign = sign.into();
    }
    if let Some(scale) = args.scale_seconds.or(file.scale_seconds) {
        config.scale_seconds = scale;
    }
    if let Some(base) = args.log_base.or(file.log_base) {
        config.log_base = base.into();
    }
    if let Some(cutoff) = args.max_tau_seconds.or(file.max_tau_seconds) {
        config.max_tau_seconds = Some(cutoff);
    }
    Ok(config)
}

pub struct ResolvedAnalysis {
    pub window_small: usize,
    pub window_large: usize,
    pub bootstrap: BootstrapConfig,
    pub significance_level: f64,
    /// None means the default geometric grid of the series length.
    pub global_lengths: Option<Vec<usize>>,
    pub mode: PercentMode,
    pub mode_arg: ModeArg,
}

pub fn resolve_analysis(args: &AnalysisFlagArgs, file: &FileConfig) -> Result<ResolvedAnalysis> {
    let windows =
        args.windows.clone().or_else(|| file.windows.clone()).unwrap_or_else(|| vec![10, 20]);
    let [a, b]: [usize; 2] = windows.as_slice().try_into().map_err(|_| {
        Error::Config(format!(
            "exactly two window lengths are required, e.g. --windows 10,20; got {windows:?}"
        ))
    })?;
    let (window_small, window_large) = (a.min(b), a.max(b));
    if window_small == window_large {
        return Err(Error::Config(format!(
            "the two window lengths must differ; got {window_small} twice"
        )));
    }
    let bootstrap = BootstrapConfig {
        iterations: args.iterations.or(file.iterations).unwrap_or(1000),
        window_sizes: vec![window_small, window_large],
        master_seed: args.master_seed.or(file.master_seed).unwrap_or(1),
        keep_timestamps: true,
        confidence: args.confidence.or(file.confidence).unwrap_or(0.95),
        record_iteration_means: args.record_iteration_means
            || file.record_iteration_means.unwrap_or(false),
        divisor: SigmaDivisor::Population,
        anchor: WindowAnchor::End,
    };
    let significance_level =
        args.significance_level.or(file.significance_level).unwrap_or(0.05);
    if !(significance_level > 0.0 && significance_level < 1.0) {
        return Err(Error::Config(format!(
            "significance level must lie strictly inside (0, 1); got {significance_level}"
        )));
    }
    let mode_arg = args.mode.or(file.mode).unwrap_or(ModeArg::Paper);
    Ok(ResolvedAnalysis {
        window_small,
        window_large,
        bootstrap,
        significance_level,
        global_lengths: args.global_lengths.clone().or_else(|| file.global_lengths.clone()),
        mode: mode_arg.into(),
        mode_arg,
    })
}

pub struct ResolvedSimulate {
    pub kind: KindArg,
    pub hurst: f64,
    pub length: usize,
    pub seed: u64,
    pub variance: f64,
    pub method: FgnMethod,
    pub grid: TimestampGrid,
    pub name: String,
}

pub fn resolve_simulate(args: &SimulateArgs, file: &FileConfig) -> Result<ResolvedSimulate> {
    let mut grid = TimestampGrid::default();
    if let Some(start) = args.start.or(file.start) {
        grid.start = start;
    }
    if let Some(spacing) = args.spacing_seconds.or(file.spacing_seconds) {
        if spacing == 0 {
            return Err(Error::Config("--spacing-seconds must be at least 1".into()));
        }
        grid.spacing_seconds = spacing;
    }
    let name = args.name.clone().or_else(|| file.name.clone()).unwrap_or_else(|| "series".into());
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(Error::Config(format!("artifact name must be a bare file stem; got '{name}'")));
    }
    Ok(ResolvedSimulate {
        kind: args.kind.or(file.kind).unwrap_or(KindArg::Fgn),
        hurst: args.hurst.or(file.hurst).unwrap_or(0.7),
        length: args.length.or(file.length).unwrap_or(16_384),
        seed: args.seed.or(file.seed).unwrap_or(1),
        variance: args.variance.or(file.variance).unwrap_or(1.0),
        method: args.method.or(file.method).unwrap_or(MethodArg::Auto).into(),
        grid,
        name,
    })
}
