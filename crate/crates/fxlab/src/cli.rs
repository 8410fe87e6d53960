//! Command-line entry points: `optimize`, `simulate`, `signals`, `report`.
//!
//! Configuration comes from flags, `FXLAB_*` environment variables, and
//! an optional TOML config file, in that order of precedence. Exit codes:
//! 0 success, 1 data error, 2 config error, 3 partial failure (some jobs
//! errored but results were written).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use clap::{Args, Parser, Subcommand};
use rust_decimal::Decimal;
use serde::Deserialize;

use crate::heuristics::HeuristicId;
use crate::indicators::{self, MacdParams, RsiParams, RSI_HIGH, RSI_LOW};
use crate::market_data::{self, CandleSeries, DataSubsetKey, Granularity, Instrument, Pips};
use crate::optimizer::{self, GridSpec, JobError, OptimizationRecord};
use crate::reporting::{self, Report, ReportConfig, ReportRecord};
use crate::simulator::{self, IntraCandlePolicy, TradeConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA_ERROR: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

/// Results CSV header (one row per recorded configuration).
pub const RESULTS_HEADER: &str = "instrument,granularity,heuristic,sl_pips,tp_pips,total_profit_pips,total_loss_pips,final_balance_pips,n_long,n_short";

#[derive(Parser, Debug)]
#[command(
    name = "fxlab",
    version,
    about = "Deterministic OHLC backtester and TP/SL grid-search optimizer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Grid-search TP/SL for every data subset and write results + report
    Optimize(OptimizeArgs),
    /// Replay one subset under a single TP/SL configuration
    Simulate(SimulateArgs),
    /// Count MACD / RSI / price-action signal signatures on one subset
    Signals(SignalsArgs),
    /// Regenerate the summary report from stored result records
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct SharedArgs {
    /// Optional TOML config file; flags and FXLAB_* env vars win
    #[arg(long, env = "FXLAB_CONFIG")]
    pub config: Option<PathBuf>,
    /// Directory of {INSTRUMENT}-{GRANULARITY}.csv subset files
    #[arg(long, env = "FXLAB_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    /// Instrument codes, comma separated
    #[arg(long, env = "FXLAB_INSTRUMENTS", value_delimiter = ',')]
    pub instruments: Option<Vec<String>>,
    /// Granularity codes, comma separated
    #[arg(long, env = "FXLAB_GRANULARITIES", value_delimiter = ',')]
    pub granularities: Option<Vec<String>>,
    /// Heuristics to run (h1, h2), comma separated
    #[arg(long, env = "FXLAB_HEURISTICS", value_delimiter = ',')]
    pub heuristics: Option<Vec<String>>,
    /// Broker spread in pips
    #[arg(long, env = "FXLAB_SPREAD_PIPS")]
    pub spread_pips: Option<String>,
    /// Stop-loss sweep range MIN:MAX:STEP in pips (STEP optional, default 1)
    #[arg(long, env = "FXLAB_SL_RANGE")]
    pub sl_range: Option<String>,
    /// Take-profit sweep range MIN:MAX:STEP in pips (STEP optional, default 1)
    #[arg(long, env = "FXLAB_TP_RANGE")]
    pub tp_range: Option<String>,
    /// Intra-candle resolution: pessimistic | optimistic | open-proximity
    #[arg(long, env = "FXLAB_POLICY")]
    pub policy: Option<String>,
    /// Ruin cutoff in pips (disabled when absent)
    #[arg(long, env = "FXLAB_MAX_TOTAL_LOSS")]
    pub max_total_loss: Option<String>,
    /// Worker threads (default: logical cores)
    #[arg(long, env = "FXLAB_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory
    #[arg(long, env = "FXLAB_OUT")]
    pub out: Option<PathBuf>,
    /// Retain every grid record, not just the best per job
    #[arg(long, env = "FXLAB_FULL_RECORDS")]
    pub full_records: bool,
    /// Export per-trade logs for the winning configurations
    #[arg(long, env = "FXLAB_TRADE_LOGS")]
    pub trade_logs: bool,
    /// Calendar days behind per-day rates
    #[arg(long, env = "FXLAB_TOTAL_DAYS")]
    pub total_days: Option<u32>,
    /// Divide per-day rates by 5/7 of the calendar days instead
    #[arg(long, env = "FXLAB_TRADING_DAY_ADJUST")]
    pub trading_day_adjust: bool,
    /// Rows in the best/worst tables
    #[arg(long, env = "FXLAB_TOP_N")]
    pub top_n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[arg(long)]
    pub instrument: String,
    #[arg(long)]
    pub granularity: String,
    #[arg(long)]
    pub heuristic: String,
    /// Stop loss in pips
    #[arg(long)]
    pub sl: String,
    /// Take profit in pips
    #[arg(long)]
    pub tp: String,
}

#[derive(Args, Debug)]
pub struct SignalsArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[arg(long)]
    pub instrument: String,
    #[arg(long)]
    pub granularity: String,
    /// Window start (YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ), inclusive
    #[arg(long)]
    pub from: Option<String>,
    /// Window end, exclusive
    #[arg(long)]
    pub to: Option<String>,
    /// MACD parameters FAST:SLOW:SIGNAL
    #[arg(long, default_value = "12:26:9")]
    pub macd: String,
    /// RSI length
    #[arg(long, default_value_t = 14)]
    pub rsi_length: usize,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    /// Result record CSV files (full results schema or balance-table schema)
    #[arg(long, required = true, num_args = 1..)]
    pub records: Vec<PathBuf>,
    /// Optional trade-count CSV (simulation,heuristic,trades[,...])
    #[arg(long)]
    pub trades: Option<PathBuf>,
}

/// A classified command failure, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG_ERROR,
            CliError::Data(_) => EXIT_DATA_ERROR,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) => m,
        }
    }
}

impl From<market_data::MarketDataError> for CliError {
    fn from(e: market_data::MarketDataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<simulator::SimulatorError> for CliError {
    fn from(e: simulator::SimulatorError) -> Self {
        match e {
            simulator::SimulatorError::InvalidConfig { .. } => CliError::Config(e.to_string()),
            simulator::SimulatorError::EmptySeries => CliError::Data(e.to_string()),
        }
    }
}

impl From<optimizer::OptimizerError> for CliError {
    fn from(e: optimizer::OptimizerError) -> Self {
        match e {
            optimizer::OptimizerError::InvalidSpec { .. } => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<reporting::ReportingError> for CliError {
    fn from(e: reporting::ReportingError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Optimize(args) => cmd_optimize(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Signals(args) => cmd_signals(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

/// Optional TOML config file; every field mirrors a flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    data_dir: Option<PathBuf>,
    instruments: Option<Vec<String>>,
    granularities: Option<Vec<String>>,
    heuristics: Option<Vec<String>>,
    spread_pips: Option<String>,
    sl_range: Option<String>,
    tp_range: Option<String>,
    policy: Option<String>,
    max_total_loss: Option<String>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    full_records: Option<bool>,
    trade_logs: Option<bool>,
    total_days: Option<u32>,
    trading_day_adjust: Option<bool>,
    top_n: Option<usize>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub instruments: Vec<Instrument>,
    pub granularities: Vec<Granularity>,
    pub heuristics: Vec<HeuristicId>,
    pub spread_pips: Pips,
    pub grid: GridSpec,
    pub intra_candle_policy: IntraCandlePolicy,
    pub max_total_loss_pips: Option<Pips>,
    pub workers: usize,
    pub output_dir: PathBuf,
    pub keep_full_records: bool,
    pub keep_trade_logs: bool,
    pub report: ReportConfig,
    pub top_n: usize,
}

impl RunConfig {
    pub fn resolve(args: &SharedArgs) -> Result<RunConfig, CliError> {
        let file: FileConfig = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };

        let instruments = args
            .instruments
            .clone()
            .or(file.instruments)
            .unwrap_or_else(|| vec!["EURUSD".into(), "USDJPY".into(), "EURJPY".into()]);
        let instruments = instruments
            .iter()
            .map(|code| {
                Instrument::builtin(code)
                    .ok_or_else(|| CliError::Config(format!("unknown instrument code {code:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let granularities = match args.granularities.clone().or(file.granularities) {
            Some(codes) => codes
                .iter()
                .map(|c| Granularity::from_str(c).map_err(|e| CliError::Config(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?,
            None => Granularity::ALL.to_vec(),
        };

        let heuristics = match args.heuristics.clone().or(file.heuristics) {
            Some(codes) => codes
                .iter()
                .map(|c| HeuristicId::from_str(c).map_err(|e| CliError::Config(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?,
            None => HeuristicId::ALL.to_vec(),
        };

        let spread_pips = match args.spread_pips.clone().or(file.spread_pips) {
            Some(text) => parse_pips(&text, "spread")?,
            None => TradeConfig::DEFAULT_SPREAD,
        };
        if spread_pips < Pips::ZERO {
            return Err(CliError::Config(format!(
                "spread must be non-negative, got {spread_pips}"
            )));
        }

        let default_grid = GridSpec::default();
        let (sl_min, sl_max, sl_step) = match args.sl_range.clone().or(file.sl_range) {
            Some(text) => parse_range(&text, "sl-range")?,
            None => (
                default_grid.sl_min,
                default_grid.sl_max,
                default_grid.sl_step,
            ),
        };
        let (tp_min, tp_max, tp_step) = match args.tp_range.clone().or(file.tp_range) {
            Some(text) => parse_range(&text, "tp-range")?,
            None => (
                default_grid.tp_min,
                default_grid.tp_max,
                default_grid.tp_step,
            ),
        };
        let grid = GridSpec {
            sl_min,
            sl_max,
            sl_step,
            tp_min,
            tp_max,
            tp_step,
        };
        grid.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;

        let intra_candle_policy = match args.policy.clone().or(file.policy) {
            Some(text) => {
                IntraCandlePolicy::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?
            }
            None => IntraCandlePolicy::default(),
        };

        let max_total_loss_pips = match args.max_total_loss.clone().or(file.max_total_loss) {
            Some(text) => {
                let p = parse_pips(&text, "max-total-loss")?;
                if !p.is_positive() {
                    return Err(CliError::Config(format!(
                        "max total loss must be positive, got {p}"
                    )));
                }
                Some(p)
            }
            None => None,
        };

        let workers = args.workers.or(file.workers).unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        });
        if workers == 0 {
            return Err(CliError::Config("workers must be >= 1".into()));
        }

        let total_days = args
            .total_days
            .or(file.total_days)
            .unwrap_or_else(|| ReportConfig::default().total_days);
        if total_days == 0 {
            return Err(CliError::Config("total-days must be >= 1".into()));
        }

        Ok(RunConfig {
            data_dir: args
                .data_dir
                .clone()
                .or(file.data_dir)
                .unwrap_or_else(|| "data".into()),
            instruments,
            granularities,
            heuristics,
            spread_pips,
            grid,
            intra_candle_policy,
            max_total_loss_pips,
            workers,
            output_dir: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| "out".into()),
            keep_full_records: args.full_records || file.full_records.unwrap_or(false),
            keep_trade_logs: args.trade_logs || file.trade_logs.unwrap_or(false),
            report: ReportConfig {
                total_days,
                trading_day_adjust: args.trading_day_adjust
                    || file.trading_day_adjust.unwrap_or(false),
            },
            top_n: args.top_n.or(file.top_n).unwrap_or(4),
        })
    }

    pub fn base_trade_config(&self) -> TradeConfig {
        TradeConfig {
            // placeholders; the grid overrides both levels per tuple
            tp_pips: Pips::from_whole(1),
            sl_pips: Pips::from_whole(1),
            spread_pips: self.spread_pips,
            max_total_loss_pips: self.max_total_loss_pips,
            intra_candle_policy: self.intra_candle_policy,
        }
    }
}

fn parse_pips(text: &str, what: &str) -> Result<Pips, CliError> {
    let value = Decimal::from_str(text.trim())
        .map_err(|e| CliError::Config(format!("bad {what} value {text:?}: {e}")))?;
    Pips::from_decimal(value).ok_or_else(|| {
        CliError::Config(format!(
            "{what} value {text:?} is not a multiple of 0.1 pips"
        ))
    })
}

/// Parse `MIN:MAX[:STEP]` (pips; step defaults to 1).
fn parse_range(text: &str, what: &str) -> Result<(Pips, Pips, Pips), CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 && parts.len() != 3 {
        return Err(CliError::Config(format!(
            "bad {what} {text:?}: expected MIN:MAX[:STEP]"
        )));
    }
    let min = parse_pips(parts[0], what)?;
    let max = parse_pips(parts[1], what)?;
    let step = if parts.len() == 3 {
        parse_pips(parts[2], what)?
    } else {
        Pips::from_whole(1)
    };
    Ok((min, max, step))
}

fn parse_timestamp(text: &str) -> Result<DateTime<Utc>, CliError> {
    if let Ok(dt) = NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%SZ") {
        return Ok(dt.and_utc());
    }
    if let Ok(d) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc());
    }
    Err(CliError::Config(format!(
        "bad timestamp {text:?}: expected YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ"
    )))
}

fn subset_path(cfg: &RunConfig, key: &DataSubsetKey) -> PathBuf {
    cfg.data_dir.join(key.file_name())
}

fn load_subset(cfg: &RunConfig, key: &DataSubsetKey) -> Result<CandleSeries, CliError> {
    market_data::parse_csv(
        subset_path(cfg, key),
        key.instrument.clone(),
        key.granularity,
    )
    .map_err(|e| CliError::Data(format!("{}: {e}", subset_path(cfg, key).display())))
}

/// Load every configured subset, verifying existence up front.
fn load_all_subsets(cfg: &RunConfig) -> Result<(Vec<CandleSeries>, Vec<JobError>), CliError> {
    let keys: Vec<DataSubsetKey> = cfg
        .instruments
        .iter()
        .flat_map(|i| {
            cfg.granularities
                .iter()
                .map(move |&g| DataSubsetKey::new(i.clone(), g))
        })
        .collect();

    let missing: Vec<String> = keys
        .iter()
        .filter(|k| !subset_path(cfg, k).exists())
        .map(|k| subset_path(cfg, k).display().to_string())
        .collect();
    if missing.len() == keys.len() {
        return Err(CliError::Data(format!(
            "no subsets found in {}",
            cfg.data_dir.display()
        )));
    }
    if !missing.is_empty() {
        return Err(CliError::Data(format!(
            "missing subset files: {}",
            missing.join(", ")
        )));
    }

    let mut subsets = Vec::new();
    let mut errors = Vec::new();
    for key in keys {
        match load_subset(cfg, &key) {
            Ok(series) => subsets.push(series),
            Err(e) => {
                for &heuristic in &cfg.heuristics {
                    errors.push(JobError {
                        key: key.clone(),
                        heuristic,
                        error: e.message().to_string(),
                    });
                }
            }
        }
    }
    Ok((subsets, errors))
}

fn record_csv_row(r: &OptimizationRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.key.instrument.code(),
        r.key.granularity,
        r.heuristic,
        r.sl_pips,
        r.tp_pips,
        r.total_profit_pips,
        r.total_loss_pips,
        r.final_balance_pips,
        r.n_long,
        r.n_short
    )
}

fn write_records_csv(path: &Path, records: &[&OptimizationRecord]) -> std::io::Result<()> {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&record_csv_row(r));
        out.push('\n');
    }
    fs::write(path, out)
}

fn optimal_settings_stdout(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Optimal settings (positive balances)");
    let _ = writeln!(
        s,
        "{:<14}{:<11}{:>12}{:>12}{:>12}{:>12}",
        "Simulation", "Heuristic", "SL (price)", "TP (price)", "SL (pips)", "TP (pips)"
    );
    for r in &report.optimal_settings {
        let fmt = |d: Option<Decimal>| d.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:<14}{:<11}{:>12}{:>12}{:>12}{:>12}",
            r.simulation,
            r.heuristic.code(),
            fmt(r.sl_price_units),
            fmt(r.tp_price_units),
            r.sl_pips,
            r.tp_pips
        );
    }
    if report.optimal_settings.is_empty() {
        let _ = writeln!(s, "(none)");
    }
    s
}

/// `optimize`: load subsets, sweep the grid for every job, write results
/// and the report, and print the optimal-settings table.
pub fn cmd_optimize(args: &OptimizeArgs) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(&args.shared)?;
    let started = std::time::Instant::now();
    let (subsets, mut errors) = load_all_subsets(&cfg)?;

    let outcome = optimizer::optimize_all(
        &subsets,
        &cfg.heuristics,
        &cfg.grid,
        &cfg.base_trade_config(),
        cfg.workers,
        cfg.keep_full_records,
    )?;
    errors.extend(outcome.errors);
    errors.sort_by_key(|e| (e.key.ord_key(), e.heuristic));

    if outcome.results.is_empty() {
        return Err(CliError::Data(
            "every job failed; no results to write".into(),
        ));
    }

    fs::create_dir_all(&cfg.output_dir)?;
    let best: Vec<&OptimizationRecord> = outcome.results.iter().map(|j| &j.best).collect();
    write_records_csv(&cfg.output_dir.join("results.csv"), &best)?;

    if cfg.keep_full_records {
        let all: Vec<&OptimizationRecord> = outcome
            .results
            .iter()
            .flat_map(|j| j.all.iter().flatten())
            .collect();
        write_records_csv(&cfg.output_dir.join("all_records.csv"), &all)?;
    }

    if !errors.is_empty() {
        let mut manifest = String::from("instrument,granularity,heuristic,error\n");
        for e in &errors {
            let _ = writeln!(
                manifest,
                "{},{},{},{:?}",
                e.key.instrument.code(),
                e.key.granularity,
                e.heuristic,
                e.error
            );
        }
        fs::write(cfg.output_dir.join("errors.csv"), manifest)?;
    }

    let records: Vec<ReportRecord> = best.iter().map(|r| ReportRecord::from(*r)).collect();
    let report = reporting::build_report(&records, &cfg.report, cfg.top_n)?;
    fs::write(
        cfg.output_dir.join("report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    fs::write(cfg.output_dir.join("report.txt"), report.to_text())?;
    report.write_csv_sections(&cfg.output_dir.join("report"))?;

    if cfg.keep_trade_logs {
        let log_dir = cfg.output_dir.join("trade_logs");
        fs::create_dir_all(&log_dir)?;
        for job in &outcome.results {
            let series = subsets
                .iter()
                .find(|s| s.key() == job.key)
                .expect("job key comes from a loaded subset");
            let config = cfg
                .base_trade_config()
                .with_levels(job.best.sl_pips, job.best.tp_pips);
            let result = simulator::simulate(series, job.heuristic, &config, true)
                .map_err(|e| CliError::Data(e.to_string()))?;
            let log = result.trade_log.expect("requested log");
            let name = format!("{}-{}.csv", job.key, job.heuristic);
            fs::write(log_dir.join(name), simulator::trade_log_csv(series, &log))?;
        }
    }

    println!(
        "Optimized {} jobs ({} grid tuples each) over {} subsets",
        outcome.results.len(),
        cfg.grid.count(),
        subsets.len()
    );
    println!();
    print!("{}", optimal_settings_stdout(&report));
    println!();
    println!("Results written to {}", cfg.output_dir.display());
    if !errors.is_empty() {
        eprintln!("{} job(s) failed; see errors.csv", errors.len());
    }
    eprintln!("elapsed: {:.1}s", started.elapsed().as_secs_f64());

    Ok(if errors.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}

/// `simulate`: one subset, one heuristic, one TP/SL configuration.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(&args.shared)?;
    let instrument = Instrument::builtin(&args.instrument).ok_or_else(|| {
        CliError::Config(format!("unknown instrument code {:?}", args.instrument))
    })?;
    let granularity =
        Granularity::from_str(&args.granularity).map_err(|e| CliError::Config(e.to_string()))?;
    let heuristic =
        HeuristicId::from_str(&args.heuristic).map_err(|e| CliError::Config(e.to_string()))?;
    let sl = parse_pips(&args.sl, "sl")?;
    let tp = parse_pips(&args.tp, "tp")?;

    let config = cfg.base_trade_config().with_levels(sl, tp);
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let key = DataSubsetKey::new(instrument, granularity);
    let series = load_subset(&cfg, &key)?;
    let result = simulator::simulate(&series, heuristic, &config, cfg.keep_trade_logs)
        .map_err(CliError::from)?;

    println!("instrument:         {}", key.instrument.code());
    println!("granularity:        {}", key.granularity);
    println!("heuristic:          {}", heuristic);
    println!("tp_pips:            {}", tp);
    println!("sl_pips:            {}", sl);
    println!("total_profit_pips:  {}", result.total_profit_pips);
    println!("total_loss_pips:    {}", result.total_loss_pips);
    println!("n_long:             {}", result.n_long);
    println!("n_short:            {}", result.n_short);
    println!("final_balance_pips: {}", result.final_balance_pips);
    println!("ruined:             {}", result.ruined);

    if let Some(log) = &result.trade_log {
        fs::create_dir_all(&cfg.output_dir)?;
        let path = cfg.output_dir.join(format!("{key}-{heuristic}-trades.csv"));
        fs::write(&path, simulator::trade_log_csv(&series, log))?;
        println!("trade_log:          {}", path.display());
    }
    Ok(EXIT_OK)
}

/// `signals`: MACD / RSI / price-action signature counts over a window.
pub fn cmd_signals(args: &SignalsArgs) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(&args.shared)?;
    let instrument = Instrument::builtin(&args.instrument).ok_or_else(|| {
        CliError::Config(format!("unknown instrument code {:?}", args.instrument))
    })?;
    let granularity =
        Granularity::from_str(&args.granularity).map_err(|e| CliError::Config(e.to_string()))?;

    let macd_parts: Vec<&str> = args.macd.split(':').collect();
    if macd_parts.len() != 3 {
        return Err(CliError::Config(format!(
            "bad --macd {:?}: expected FAST:SLOW:SIGNAL",
            args.macd
        )));
    }
    let parse_len = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|e| CliError::Config(format!("bad MACD length {t:?}: {e}")))
    };
    let macd_params = MacdParams::new(
        parse_len(macd_parts[0])?,
        parse_len(macd_parts[1])?,
        parse_len(macd_parts[2])?,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let rsi_params =
        RsiParams::new(args.rsi_length).map_err(|e| CliError::Config(e.to_string()))?;

    let key = DataSubsetKey::new(instrument, granularity);
    let series = load_subset(&cfg, &key)?;
    let series = match (&args.from, &args.to) {
        (None, None) => series,
        (from, to) => {
            let from = match from {
                Some(t) => parse_timestamp(t)?,
                None => series.candles().first().expect("non-empty").timestamp,
            };
            let to = match to {
                Some(t) => parse_timestamp(t)?,
                None => {
                    series.candles().last().expect("non-empty").timestamp
                        + chrono::Duration::seconds(1)
                }
            };
            series.window(from, to).map_err(CliError::from)?
        }
    };

    let macd_count = indicators::count_macd_signals(&series, &macd_params)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let rsi_count = indicators::count_rsi_signals(&series, &rsi_params, RSI_LOW, RSI_HIGH)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let pa_count = indicators::count_priceaction_signals(&series);

    println!("Signal signatures for {key} over {} candles", series.len());
    println!("{:<14}{:<36}{:>10}", "Heuristic", "Parameters", "Signals");
    println!(
        "{:<14}{:<36}{:>10}",
        "MACD",
        format!(
            "fast {}, slow {}, signal {}",
            macd_params.fast_len, macd_params.slow_len, macd_params.signal_len
        ),
        macd_count
    );
    println!(
        "{:<14}{:<36}{:>10}",
        "RSI",
        format!(
            "length {}, thresholds {}/{}",
            rsi_params.length, RSI_LOW, RSI_HIGH
        ),
        rsi_count
    );
    println!(
        "{:<14}{:<36}{:>10}",
        "price-action", "every non-doji candle close", pa_count
    );
    Ok(EXIT_OK)
}

/// `report`: rebuild the report document from stored record files.
pub fn cmd_report(args: &ReportArgs) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(&args.shared)?;
    let mut records = Vec::new();
    for path in &args.records {
        records.extend(read_records_file(path)?);
    }
    if records.is_empty() {
        return Err(CliError::Data("malformed results: no records found".into()));
    }
    if let Some(trades_path) = &args.trades {
        apply_trade_counts(&mut records, trades_path)?;
    }

    let report = reporting::build_report(&records, &cfg.report, cfg.top_n)?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(
        cfg.output_dir.join("report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    fs::write(cfg.output_dir.join("report.txt"), report.to_text())?;
    report.write_csv_sections(&cfg.output_dir.join("report"))?;
    print!("{}", report.to_text());
    Ok(EXIT_OK)
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Split a simulation label like `EURJPY-H1` into its parts.
fn parse_simulation_label(label: &str) -> Result<(String, Granularity), CliError> {
    let (code, gran) = label.rsplit_once('-').ok_or_else(|| {
        CliError::Data(format!("malformed results: bad simulation label {label:?}"))
    })?;
    let granularity = Granularity::from_str(gran)
        .map_err(|e| CliError::Data(format!("malformed results: {e}")))?;
    Ok((code.to_string(), granularity))
}

/// Read a record CSV in either the full results schema or the
/// balance-table schema (`simulation,balance,balance_pips,reversal`).
pub fn read_records_file(path: &Path) -> Result<Vec<ReportRecord>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("malformed results: {} is empty", path.display())))?
        .trim()
        .to_ascii_lowercase();

    let bad_row = |line: usize, why: String| {
        CliError::Data(format!(
            "malformed results: {} line {line}: {why}",
            path.display()
        ))
    };

    let mut records = Vec::new();
    if header == RESULTS_HEADER {
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let n = i + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(bad_row(n, format!("expected 10 fields, found {}", f.len())));
            }
            let granularity = Granularity::from_str(f[1]).map_err(|e| bad_row(n, e.to_string()))?;
            let heuristic = HeuristicId::from_str(f[2]).map_err(|e| bad_row(n, e.to_string()))?;
            let dec = |t: &str, what: &str| {
                Decimal::from_str(t.trim())
                    .map_err(|e| bad_row(n, format!("bad {what} {t:?}: {e}")))
            };
            let int = |t: &str, what: &str| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|e| bad_row(n, format!("bad {what} {t:?}: {e}")))
            };
            let n_long = int(f[8], "n_long")?;
            let n_short = int(f[9], "n_short")?;
            records.push(ReportRecord {
                instrument: f[0].trim().to_string(),
                granularity,
                heuristic,
                balance_pips: dec(f[7], "final_balance_pips")?,
                trades: Some(n_long + n_short),
                sl_pips: Some(dec(f[3], "sl_pips")?),
                tp_pips: Some(dec(f[4], "tp_pips")?),
            });
        }
    } else if header.starts_with("simulation,") && header.contains("balance_pips") {
        // columns: simulation,balance,balance_pips,reversal
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let n = i + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad_row(n, format!("expected 4 fields, found {}", f.len())));
            }
            let (instrument, granularity) = parse_simulation_label(f[0].trim())?;
            let heuristic = HeuristicId::from_str(f[3]).map_err(|e| bad_row(n, e.to_string()))?;
            let balance_pips = Decimal::from_str(f[2].trim())
                .map_err(|e| bad_row(n, format!("bad balance_pips {:?}: {e}", f[2])))?;
            records.push(ReportRecord {
                instrument,
                granularity,
                heuristic,
                balance_pips,
                trades: None,
                sl_pips: None,
                tp_pips: None,
            });
        }
    } else {
        return Err(CliError::Data(format!(
            "malformed results: {} has an unrecognized header {header:?}",
            path.display()
        )));
    }
    Ok(records)
}

/// Merge a trade-count CSV (`simulation,heuristic,trades[,...]`) into the
/// records by `(simulation, heuristic)`.
pub fn apply_trade_counts(records: &mut [ReportRecord], path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("malformed results: {} is empty", path.display())))?
        .trim()
        .to_ascii_lowercase();
    if !header.starts_with("simulation,") || !header.contains("trades") {
        return Err(CliError::Data(format!(
            "malformed results: {} has an unrecognized header {header:?}",
            path.display()
        )));
    }
    let mut counts: HashMap<(String, HeuristicId), u64> = HashMap::new();
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 3 {
            return Err(CliError::Data(format!(
                "malformed results: {} line {n}: expected at least 3 fields",
                path.display()
            )));
        }
        let heuristic = HeuristicId::from_str(f[1]).map_err(|e| {
            CliError::Data(format!(
                "malformed results: {} line {n}: {e}",
                path.display()
            ))
        })?;
        let trades = f[2].trim().parse::<u64>().map_err(|e| {
            CliError::Data(format!(
                "malformed results: {} line {n}: bad trades {:?}: {e}",
                path.display(),
                f[2]
            ))
        })?;
        counts.insert((f[0].trim().to_string(), heuristic), trades);
    }
    for r in records.iter_mut() {
        if let Some(&t) = counts.get(&(r.simulation(), r.heuristic)) {
            r.trades = Some(t);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pip_and_range_parsing() {
        assert_eq!(parse_pips("2.0", "spread").unwrap(), Pips::from_whole(2));
        assert_eq!(parse_pips("3.5", "sl").unwrap(), Pips::from_tenths(35));
        assert!(parse_pips("0.05", "sl").is_err());
        assert!(parse_pips("abc", "sl").is_err());

        let (min, max, step) = parse_range("3:50:1", "sl-range").unwrap();
        assert_eq!(
            (min, max, step),
            (
                Pips::from_whole(3),
                Pips::from_whole(50),
                Pips::from_whole(1)
            )
        );
        let (_, _, step) = parse_range("3:50", "sl-range").unwrap();
        assert_eq!(step, Pips::from_whole(1));
        assert!(parse_range("3", "sl-range").is_err());
    }

    #[test]
    fn defaults_mirror_the_reference_setup() {
        let cfg = RunConfig::resolve(&SharedArgs::default()).unwrap();
        assert_eq!(cfg.instruments.len(), 3);
        assert_eq!(cfg.granularities.len(), 6);
        assert_eq!(cfg.heuristics.len(), 2);
        assert_eq!(cfg.spread_pips, Pips::from_whole(2));
        assert_eq!(cfg.grid.count(), 2_304);
        assert_eq!(cfg.intra_candle_policy, IntraCandlePolicy::Pessimistic);
        assert_eq!(cfg.max_total_loss_pips, None);
        assert_eq!(cfg.report.total_days, 3_653);
        assert_eq!(cfg.top_n, 4);
    }

    #[test]
    fn unknown_instrument_is_a_config_error() {
        let args = SharedArgs {
            instruments: Some(vec!["XXXYYY".into()]),
            ..SharedArgs::default()
        };
        match RunConfig::resolve(&args) {
            Err(CliError::Config(msg)) => assert!(msg.contains("XXXYYY")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn simulation_label_parses() {
        let (code, gran) = parse_simulation_label("EURJPY-H12").unwrap();
        assert_eq!(code, "EURJPY");
        assert_eq!(gran, Granularity::H12);
        assert!(parse_simulation_label("EURJPY").is_err());
    }
}
