//! Result aggregation: pips conversion, per-day averages, per-heuristic
//! summaries, and the ranked best/worst tables.
//!
//! Aggregation operates on [`ReportRecord`]s, which carry exact decimal
//! balances so that externally recorded result tables (with sub-pipette
//! precision) flow through unchanged. The per-day denominator defaults to
//! the 10-year calendar day count `7*365 + 3*366 = 3653`; the 5/7
//! trading-day variant is an explicit flag, never applied silently.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;
use serde::Serialize;
use thiserror::Error;

use crate::heuristics::HeuristicId;
use crate::market_data::{Granularity, Instrument};
use crate::optimizer::OptimizationRecord;

/// Denominators for per-day rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportConfig {
    /// Calendar days covered by the result set.
    pub total_days: u32,
    /// Divide by `total_days * 5/7` instead (market closed on weekends).
    pub trading_day_adjust: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        // the 10-year window: 7 regular years + 3 leap years
        ReportConfig {
            total_days: 7 * 365 + 3 * 366,
            trading_day_adjust: false,
        }
    }
}

/// One result row as consumed by the reporting pipeline.
///
/// `balance_pips` is an exact decimal; `trades`, `sl_pips`, and `tp_pips`
/// are optional because externally recorded balance tables may not carry
/// them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRecord {
    pub instrument: String,
    pub granularity: Granularity,
    pub heuristic: HeuristicId,
    pub balance_pips: Decimal,
    pub trades: Option<u64>,
    pub sl_pips: Option<Decimal>,
    pub tp_pips: Option<Decimal>,
}

impl ReportRecord {
    pub fn simulation(&self) -> String {
        format!("{}-{}", self.instrument, self.granularity)
    }
}

impl From<&OptimizationRecord> for ReportRecord {
    fn from(rec: &OptimizationRecord) -> Self {
        ReportRecord {
            instrument: rec.key.instrument.code().to_string(),
            granularity: rec.key.granularity,
            heuristic: rec.heuristic,
            balance_pips: rec.final_balance_pips.to_decimal(),
            trades: Some(rec.trade_count()),
            sl_pips: Some(rec.sl_pips.to_decimal()),
            tp_pips: Some(rec.tp_pips.to_decimal()),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportingError {
    #[error("no records to report on")]
    NoRecords,
    #[error("no records for heuristic {heuristic}")]
    MissingHeuristic { heuristic: HeuristicId },
    #[error("need at least {need} records with trade counts, have {have}")]
    InsufficientRecords { have: usize, need: usize },
}

/// Convert a balance in price units to pips: `balance / pip_size`,
/// computed exactly as a decimal-point shift.
pub fn to_pips(balance_price_units: Decimal, instrument: &Instrument) -> Decimal {
    let shift = Decimal::from(10i64.pow(instrument.pip_size().normalize().scale()));
    (balance_price_units * shift).normalize()
}

/// Per-day rate of a pips or trade total.
pub fn per_day(value: f64, cfg: &ReportConfig) -> f64 {
    let mut rate = value / cfg.total_days as f64;
    if cfg.trading_day_adjust {
        rate *= 7.0 / 5.0;
    }
    rate
}

/// Aggregates for one heuristic over its best-balance records.
///
/// Standard deviations are sample (n-1) statistics over record balances
/// and trade counts; with fewer than two samples they are reported as 0
/// with `stddev_defined = false`.
#[derive(Debug, Clone, Serialize)]
pub struct HeuristicSummary {
    pub heuristic: HeuristicId,
    pub records: usize,
    pub mean_balance_pips: f64,
    pub stddev_balance_pips: f64,
    pub mean_trades: f64,
    pub stddev_trades: f64,
    pub stddev_defined: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n-1); `None` with fewer than two samples.
fn sample_stddev(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    Some(var.sqrt())
}

/// Per-heuristic means and deviations over `records`; every heuristic in
/// `expected` must be represented.
pub fn summarize_heuristics(
    records: &[ReportRecord],
    expected: &[HeuristicId],
) -> Result<Vec<HeuristicSummary>, ReportingError> {
    let mut out = Vec::new();
    let mut wanted: Vec<HeuristicId> = expected.to_vec();
    wanted.sort();
    wanted.dedup();
    for heuristic in wanted {
        let subset: Vec<&ReportRecord> = records
            .iter()
            .filter(|r| r.heuristic == heuristic)
            .collect();
        if subset.is_empty() {
            return Err(ReportingError::MissingHeuristic { heuristic });
        }
        let balances: Vec<f64> = subset
            .iter()
            .map(|r| r.balance_pips.to_f64().unwrap_or(f64::NAN))
            .collect();
        let trades: Vec<f64> = subset
            .iter()
            .filter_map(|r| r.trades.map(|t| t as f64))
            .collect();
        let stddev_balance = sample_stddev(&balances);
        let stddev_trades = if trades.is_empty() {
            None
        } else {
            sample_stddev(&trades)
        };
        out.push(HeuristicSummary {
            heuristic,
            records: subset.len(),
            mean_balance_pips: mean(&balances),
            stddev_balance_pips: stddev_balance.unwrap_or(0.0),
            mean_trades: if trades.is_empty() {
                0.0
            } else {
                mean(&trades)
            },
            stddev_trades: stddev_trades.unwrap_or(0.0),
            stddev_defined: stddev_balance.is_some() && stddev_trades.is_some(),
        });
    }
    Ok(out)
}

/// One row of a ranked performance table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedRow {
    pub instrument: String,
    pub period: Granularity,
    pub heuristic: HeuristicId,
    pub balance_pips: Decimal,
    pub avg_pips_per_day: f64,
}

fn ranked_rows(records: &[ReportRecord], cfg: &ReportConfig, descending: bool) -> Vec<RankedRow> {
    let mut sorted: Vec<&ReportRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        let by_balance = if descending {
            b.balance_pips.cmp(&a.balance_pips)
        } else {
            a.balance_pips.cmp(&b.balance_pips)
        };
        by_balance
            .then_with(|| a.instrument.cmp(&b.instrument))
            .then_with(|| a.granularity.cmp(&b.granularity))
            .then_with(|| a.heuristic.cmp(&b.heuristic))
    });
    sorted
        .into_iter()
        .map(|r| RankedRow {
            instrument: r.instrument.clone(),
            period: r.granularity,
            heuristic: r.heuristic,
            balance_pips: r.balance_pips,
            avg_pips_per_day: per_day(r.balance_pips.to_f64().unwrap_or(f64::NAN), cfg),
        })
        .collect()
}

/// The `n` best records by final balance (descending); balance ties are
/// ordered by instrument then granularity.
pub fn top_n(records: &[ReportRecord], n: usize, cfg: &ReportConfig) -> Vec<RankedRow> {
    let mut rows = ranked_rows(records, cfg, true);
    rows.truncate(n);
    rows
}

/// The `n` worst records by final balance (ascending).
pub fn bottom_n(records: &[ReportRecord], n: usize, cfg: &ReportConfig) -> Vec<RankedRow> {
    let mut rows = ranked_rows(records, cfg, false);
    rows.truncate(n);
    rows
}

/// Trade-count statistics over a set of records (sample stddev, n-1).
#[derive(Debug, Clone, Serialize)]
pub struct TradesSummary {
    pub records: usize,
    pub mean_trades: f64,
    pub stddev_trades: f64,
    pub mean_trades_per_day: f64,
}

pub fn trades_summary(
    records: &[ReportRecord],
    cfg: &ReportConfig,
) -> Result<TradesSummary, ReportingError> {
    let counts: Vec<f64> = records
        .iter()
        .filter_map(|r| r.trades.map(|t| t as f64))
        .collect();
    if counts.len() < 2 {
        return Err(ReportingError::InsufficientRecords {
            have: counts.len(),
            need: 2,
        });
    }
    let m = mean(&counts);
    Ok(TradesSummary {
        records: counts.len(),
        mean_trades: m,
        stddev_trades: sample_stddev(&counts).expect("len >= 2"),
        mean_trades_per_day: per_day(m, cfg),
    })
}

/// Optimal-settings row: the winning SL/TP for one simulation case, in
/// pips and in price units.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalSettingRow {
    pub simulation: String,
    pub heuristic: HeuristicId,
    pub sl_pips: Decimal,
    pub tp_pips: Decimal,
    /// Present when the instrument's pip size is known.
    pub sl_price_units: Option<Decimal>,
    pub tp_price_units: Option<Decimal>,
}

/// Trade-count row (one per simulation case).
#[derive(Debug, Clone, Serialize)]
pub struct TradeCountRow {
    pub simulation: String,
    pub heuristic: HeuristicId,
    pub trades: u64,
    pub avg_trades_per_day: f64,
}

/// The full report document.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: ReportConfig,
    pub best_performers: Vec<RankedRow>,
    pub worst_performers: Vec<RankedRow>,
    pub heuristic_summary: Vec<HeuristicSummary>,
    /// Trade statistics over the best performers.
    pub trades_summary: Option<TradesSummary>,
    /// Winning SL/TP settings for every positive-balance case.
    pub optimal_settings: Vec<OptimalSettingRow>,
    /// Trade counts for every case, best balance first.
    pub trades: Vec<TradeCountRow>,
}

/// Assemble the report document from result records.
pub fn build_report(
    records: &[ReportRecord],
    cfg: &ReportConfig,
    top: usize,
) -> Result<Report, ReportingError> {
    if records.is_empty() {
        return Err(ReportingError::NoRecords);
    }
    let mut present: Vec<HeuristicId> = records.iter().map(|r| r.heuristic).collect();
    present.sort();
    present.dedup();
    let heuristic_summary = summarize_heuristics(records, &present)?;

    let best = top_n(records, top, cfg);
    let worst = bottom_n(records, top, cfg);

    // trade stats over the records behind the best rows
    let best_records: Vec<ReportRecord> = best
        .iter()
        .filter_map(|row| {
            records.iter().find(|r| {
                r.instrument == row.instrument
                    && r.granularity == row.period
                    && r.heuristic == row.heuristic
                    && r.balance_pips == row.balance_pips
            })
        })
        .cloned()
        .collect();
    let trades_stats = trades_summary(&best_records, cfg).ok();

    let ordered = ranked_rows(records, cfg, true);
    let find = |row: &RankedRow| -> Option<&ReportRecord> {
        records.iter().find(|r| {
            r.instrument == row.instrument
                && r.granularity == row.period
                && r.heuristic == row.heuristic
                && r.balance_pips == row.balance_pips
        })
    };

    let mut optimal_settings = Vec::new();
    let mut trade_rows = Vec::new();
    for row in &ordered {
        let Some(rec) = find(row) else { continue };
        if rec.balance_pips > Decimal::ZERO {
            if let (Some(sl), Some(tp)) = (rec.sl_pips, rec.tp_pips) {
                let pip_size = Instrument::builtin(&rec.instrument).map(|i| i.pip_size());
                optimal_settings.push(OptimalSettingRow {
                    simulation: rec.simulation(),
                    heuristic: rec.heuristic,
                    sl_pips: sl,
                    tp_pips: tp,
                    sl_price_units: pip_size.map(|p| (sl * p).normalize()),
                    tp_price_units: pip_size.map(|p| (tp * p).normalize()),
                });
            }
        }
        if let Some(t) = rec.trades {
            trade_rows.push(TradeCountRow {
                simulation: rec.simulation(),
                heuristic: rec.heuristic,
                trades: t,
                avg_trades_per_day: per_day(t as f64, cfg),
            });
        }
    }

    Ok(Report {
        config: *cfg,
        best_performers: best,
        worst_performers: worst,
        heuristic_summary,
        trades_summary: trades_stats,
        optimal_settings,
        trades: trade_rows,
    })
}

impl Report {
    /// Plain-text rendering with one section per table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Best performers");
        let _ = writeln!(
            s,
            "{:<12}{:<8}{:<11}{:>16}{:>14}",
            "Instrument", "Period", "Heuristic", "Balance (pips)", "Pips/day"
        );
        for r in &self.best_performers {
            let _ = writeln!(
                s,
                "{:<12}{:<8}{:<11}{:>16}{:>14.2}",
                r.instrument,
                r.period.code(),
                r.heuristic,
                r.balance_pips,
                r.avg_pips_per_day
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "Worst performers");
        let _ = writeln!(
            s,
            "{:<12}{:<8}{:<11}{:>16}{:>14}",
            "Instrument", "Period", "Heuristic", "Balance (pips)", "Pips/day"
        );
        for r in &self.worst_performers {
            let _ = writeln!(
                s,
                "{:<12}{:<8}{:<11}{:>16}{:>14.2}",
                r.instrument,
                r.period.code(),
                r.heuristic,
                r.balance_pips,
                r.avg_pips_per_day
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "Heuristic summary");
        let _ = writeln!(
            s,
            "{:<11}{:>9}{:>18}{:>16}{:>13}{:>14}",
            "Heuristic", "Records", "Mean bal (pips)", "Bal sigma", "Mean trades", "Trades sigma"
        );
        for h in &self.heuristic_summary {
            let _ = writeln!(
                s,
                "{:<11}{:>9}{:>18.0}{:>16.0}{:>13.0}{:>14.0}",
                h.heuristic.code(),
                h.records,
                h.mean_balance_pips,
                h.stddev_balance_pips,
                h.mean_trades,
                h.stddev_trades
            );
        }
        if let Some(t) = &self.trades_summary {
            let _ = writeln!(s);
            let _ = writeln!(
                s,
                "Trades among the best {} performers",
                self.best_performers.len()
            );
            let _ = writeln!(s, "{:<28}{:>12}{:>12}", "", "Value", "Sigma");
            let _ = writeln!(
                s,
                "{:<28}{:>12.0}{:>12.0}",
                "Trades over the period", t.mean_trades, t.stddev_trades
            );
            let _ = writeln!(
                s,
                "{:<28}{:>12.2}{:>12}",
                "Average trades per day", t.mean_trades_per_day, "-"
            );
        }
        if !self.optimal_settings.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(s, "Optimal settings (positive balances)");
            let _ = writeln!(
                s,
                "{:<14}{:<11}{:>12}{:>12}{:>12}{:>12}",
                "Simulation", "Heuristic", "SL (price)", "TP (price)", "SL (pips)", "TP (pips)"
            );
            for r in &self.optimal_settings {
                let fmt_opt =
                    |d: Option<Decimal>| d.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    s,
                    "{:<14}{:<11}{:>12}{:>12}{:>12}{:>12}",
                    r.simulation,
                    r.heuristic.code(),
                    fmt_opt(r.sl_price_units),
                    fmt_opt(r.tp_price_units),
                    r.sl_pips,
                    r.tp_pips
                );
            }
        }
        if !self.trades.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(s, "Trades per simulation case");
            let _ = writeln!(
                s,
                "{:<14}{:<11}{:>10}{:>14}",
                "Simulation", "Heuristic", "Trades", "Trades/day"
            );
            for r in &self.trades {
                let _ = writeln!(
                    s,
                    "{:<14}{:<11}{:>10}{:>14.2}",
                    r.simulation,
                    r.heuristic.code(),
                    r.trades,
                    r.avg_trades_per_day
                );
            }
        }
        s
    }

    /// Write one CSV file per section into `dir`.
    pub fn write_csv_sections(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let ranked_csv = |rows: &[RankedRow]| {
            let mut s = String::from("instrument,period,heuristic,balance_pips,avg_pips_per_day\n");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{:.2}",
                    r.instrument,
                    r.period.code(),
                    r.heuristic,
                    r.balance_pips,
                    r.avg_pips_per_day
                );
            }
            s
        };
        std::fs::write(
            dir.join("best_performers.csv"),
            ranked_csv(&self.best_performers),
        )?;
        std::fs::write(
            dir.join("worst_performers.csv"),
            ranked_csv(&self.worst_performers),
        )?;

        let mut s = String::from(
            "heuristic,records,mean_balance_pips,stddev_balance_pips,mean_trades,stddev_trades,stddev_defined\n",
        );
        for h in &self.heuristic_summary {
            let _ = writeln!(
                s,
                "{},{},{:.2},{:.2},{:.2},{:.2},{}",
                h.heuristic.code(),
                h.records,
                h.mean_balance_pips,
                h.stddev_balance_pips,
                h.mean_trades,
                h.stddev_trades,
                h.stddev_defined
            );
        }
        std::fs::write(dir.join("heuristic_summary.csv"), s)?;

        let mut s =
            String::from("simulation,heuristic,sl_pips,tp_pips,sl_price_units,tp_price_units\n");
        for r in &self.optimal_settings {
            let fmt_opt = |d: Option<Decimal>| d.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.simulation,
                r.heuristic.code(),
                r.sl_pips,
                r.tp_pips,
                fmt_opt(r.sl_price_units),
                fmt_opt(r.tp_price_units)
            );
        }
        std::fs::write(dir.join("optimal_settings.csv"), s)?;

        let mut s = String::from("simulation,heuristic,trades,avg_trades_per_day\n");
        for r in &self.trades {
            let _ = writeln!(
                s,
                "{},{},{},{:.2}",
                r.simulation,
                r.heuristic.code(),
                r.trades,
                r.avg_trades_per_day
            );
        }
        std::fs::write(dir.join("trades.csv"), s)?;

        if let Some(t) = &self.trades_summary {
            let s = format!(
                "records,mean_trades,stddev_trades,mean_trades_per_day\n{},{:.2},{:.2},{:.2}\n",
                t.records, t.mean_trades, t.stddev_trades, t.mean_trades_per_day
            );
            std::fs::write(dir.join("trades_summary.csv"), s)?;
        }
        Ok(())
    }
}

/// Group records by heuristic (used by callers that need raw subsets).
pub fn by_heuristic(records: &[ReportRecord]) -> BTreeMap<HeuristicId, Vec<&ReportRecord>> {
    let mut map: BTreeMap<HeuristicId, Vec<&ReportRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.heuristic).or_default().push(r);
    }
    map
}
