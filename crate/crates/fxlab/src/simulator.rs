//! Deterministic replay of one candle series under one heuristic and one
//! TP/SL configuration.
//!
//! Trade model. Series prices are bid quotes and the spread is the only
//! trading cost, charged once per round trip: a long fills at `bid +
//! spread` and exits at bid, a short fills at bid and exits at `bid +
//! spread`. A signal on candle `i` fills at candle `i+1`'s open (signals
//! on the last candle are discarded). TP/SL trigger levels are placed so
//! that hitting them realizes exactly `+tp` / `-sl` pips net of spread;
//! the fill candle itself is tested against its full range. When a candle
//! opens beyond a level the trade still exits at the level price, so the
//! exact +/- pip invariant holds for every TP/SL exit. At most one
//! position is open at any time; whatever is open at the end of data is
//! force-closed at the last close. All pip arithmetic is integer tenths
//! of a pip, so results are exact and independent of evaluation order.

use serde::Serialize;
use thiserror::Error;

use crate::heuristics::{self, HeuristicId, TradeSignal};
use crate::market_data::{Candle, CandleSeries, Pips, Price};

/// Resolution rule for candles whose range contains both the TP and the
/// SL level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntraCandlePolicy {
    /// Assume the stop fires first (default; never overstates profit).
    #[default]
    Pessimistic,
    /// Assume the take-profit fires first.
    Optimistic,
    /// Fire the level nearer the candle's open; ties go to the stop.
    OpenProximity,
}

impl IntraCandlePolicy {
    pub const ALL: [IntraCandlePolicy; 3] = [
        IntraCandlePolicy::Pessimistic,
        IntraCandlePolicy::Optimistic,
        IntraCandlePolicy::OpenProximity,
    ];

    pub fn code(self) -> &'static str {
        match self {
            IntraCandlePolicy::Pessimistic => "pessimistic",
            IntraCandlePolicy::Optimistic => "optimistic",
            IntraCandlePolicy::OpenProximity => "open-proximity",
        }
    }
}

impl std::fmt::Display for IntraCandlePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for IntraCandlePolicy {
    type Err = SimulatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pessimistic" => Ok(IntraCandlePolicy::Pessimistic),
            "optimistic" => Ok(IntraCandlePolicy::Optimistic),
            "open-proximity" | "open_proximity" | "openproximity" => {
                Ok(IntraCandlePolicy::OpenProximity)
            }
            _ => Err(SimulatorError::InvalidConfig {
                reason: format!("unknown intra-candle policy {s:?}"),
            }),
        }
    }
}

/// Trade parameters for one simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TradeConfig {
    pub tp_pips: Pips,
    pub sl_pips: Pips,
    /// Broker spread; fixed for the whole run (default 2.0 pips).
    pub spread_pips: Pips,
    /// Ruin cutoff: abort once the running balance reaches this loss.
    pub max_total_loss_pips: Option<Pips>,
    pub intra_candle_policy: IntraCandlePolicy,
}

impl TradeConfig {
    pub const DEFAULT_SPREAD: Pips = Pips::from_tenths(20);

    pub fn new(tp_pips: Pips, sl_pips: Pips) -> TradeConfig {
        TradeConfig {
            tp_pips,
            sl_pips,
            spread_pips: TradeConfig::DEFAULT_SPREAD,
            max_total_loss_pips: None,
            intra_candle_policy: IntraCandlePolicy::default(),
        }
    }

    pub fn with_levels(mut self, sl_pips: Pips, tp_pips: Pips) -> TradeConfig {
        self.sl_pips = sl_pips;
        self.tp_pips = tp_pips;
        self
    }

    pub fn validate(&self) -> Result<(), SimulatorError> {
        if !self.tp_pips.is_positive() {
            return Err(SimulatorError::InvalidConfig {
                reason: format!("take profit must be positive, got {}", self.tp_pips),
            });
        }
        if !self.sl_pips.is_positive() {
            return Err(SimulatorError::InvalidConfig {
                reason: format!("stop loss must be positive, got {}", self.sl_pips),
            });
        }
        if self.spread_pips < Pips::ZERO {
            return Err(SimulatorError::InvalidConfig {
                reason: format!("spread must be non-negative, got {}", self.spread_pips),
            });
        }
        if let Some(mtl) = self.max_total_loss_pips {
            if !mtl.is_positive() {
                return Err(SimulatorError::InvalidConfig {
                    reason: format!("max total loss must be positive, got {mtl}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Long,
    Short,
}

impl Direction {
    pub fn code(self) -> &'static str {
        match self {
            Direction::Long => "long",
            Direction::Short => "short",
        }
    }
}

/// An open position with its bid-quote trigger levels.
///
/// Levels are bid prices chosen so that an exit at the level realizes
/// exactly the configured pips net of spread. Relative to the entry fill
/// the TP always sits `tp` pips favorable and the SL `sl` pips adverse;
/// a short whose stop is tighter than the spread trips on its own fill
/// candle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub direction: Direction,
    /// Bid quote at entry.
    pub entry_bid: Price,
    /// Actual fill (entry ask for longs, entry bid for shorts).
    pub entry_fill: Price,
    pub opened_at_index: usize,
    pub tp_level: Price,
    pub sl_level: Price,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    TakeProfit,
    StopLoss,
    EndOfData,
}

impl ExitReason {
    pub fn code(self) -> &'static str {
        match self {
            ExitReason::TakeProfit => "take_profit",
            ExitReason::StopLoss => "stop_loss",
            ExitReason::EndOfData => "end_of_data",
        }
    }
}

/// One completed round trip. `pnl_pips` is spread-inclusive: TakeProfit
/// exits contribute exactly `+tp`, StopLoss exactly `-sl`, and only
/// EndOfData exits take other values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosedTrade {
    pub direction: Direction,
    pub opened_at_index: usize,
    pub closed_at_index: usize,
    pub entry_fill: Price,
    pub exit: Price,
    pub pnl_pips: Pips,
    pub exit_reason: ExitReason,
}

/// Outcome of one simulation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationResult {
    /// Sum of positive trade pnls.
    pub total_profit_pips: Pips,
    /// Sum of the magnitudes of negative trade pnls.
    pub total_loss_pips: Pips,
    pub n_long: u64,
    pub n_short: u64,
    /// Always equals `total_profit_pips - total_loss_pips`.
    pub final_balance_pips: Pips,
    /// True when the run was aborted by the ruin cutoff.
    pub ruined: bool,
    pub trade_log: Option<Vec<ClosedTrade>>,
}

impl SimulationResult {
    pub fn trade_count(&self) -> u64 {
        self.n_long + self.n_short
    }
}

#[derive(Debug, Error)]
pub enum SimulatorError {
    #[error("cannot simulate an empty series")]
    EmptySeries,
    #[error("invalid trade config: {reason}")]
    InvalidConfig { reason: String },
}

/// Replay `series` under `heuristic` and `config`.
pub fn simulate(
    series: &CandleSeries,
    heuristic: HeuristicId,
    config: &TradeConfig,
    keep_log: bool,
) -> Result<SimulationResult, SimulatorError> {
    config.validate()?;
    let candles = series.candles();
    if candles.is_empty() {
        return Err(SimulatorError::EmptySeries);
    }

    let mut balance = Pips::ZERO;
    let mut profit = Pips::ZERO;
    let mut loss = Pips::ZERO;
    let mut n_long = 0u64;
    let mut n_short = 0u64;
    let mut ruined = false;
    let mut log: Vec<ClosedTrade> = Vec::new();

    let mut position: Option<Position> = None;
    let mut pending: Option<Direction> = None;

    let mut record = |trade: ClosedTrade,
                      balance: &mut Pips,
                      profit: &mut Pips,
                      loss: &mut Pips,
                      n_long: &mut u64,
                      n_short: &mut u64| {
        *balance += trade.pnl_pips;
        if trade.pnl_pips >= Pips::ZERO {
            *profit += trade.pnl_pips;
        } else {
            *loss += trade.pnl_pips.abs();
        }
        match trade.direction {
            Direction::Long => *n_long += 1,
            Direction::Short => *n_short += 1,
        }
        if keep_log {
            log.push(trade);
        }
    };

    'replay: for (i, candle) in candles.iter().enumerate() {
        if let Some(direction) = pending.take() {
            position = Some(open_position(direction, candle.open, i, config));
        }

        if let Some(pos) = position {
            if let Some((exit, reason)) = check_exit(&pos, candle, config) {
                let trade = close_trade(&pos, i, exit, reason);
                record(
                    trade,
                    &mut balance,
                    &mut profit,
                    &mut loss,
                    &mut n_long,
                    &mut n_short,
                );
                position = None;
                if let Some(mtl) = config.max_total_loss_pips {
                    if balance <= -mtl {
                        ruined = true;
                        break 'replay;
                    }
                }
            }
        }

        let signal = heuristics::evaluate(heuristic, candle, position.is_some());
        let direction = match signal {
            TradeSignal::Long => Some(Direction::Long),
            TradeSignal::Short => Some(Direction::Short),
            TradeSignal::NoTrade => None,
        };
        // a signal on the last candle has no next open to fill at
        if i + 1 < candles.len() {
            pending = direction;
        }
    }

    if let Some(pos) = position {
        let last = candles.len() - 1;
        let close_bid = candles[last].close;
        let exit = match pos.direction {
            Direction::Long => close_bid,
            Direction::Short => close_bid.offset(config.spread_pips),
        };
        let trade = close_trade(&pos, last, exit, ExitReason::EndOfData);
        record(
            trade,
            &mut balance,
            &mut profit,
            &mut loss,
            &mut n_long,
            &mut n_short,
        );
        if let Some(mtl) = config.max_total_loss_pips {
            if balance <= -mtl {
                ruined = true;
            }
        }
    }

    Ok(SimulationResult {
        total_profit_pips: profit,
        total_loss_pips: loss,
        n_long,
        n_short,
        final_balance_pips: balance,
        ruined,
        trade_log: keep_log.then_some(log),
    })
}

fn open_position(
    direction: Direction,
    open_bid: Price,
    index: usize,
    config: &TradeConfig,
) -> Position {
    let spread = config.spread_pips;
    match direction {
        Direction::Long => {
            let fill = open_bid.offset(spread); // buy at ask
            Position {
                direction,
                entry_bid: open_bid,
                entry_fill: fill,
                opened_at_index: index,
                tp_level: fill.offset(config.tp_pips),
                sl_level: fill.offset(-config.sl_pips),
            }
        }
        Direction::Short => {
            let fill = open_bid; // sell at bid
            Position {
                direction,
                entry_bid: open_bid,
                entry_fill: fill,
                opened_at_index: index,
                // exit is a buy at ask = bid + spread, so shift the bid
                // triggers by the spread to keep the pnl exact
                tp_level: fill.offset(-(config.tp_pips + spread)),
                sl_level: fill.offset(config.sl_pips - spread),
            }
        }
    }
}

/// Test the candle's full range against the position's trigger levels.
/// Returns the exit fill price (spread already applied) and reason.
fn check_exit(
    position: &Position,
    candle: &Candle,
    config: &TradeConfig,
) -> Option<(Price, ExitReason)> {
    let (tp_hit, sl_hit) = match position.direction {
        Direction::Long => (
            candle.high >= position.tp_level,
            candle.low <= position.sl_level,
        ),
        Direction::Short => (
            candle.low <= position.tp_level,
            candle.high >= position.sl_level,
        ),
    };
    let reason = match (tp_hit, sl_hit) {
        (false, false) => return None,
        (true, false) => ExitReason::TakeProfit,
        (false, true) => ExitReason::StopLoss,
        (true, true) => match config.intra_candle_policy {
            IntraCandlePolicy::Pessimistic => ExitReason::StopLoss,
            IntraCandlePolicy::Optimistic => ExitReason::TakeProfit,
            IntraCandlePolicy::OpenProximity => {
                let tp_dist = (position.tp_level.0 - candle.open.0).abs();
                let sl_dist = (position.sl_level.0 - candle.open.0).abs();
                if tp_dist < sl_dist {
                    ExitReason::TakeProfit
                } else {
                    ExitReason::StopLoss
                }
            }
        },
    };
    let level_bid = match reason {
        ExitReason::TakeProfit => position.tp_level,
        ExitReason::StopLoss => position.sl_level,
        ExitReason::EndOfData => unreachable!(),
    };
    let exit_fill = match position.direction {
        Direction::Long => level_bid,
        Direction::Short => level_bid.offset(config.spread_pips),
    };
    Some((exit_fill, reason))
}

fn close_trade(position: &Position, index: usize, exit: Price, reason: ExitReason) -> ClosedTrade {
    let pnl = match position.direction {
        Direction::Long => exit.diff(position.entry_fill),
        Direction::Short => position.entry_fill.diff(exit),
    };
    ClosedTrade {
        direction: position.direction,
        opened_at_index: position.opened_at_index,
        closed_at_index: index,
        entry_fill: position.entry_fill,
        exit,
        pnl_pips: pnl,
        exit_reason: reason,
    }
}

/// Render a trade log as the export CSV
/// (`index_open,index_close,direction,entry,exit,pnl_pips,reason`).
pub fn trade_log_csv(series: &CandleSeries, trades: &[ClosedTrade]) -> String {
    let instrument = series.instrument();
    let mut out = String::from("index_open,index_close,direction,entry,exit,pnl_pips,reason\n");
    for t in trades {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            t.opened_at_index,
            t.closed_at_index,
            t.direction.code(),
            instrument.format_price(t.entry_fill),
            instrument.format_price(t.exit),
            t.pnl_pips,
            t.exit_reason.code(),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{Granularity, Instrument};
    use chrono::{Duration, TimeZone, Utc};

    fn series(candles: Vec<(i64, i64, i64, i64)>) -> CandleSeries {
        let start = Utc.with_ymd_and_hms(2019, 11, 1, 0, 0, 0).unwrap();
        let candles = candles
            .into_iter()
            .enumerate()
            .map(|(i, (o, h, l, c))| Candle {
                timestamp: start + Duration::hours(i as i64),
                open: Price(o),
                high: Price(h),
                low: Price(l),
                close: Price(c),
                volume: None,
            })
            .collect();
        CandleSeries::new(
            Instrument::builtin("EURUSD").unwrap(),
            Granularity::H1,
            candles,
        )
        .unwrap()
    }

    fn config(tp: i64, sl: i64) -> TradeConfig {
        TradeConfig::new(Pips::from_whole(tp), Pips::from_whole(sl))
    }

    #[test]
    fn all_doji_series_never_trades() {
        let s = series(vec![(110_000, 110_050, 109_950, 110_000); 20]);
        for h in HeuristicId::ALL {
            let r = simulate(&s, h, &config(3, 10), true).unwrap();
            assert_eq!(r.trade_count(), 0);
            assert_eq!(r.final_balance_pips, Pips::ZERO);
            assert!(!r.ruined);
            assert!(r.trade_log.unwrap().is_empty());
        }
    }

    #[test]
    fn green_candle_long_hits_take_profit() {
        // candle 1 green -> h1 longs at candle 2's open (1.1010 bid,
        // fills at 1.1012 ask with the 2-pip spread); TP needs the bid at
        // 1.1015, well inside candle 2's range
        let s = series(vec![
            (110_000, 110_110, 109_990, 110_100),
            (110_100, 110_600, 110_080, 110_500),
        ]);
        let r = simulate(&s, HeuristicId::TrendContinuation, &config(3, 10), true).unwrap();
        assert_eq!(r.n_long, 1);
        assert_eq!(r.n_short, 0);
        assert_eq!(r.final_balance_pips, Pips::from_whole(3));
        assert_eq!(r.total_profit_pips, Pips::from_whole(3));
        assert_eq!(r.total_loss_pips, Pips::ZERO);
        let log = r.trade_log.unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].entry_fill, Price(110_120));
        assert_eq!(log[0].exit, Price(110_150));
        assert_eq!(log[0].exit_reason, ExitReason::TakeProfit);
    }

    #[test]
    fn short_take_profit_is_exact() {
        // candle 1 green -> h2 shorts at candle 2's open; TP at
        // bid = entry - (tp + spread) = 1.1010 - 0.0005 = 1.1005
        let s = series(vec![
            (110_000, 110_110, 109_990, 110_100),
            (110_100, 110_120, 110_000, 110_020),
        ]);
        let r = simulate(&s, HeuristicId::TrendReversal, &config(3, 10), true).unwrap();
        assert_eq!(r.n_short, 1);
        assert_eq!(r.final_balance_pips, Pips::from_whole(3));
        let log = r.trade_log.unwrap();
        assert_eq!(log[0].entry_fill, Price(110_100));
        // exit fill is the ask: level 1.1005 + spread
        assert_eq!(log[0].exit, Price(110_070));
        assert_eq!(log[0].pnl_pips, Pips::from_whole(3));
    }

    #[test]
    fn stop_loss_is_exact() {
        let s = series(vec![
            (110_000, 110_110, 109_990, 110_100),
            (110_100, 110_130, 109_800, 109_900),
        ]);
        let r = simulate(&s, HeuristicId::TrendContinuation, &config(3, 10), true).unwrap();
        assert_eq!(r.final_balance_pips, Pips::from_whole(-10));
        assert_eq!(r.total_loss_pips, Pips::from_whole(10));
        let log = r.trade_log.unwrap();
        assert_eq!(log[0].exit_reason, ExitReason::StopLoss);
        // sl level = fill 1.1012 - 10 pips
        assert_eq!(log[0].exit, Price(110_020));
    }

    #[test]
    fn intra_candle_policies_resolve_double_hits() {
        // candle 2 spans both levels for the long opened at its open
        let both = vec![
            (110_000, 110_110, 109_990, 110_100),
            (110_100, 110_600, 109_800, 110_000),
        ];
        let pess = simulate(
            &series(both.clone()),
            HeuristicId::TrendContinuation,
            &config(3, 10),
            false,
        )
        .unwrap();
        assert_eq!(pess.final_balance_pips, Pips::from_whole(-10));

        let mut cfg = config(3, 10);
        cfg.intra_candle_policy = IntraCandlePolicy::Optimistic;
        let opt = simulate(
            &series(both.clone()),
            HeuristicId::TrendContinuation,
            &cfg,
            false,
        )
        .unwrap();
        assert_eq!(opt.final_balance_pips, Pips::from_whole(3));

        // open proximity: tp level at 1.10150 is 3.0 pips from the open,
        // sl level at 1.10020 is 10 pips away -> TP fires
        cfg.intra_candle_policy = IntraCandlePolicy::OpenProximity;
        let prox = simulate(&series(both), HeuristicId::TrendContinuation, &cfg, false).unwrap();
        assert_eq!(prox.final_balance_pips, Pips::from_whole(3));
    }

    #[test]
    fn gap_through_exits_at_the_level() {
        // candle 2 opens far above the TP level: trade still exits at the
        // level price for exactly +tp
        let s = series(vec![
            (110_000, 110_110, 109_990, 110_100),
            (110_100, 110_150, 110_050, 110_100),
            (111_000, 111_200, 110_900, 111_100),
        ]);
        // signal on candle 1 fills at candle 2's open; candle 2 range
        // misses both levels; candle 3 gaps over the TP
        let r = simulate(&s, HeuristicId::TrendContinuation, &config(3, 50), true).unwrap();
        let log = r.trade_log.unwrap();
        assert_eq!(log[0].exit_reason, ExitReason::TakeProfit);
        assert_eq!(log[0].pnl_pips, Pips::from_whole(3));
        assert_eq!(log[0].exit, Price(110_150));
    }

    #[test]
    fn end_of_data_closes_open_position() {
        let s = series(vec![
            (110_000, 110_110, 109_990, 110_100),
            (110_100, 110_150, 110_050, 110_100),
        ]);
        let r = simulate(&s, HeuristicId::TrendContinuation, &config(50, 50), true).unwrap();
        let log = r.trade_log.unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].exit_reason, ExitReason::EndOfData);
        // long: filled at 1.1012 ask, closed at the 1.1010 closing bid ->
        // the unmoved price costs exactly the spread
        assert_eq!(log[0].pnl_pips, Pips::from_whole(-2));
        assert_eq!(r.final_balance_pips, Pips::from_tenths(-20));
    }

    #[test]
    fn signal_on_last_candle_is_discarded() {
        let s = series(vec![(110_000, 110_110, 109_990, 110_100)]);
        let r = simulate(&s, HeuristicId::TrendContinuation, &config(3, 10), true).unwrap();
        assert_eq!(r.trade_count(), 0);
    }

    #[test]
    fn ruin_cutoff_halts_the_run() {
        // first trade stops out for -10 pips, cutoff at 1 pip: the later
        // profitable setup must never be traded
        let s = series(vec![
            (110_000, 110_110, 109_990, 110_100),
            (110_100, 110_130, 109_800, 109_900),
            (109_900, 110_000, 109_850, 109_990),
            (109_990, 110_600, 109_980, 110_500),
        ]);
        let mut cfg = config(3, 10);
        cfg.max_total_loss_pips = Some(Pips::from_whole(1));
        let r = simulate(&s, HeuristicId::TrendContinuation, &cfg, true).unwrap();
        assert!(r.ruined);
        assert_eq!(r.trade_count(), 1);
        assert_eq!(r.final_balance_pips, Pips::from_whole(-10));
    }

    #[test]
    fn reentry_after_exit_in_same_candle() {
        // trade exits within candle 2; candle 2's own close signals again
        // and fills at candle 3's open
        let s = series(vec![
            (110_000, 110_110, 109_990, 110_100),
            (110_100, 110_600, 110_080, 110_500),
            (110_500, 111_100, 110_480, 111_000),
        ]);
        let r = simulate(&s, HeuristicId::TrendContinuation, &config(3, 10), true).unwrap();
        assert_eq!(r.n_long, 2);
        assert_eq!(r.final_balance_pips, Pips::from_whole(6));
        let log = r.trade_log.unwrap();
        assert!(log[0].closed_at_index < log[1].opened_at_index);
    }

    #[test]
    fn empty_series_is_an_error() {
        let s = CandleSeries::new(
            Instrument::builtin("EURUSD").unwrap(),
            Granularity::H1,
            Vec::new(),
        )
        .unwrap();
        assert!(matches!(
            simulate(&s, HeuristicId::TrendContinuation, &config(3, 10), false),
            Err(SimulatorError::EmptySeries)
        ));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let s = series(vec![(110_000, 110_110, 109_990, 110_100)]);
        let bad = TradeConfig::new(Pips::ZERO, Pips::from_whole(10));
        assert!(matches!(
            simulate(&s, HeuristicId::TrendContinuation, &bad, false),
            Err(SimulatorError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn conservation_holds() {
        let s = series(vec![
            (110_000, 110_110, 109_990, 110_100),
            (110_100, 110_600, 110_080, 110_500),
            (110_500, 110_520, 109_900, 110_000),
            (110_000, 110_400, 109_980, 110_390),
            (110_390, 110_420, 110_340, 110_400),
        ]);
        for h in HeuristicId::ALL {
            let r = simulate(&s, h, &config(3, 10), true).unwrap();
            assert_eq!(
                r.final_balance_pips,
                r.total_profit_pips - r.total_loss_pips
            );
            let sum = r
                .trade_log
                .as_ref()
                .unwrap()
                .iter()
                .fold(Pips::ZERO, |acc, t| acc + t.pnl_pips);
            assert_eq!(sum, r.final_balance_pips);
        }
    }
}
