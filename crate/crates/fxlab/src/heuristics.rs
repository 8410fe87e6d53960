//! The two price-action heuristic prototypes.
//!
//! Both map a just-closed candle to a trade decision using only the
//! candle body direction: `h1` (trend continuation) trades with the
//! candle, `h2` (trend reversal) trades against it. Doji candles and
//! candles closing while a position is open never signal.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::market_data::Candle;

/// Decision produced by a heuristic for one closed candle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeSignal {
    Long,
    Short,
    NoTrade,
}

/// Identifier for a registered heuristic prototype.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HeuristicId {
    /// `h1`: trade in the direction of the just-closed candle.
    TrendContinuation,
    /// `h2`: trade against the direction of the just-closed candle.
    TrendReversal,
}

impl HeuristicId {
    pub const ALL: [HeuristicId; 2] = [HeuristicId::TrendContinuation, HeuristicId::TrendReversal];

    pub fn code(self) -> &'static str {
        match self {
            HeuristicId::TrendContinuation => "h1",
            HeuristicId::TrendReversal => "h2",
        }
    }

    /// Map the boolean `Reverse`/`Reversal` column used by result
    /// fixtures: `FALSE` -> h1, `TRUE` -> h2.
    pub fn from_reverse_flag(reverse: bool) -> HeuristicId {
        if reverse {
            HeuristicId::TrendReversal
        } else {
            HeuristicId::TrendContinuation
        }
    }

    pub fn is_reverse(self) -> bool {
        self == HeuristicId::TrendReversal
    }
}

impl fmt::Display for HeuristicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for HeuristicId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

#[derive(Debug, Error)]
#[error("unknown heuristic {code:?} (expected h1 or h2)")]
pub struct UnknownHeuristic {
    pub code: String,
}

impl FromStr for HeuristicId {
    type Err = UnknownHeuristic;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "h1" => Ok(HeuristicId::TrendContinuation),
            "h2" => Ok(HeuristicId::TrendReversal),
            "false" => Ok(HeuristicId::TrendContinuation),
            "true" => Ok(HeuristicId::TrendReversal),
            _ => Err(UnknownHeuristic {
                code: s.to_string(),
            }),
        }
    }
}

/// Evaluate a heuristic on a closed candle.
///
/// With a position already open there is never a new signal (one trade
/// at a time). Otherwise the decision depends only on open vs close;
/// high, low, and timestamp never matter.
pub fn evaluate(heuristic: HeuristicId, candle: &Candle, has_open_position: bool) -> TradeSignal {
    if has_open_position || candle.is_doji() {
        return TradeSignal::NoTrade;
    }
    let green = candle.close > candle.open;
    match (heuristic, green) {
        (HeuristicId::TrendContinuation, true) => TradeSignal::Long,
        (HeuristicId::TrendContinuation, false) => TradeSignal::Short,
        (HeuristicId::TrendReversal, true) => TradeSignal::Short,
        (HeuristicId::TrendReversal, false) => TradeSignal::Long,
    }
}
